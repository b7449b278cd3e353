//! Linearization about a standing wave `phi` at frequency `omega`:
//!
//! `L- f = (-Delta)^beta f - omega f - I[phi^p] phi^{p-2} f`,
//! `L+ f = L- f - (p-2) I[phi^p] phi^{p-2} f - p phi^{p-1} I[phi^{p-1} f]`,
//!
//! and the Hamiltonian operator `J L` with `J = [[0, 1], [-1, 0]]`, so that
//! `J L (v1, v2) = (L- v2, -L+ v1)`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dot, Field, GridSpec};
use crate::krylov::{dense_symmetric, lanczos_largest, minres, norm, pcg, sorted_eig};
use crate::params::ModelParams;
use crate::solver::GroundState;
use crate::spectral::{derivative, MultiplierKind, MultiplierOp, RieszOp};

/// Grids with at most this many points use dense eigendecompositions.
pub const DENSE_LIMIT: usize = 2048;
/// `|lambda| < KERNEL_TOL |omega|` counts as kernel.
pub const KERNEL_TOL: f64 = 1e-5;
/// `lambda < -NEGATIVE_TOL |omega|` counts as negative.
pub const NEGATIVE_TOL: f64 = 1e-6;
pub const EIG_RESIDUAL_TOL: f64 = 1e-7;
/// Certification threshold for `||J L v - lambda v|| / ||v||`.
pub const GROWTH_RESIDUAL_TOL: f64 = 1e-6;
/// `-lambda^2 < -GROWTH_TOL omega^2` counts as a growing mode.
pub const GROWTH_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Operator {
    LPlus,
    LMinus,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    #[default]
    Auto,
    Dense,
    MatrixFree,
}

impl EigenMethod {
    fn resolve(self, n: usize) -> Self {
        match self {
            EigenMethod::Auto if n <= DENSE_LIMIT => EigenMethod::Dense,
            EigenMethod::Auto => EigenMethod::MatrixFree,
            m => m,
        }
    }
}

struct DenseSpectrum {
    matrix: DMatrix<f64>,
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

pub struct LinearizedPair {
    params: ModelParams,
    omega: f64,
    phi: Field,
    lap: MultiplierOp,
    riesz: RieszOp,
    /// `I[phi^p] phi^{p-2}`, zero where `phi` vanishes.
    v2: Vec<f64>,
    phi_pm1: Vec<f64>,
    dense_plus: OnceLock<DenseSpectrum>,
    dense_minus: OnceLock<DenseSpectrum>,
}

impl std::fmt::Debug for LinearizedPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearizedPair")
            .field("params", &self.params)
            .field("omega", &self.omega)
            .field("grid", self.phi.grid())
            .finish_non_exhaustive()
    }
}

impl LinearizedPair {
    pub fn new(gs: &GroundState) -> Result<Self> {
        Self::from_profile(&gs.params, &gs.phi, gs.omega)
    }

    pub fn from_profile(params: &ModelParams, phi: &Field, omega: f64) -> Result<Self> {
        params.validate()?;
        let grid = phi.grid();
        if grid.ndim() != params.d {
            return Err(Error::GridMismatch(format!(
                "profile has {} axes but d = {}",
                grid.ndim(),
                params.d
            )));
        }
        if !(omega < 0.0) {
            return Err(Error::param("omega", format!("{omega} must be negative")));
        }
        let p = params.p;
        let lap = MultiplierOp::frac_lap(grid, params.beta)?;
        let riesz = RieszOp::new(grid, params.alpha)?;
        let a: Vec<f64> = phi.values().iter().map(|v| v.abs()).collect();
        let rho: Vec<f64> = a.iter().map(|v| v.powf(p)).collect();
        let pot = riesz.convolve_slice(&rho);
        let v2 = a
            .iter()
            .zip(&pot)
            .map(|(&x, &w)| if x > 0.0 { w * x.powf(p - 2.0) } else { 0.0 })
            .collect();
        let phi_pm1 = a.iter().map(|x| x.powf(p - 1.0)).collect();
        Ok(Self {
            params: params.clone(),
            omega,
            phi: Field::from_parts(grid.clone(), a),
            lap,
            riesz,
            v2,
            phi_pm1,
            dense_plus: OnceLock::new(),
            dense_minus: OnceLock::new(),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn phi(&self) -> &Field {
        &self.phi
    }

    pub fn grid(&self) -> &GridSpec {
        self.phi.grid()
    }

    /// `I[phi^p] phi^{p-2}` on the grid.
    pub fn v2(&self) -> &[f64] {
        &self.v2
    }

    pub(crate) fn apply_slice(&self, op: Operator, f: &[f64]) -> Vec<f64> {
        let mut out = self.lap.apply_slice(f);
        let p = self.params.p;
        let local = match op {
            Operator::LMinus => 1.0,
            Operator::LPlus => p - 1.0,
        };
        for ((o, &x), &v) in out.iter_mut().zip(f).zip(&self.v2) {
            *o -= self.omega * x + local * v * x;
        }
        if op == Operator::LPlus {
            let g: Vec<f64> = self.phi_pm1.iter().zip(f).map(|(a, b)| a * b).collect();
            let w = self.riesz.convolve_slice(&g);
            for ((o, a), w) in out.iter_mut().zip(&self.phi_pm1).zip(&w) {
                *o -= p * a * w;
            }
        }
        out
    }

    pub fn apply(&self, op: Operator, f: &Field) -> Result<Field> {
        self.grid().ensure_same(f.grid())?;
        Ok(Field::from_parts(self.grid().clone(), self.apply_slice(op, f.values())))
    }

    pub fn apply_lplus(&self, f: &Field) -> Result<Field> {
        self.apply(Operator::LPlus, f)
    }

    pub fn apply_lminus(&self, f: &Field) -> Result<Field> {
        self.apply(Operator::LMinus, f)
    }

    /// Guaranteed lower bound on the spectrum of `op`.
    pub fn lower_bound(&self, op: Operator) -> f64 {
        let vmax = self.v2.iter().fold(0.0f64, |m, v| m.max(*v));
        match op {
            Operator::LMinus => -self.omega - vmax,
            Operator::LPlus => {
                let p = self.params.p;
                let amax = self.phi_pm1.iter().fold(0.0f64, |m, v| m.max(*v));
                -self.omega - (p - 1.0) * vmax - p * amax * amax * self.riesz.norm_bound()
            }
        }
    }

    /// Bottom of the essential spectrum of `(L+, L-)`, from the value of the
    /// local potential at the box boundary.
    pub fn essential_edges(&self) -> EssentialEdges {
        let edge = self
            .grid()
            .boundary_indices()
            .into_iter()
            .map(|i| self.v2[i])
            .fold(0.0f64, f64::max);
        let p = self.params.p;
        EssentialEdges {
            lplus: -self.omega - (p - 1.0) * edge,
            lminus: -self.omega - edge,
        }
    }

    fn dense(&self, op: Operator) -> &DenseSpectrum {
        let cell = match op {
            Operator::LPlus => &self.dense_plus,
            Operator::LMinus => &self.dense_minus,
        };
        cell.get_or_init(|| {
            let matrix = dense_symmetric(self.grid().len(), |e| self.apply_slice(op, e));
            let (values, vectors) = sorted_eig(matrix.clone());
            DenseSpectrum {
                matrix,
                values,
                vectors,
            }
        })
    }

    fn resolvent(&self, shift: f64) -> Result<MultiplierOp> {
        MultiplierOp::with_fft(
            self.grid(),
            self.lap.fft().clone(),
            MultiplierKind::Resolvent {
                beta: self.params.beta,
                shift,
            },
        )
    }

    /// `(op - sigma)^{-1} x` for `sigma` below the spectrum.
    fn shift_invert(&self, op: Operator, sigma: f64, precond: &MultiplierOp, x: &[f64]) -> Result<Vec<f64>> {
        let out = pcg(
            |y| {
                let mut a = self.apply_slice(op, y);
                for (ai, yi) in a.iter_mut().zip(y) {
                    *ai -= sigma * yi;
                }
                a
            },
            |r| precond.apply_slice(r),
            x,
            1e-10,
            5000,
        )?;
        if out.residual > 1e-9 {
            return Err(Error::NonConvergence {
                what: "shifted solve",
                iterations: out.iterations,
                residual: out.residual,
            });
        }
        Ok(out.x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EssentialEdges {
    #[serde(rename = "Lplus")]
    pub lplus: f64,
    #[serde(rename = "Lminus")]
    pub lminus: f64,
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    /// Unit `L2` norm.
    pub vector: Field,
    /// `||A v - lambda v|| / ||v||`.
    pub residual: f64,
}

fn unit_field(grid: &GridSpec, mut v: Vec<f64>) -> Field {
    let s = 1.0 / (norm(&v) * grid.cell_volume().sqrt());
    for x in &mut v {
        *x *= s;
    }
    Field::from_parts(grid.clone(), v)
}

fn eig_residual(pair: &LinearizedPair, op: Operator, lambda: f64, v: &[f64]) -> f64 {
    let av = pair.apply_slice(op, v);
    let r: Vec<f64> = av.iter().zip(v).map(|(a, x)| a - lambda * x).collect();
    norm(&r) / norm(v)
}

pub fn extreme_eigs(pair: &LinearizedPair, op: Operator, how_many: usize) -> Result<Vec<EigenPair>> {
    extreme_eigs_with(pair, op, how_many, EigenMethod::Auto)
}

/// The `how_many` lowest eigenpairs of `op`, ascending.
pub fn extreme_eigs_with(
    pair: &LinearizedPair,
    op: Operator,
    how_many: usize,
    method: EigenMethod,
) -> Result<Vec<EigenPair>> {
    let n = pair.grid().len();
    let k = how_many.min(n);
    match method.resolve(n) {
        EigenMethod::Dense => {
            let ds = pair.dense(op);
            Ok((0..k)
                .map(|i| {
                    let v: Vec<f64> = ds.vectors.column(i).iter().copied().collect();
                    let residual = eig_residual(pair, op, ds.values[i], &v);
                    EigenPair {
                        value: ds.values[i],
                        vector: unit_field(pair.grid(), v),
                        residual,
                    }
                })
                .collect())
        }
        _ => lowest_matrix_free(pair, op, k),
    }
}

fn start_vector(pair: &LinearizedPair, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let peak = pair.phi.sup_norm();
    pair.phi
        .values()
        .iter()
        .map(|&x| x + 1e-2 * peak * rng.gen_range(-1.0..1.0))
        .collect()
}

/// Appends the normalized component of `v` orthogonal to `basis`, unless it
/// is already (numerically) spanned.
fn extend_basis(basis: &mut Vec<Vec<f64>>, v: &[f64]) {
    let mut u = v.to_vec();
    let n0 = norm(&u);
    for _ in 0..2 {
        for b in basis.iter() {
            let c = dot(b, &u);
            for (a, x) in u.iter_mut().zip(b) {
                *a -= c * x;
            }
        }
    }
    let nu = norm(&u);
    if nu > 1e-6 * n0 {
        basis.push(u.into_iter().map(|x| x / nu).collect());
    }
}

fn orthonormalize(vecs: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    for i in 0..vecs.len() {
        for _ in 0..3 {
            for _ in 0..2 {
                for j in 0..i {
                    let c = dot(&vecs[i], &vecs[j]);
                    let (head, tail) = vecs.split_at_mut(i);
                    for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                        *a -= c * b;
                    }
                }
            }
            let nv = norm(&vecs[i]);
            if nv > 1e-10 {
                for a in &mut vecs[i] {
                    *a /= nv;
                }
                break;
            }
            for a in &mut vecs[i] {
                *a = rng.gen_range(-1.0..1.0);
            }
        }
    }
}

/// Shift-invert Lanczos on `(op - sigma)^{-1}` with `sigma` below a guaranteed
/// lower bound, then block inverse iteration with Rayleigh-Ritz at a shift
/// just below the lowest estimate.
fn lowest_matrix_free(pair: &LinearizedPair, op: Operator, k: usize) -> Result<Vec<EigenPair>> {
    let n = pair.grid().len();
    let w = pair.omega.abs();
    let block = (k + 2).min(n);
    let sigma0 = pair.lower_bound(op) - 0.1 * w;
    let pre0 = pair.resolvent(-pair.omega - sigma0)?;
    let start = start_vector(pair, 0x5eed);
    let ritz = lanczos_largest(
        |x| pair.shift_invert(op, sigma0, &pre0, x),
        &start,
        block,
        n.min(400),
        1e-10,
        |_| {},
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed + 1);
    let lowest = sigma0 + 1.0 / ritz[0].0;
    let mut vecs: Vec<Vec<f64>> = ritz.into_iter().map(|(_, v)| v).collect();
    while vecs.len() < block {
        vecs.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }

    let sigma = (lowest - 0.1 * w).max(sigma0);
    let pre = pair.resolvent(-pair.omega - sigma)?;
    let mut worst = f64::INFINITY;
    for it in 0..200 {
        orthonormalize(&mut vecs, &mut rng);
        let av: Vec<Vec<f64>> = vecs.iter().map(|v| pair.apply_slice(op, v)).collect();
        let m = vecs.len();
        let h = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&vecs[i], &av[j]) + dot(&vecs[j], &av[i])));
        let (vals, q) = sorted_eig(h);
        let rotate = |src: &[Vec<f64>]| -> Vec<Vec<f64>> {
            (0..m)
                .map(|c| {
                    let mut out = vec![0.0; n];
                    for (r, s) in src.iter().enumerate() {
                        let coef = q[(r, c)];
                        for (o, x) in out.iter_mut().zip(s) {
                            *o += coef * x;
                        }
                    }
                    out
                })
                .collect()
        };
        let nv = rotate(&vecs);
        let nav = rotate(&av);
        let res: Vec<f64> = (0..m)
            .map(|i| {
                let r: Vec<f64> = nav[i].iter().zip(&nv[i]).map(|(a, x)| a - vals[i] * x).collect();
                norm(&r) / norm(&nv[i])
            })
            .collect();
        worst = res[..k].iter().fold(0.0f64, |a, &b| a.max(b));
        if worst < EIG_RESIDUAL_TOL * 0.1 || (it > 0 && worst < EIG_RESIDUAL_TOL && it >= 100) {
            return Ok((0..k)
                .map(|i| EigenPair {
                    value: vals[i],
                    vector: unit_field(pair.grid(), nv[i].clone()),
                    residual: res[i],
                })
                .collect());
        }
        vecs = nv
            .iter()
            .map(|v| pair.shift_invert(op, sigma, &pre, v))
            .collect::<Result<_>>()?;
    }
    Err(Error::NonConvergence {
        what: "eigenpair refinement",
        iterations: 200,
        residual: worst,
    })
}

/// `<L+ phi, phi>`; equals `-(2p - 2) K` at a solution.
pub fn rayleigh_lplus_phi(pair: &LinearizedPair) -> f64 {
    let phi = pair.phi.values();
    dot(&pair.apply_slice(Operator::LPlus, phi), phi) * pair.grid().cell_volume()
}

/// Spectral derivatives `d phi / d x_a`, the translation generators.
pub fn translation_modes(pair: &LinearizedPair) -> Result<Vec<Field>> {
    (0..pair.grid().ndim()).map(|a| derivative(&pair.phi, a)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VkSolve {
    /// `<L+^{-1} phi, phi>`.
    pub value: f64,
    /// `||L+ psi - phi|| / ||phi||`.
    pub residual: f64,
    pub negative_eigenvalues: Vec<f64>,
    /// Number of kernel directions projected out.
    pub deflated: usize,
    /// Largest `|<z, phi>| / ||phi||` over the projected kernel directions.
    pub kernel_overlap: f64,
    pub iterations: usize,
}

pub fn vk_quantity(pair: &LinearizedPair) -> Result<VkSolve> {
    let eigs = extreme_eigs(pair, Operator::LPlus, pair.grid().ndim() + 3)?;
    vk_from_eigs(pair, &eigs)
}

/// Solves `L+ psi = phi` with the negative directions of `L+` inverted
/// exactly and the kernel projected out, by preconditioned MINRES.
pub fn vk_from_eigs(pair: &LinearizedPair, eigs: &[EigenPair]) -> Result<VkSolve> {
    let w = pair.omega.abs();
    let n = pair.grid().len();
    let vol = pair.grid().cell_volume();
    let phi = pair.phi.values().to_vec();
    let phin = norm(&phi);

    let unit = |f: &Field| -> Vec<f64> {
        let v = f.values();
        let s = norm(v);
        v.iter().map(|x| x / s).collect()
    };
    let negatives: Vec<(f64, Vec<f64>)> = eigs
        .iter()
        .filter(|e| e.value < -NEGATIVE_TOL * w)
        .map(|e| (e.value, unit(&e.vector)))
        .collect();
    let mut kernel: Vec<Vec<f64>> = translation_modes(pair)?.iter().map(unit).collect();
    kernel.extend(
        eigs.iter()
            .filter(|e| e.value.abs() < KERNEL_TOL * w)
            .map(|e| unit(&e.vector)),
    );
    let mut all: Vec<Vec<f64>> = Vec::new();
    for (_, e) in &negatives {
        extend_basis(&mut all, e);
    }
    let nneg = all.len();
    for z in &kernel {
        extend_basis(&mut all, z);
    }
    let kernel_basis = &all[nneg..];
    let overlap = kernel_basis
        .iter()
        .map(|z| dot(z, &phi).abs() / phin)
        .fold(0.0f64, f64::max);
    if overlap > 1e-4 {
        return Err(Error::IllConditioned(format!(
            "phi overlaps the kernel of L+ by {overlap:.3e}"
        )));
    }

    let project = |v: &mut Vec<f64>| {
        for z in &all {
            let c = dot(z, v);
            for (a, b) in v.iter_mut().zip(z) {
                *a -= c * b;
            }
        }
    };
    let pre = pair.resolvent(w)?;
    let mut psi = vec![0.0; n];
    let mut rhs = phi.clone();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    for _ in 0..4 {
        for (lam, e) in &negatives {
            let c = dot(e, &rhs) / lam;
            for (a, b) in psi.iter_mut().zip(e) {
                *a += c * b;
            }
        }
        let mut b = rhs.clone();
        project(&mut b);
        let out = minres(
            |x| {
                let mut y = x.to_vec();
                project(&mut y);
                let mut a = pair.apply_slice(Operator::LPlus, &y);
                project(&mut a);
                a
            },
            |r| {
                let mut y = r.to_vec();
                project(&mut y);
                let mut z = pre.apply_slice(&y);
                project(&mut z);
                z
            },
            &b,
            1e-10,
            5000,
        )?;
        iterations += out.iterations;
        for (a, x) in psi.iter_mut().zip(&out.x) {
            *a += x;
        }
        let lpsi = pair.apply_slice(Operator::LPlus, &psi);
        rhs = phi.iter().zip(&lpsi).map(|(f, l)| f - l).collect();
        residual = norm(&rhs) / phin;
        if residual < 1e-9 {
            break;
        }
    }
    if residual > 1e-8 {
        return Err(Error::NonConvergence {
            what: "L+ psi = phi",
            iterations,
            residual,
        });
    }
    Ok(VkSolve {
        value: dot(&psi, &phi) * vol,
        residual,
        negative_eigenvalues: negatives.iter().map(|(l, _)| *l).collect(),
        deflated: kernel_basis.len(),
        kernel_overlap: overlap,
        iterations,
    })
}

/// `-Gamma ||phi||^2 / (4 beta (p-1) |omega|)`, from `<L+^{-1} phi, phi> = (1/2) d||phi_omega||^2 / d omega`.
pub fn vk_closed_form(params: &ModelParams, mass: f64, omega: f64) -> f64 {
    -params.gamma_big() * mass / (4.0 * params.beta * (params.p - 1.0) * omega.abs())
}

/// Mass of the `omega = -1` member of the family through a profile of mass `mass` at `omega`.
pub fn classical_mass(params: &ModelParams, mass: f64, omega: f64) -> f64 {
    let s = params.gamma_big() / (2.0 * params.beta * (params.p - 1.0));
    mass * omega.abs().powf(-s)
}

/// `D11` of the Klein-Gordon-Hartree wave built from the `omega = -1` profile,
/// `||phi||^2 + 4 w^2 / (1 - w^2) <L+^{-1} phi, phi>`.
///
/// `vk` is the quantity for a profile of mass `mass` at frequency `omega`; it is
/// transported to `omega = -1` through the scaling invariant `vk |omega| / mass`.
pub fn d11_kg(params: &ModelParams, vk: f64, mass: f64, omega: f64, kg_omega: f64) -> Result<f64> {
    if !params.is_classical() {
        return Err(Error::WrongRegime(format!(
            "Klein-Gordon-Hartree needs beta = 1, got {}",
            params.beta
        )));
    }
    if !(kg_omega.abs() < 1.0) {
        return Err(Error::param("kg_omega", format!("|{kg_omega}| must be below 1")));
    }
    let m1 = classical_mass(params, mass, omega);
    let vk1 = vk * omega.abs() / mass * m1;
    let w2 = kg_omega * kg_omega;
    Ok(m1 + 4.0 * w2 / (1.0 - w2) * vk1)
}

/// `||phi||^2 (1 - Gamma w^2 / ((p-1)(1 - w^2)))` for the `omega = -1` profile.
pub fn d11_kg_closed_form(params: &ModelParams, classical_mass: f64, kg_omega: f64) -> f64 {
    let w2 = kg_omega * kg_omega;
    classical_mass * (1.0 - params.gamma_big() * w2 / ((params.p - 1.0) * (1.0 - w2)))
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowingMode {
    pub rate: f64,
    /// `||J L v - rate v|| / ||v||`.
    pub residual: f64,
    /// Number of distinct positive rates found above tolerance.
    pub multiplicity: usize,
    #[serde(skip)]
    pub v1: Field,
    #[serde(skip)]
    pub v2: Field,
}

fn hamiltonian_residual(pair: &LinearizedPair, rate: f64, v1: &[f64], v2: &[f64]) -> f64 {
    let a = pair.apply_slice(Operator::LMinus, v2);
    let b = pair.apply_slice(Operator::LPlus, v1);
    let r1: f64 = a.iter().zip(v1).map(|(x, y)| (x - rate * y).powi(2)).sum();
    let r2: f64 = b.iter().zip(v2).map(|(x, y)| (-x - rate * y).powi(2)).sum();
    let nv: f64 = v1.iter().chain(v2).map(|x| x * x).sum();
    ((r1 + r2) / nv).sqrt()
}

fn build_mode(pair: &LinearizedPair, nu: f64, v1: Vec<f64>, multiplicity: usize) -> GrowingMode {
    let rate = (-nu).sqrt();
    let v2: Vec<f64> = pair
        .apply_slice(Operator::LPlus, &v1)
        .into_iter()
        .map(|x| -x / rate)
        .collect();
    let residual = hamiltonian_residual(pair, rate, &v1, &v2);
    let grid = pair.grid().clone();
    GrowingMode {
        rate,
        residual,
        multiplicity,
        v1: Field::from_parts(grid.clone(), v1),
        v2: Field::from_parts(grid, v2),
    }
}

pub fn growing_mode(pair: &LinearizedPair) -> Result<Option<GrowingMode>> {
    growing_mode_with(pair, EigenMethod::Auto)
}

/// Real growing mode of `J L`: `L- L+ v1 = -lambda^2 v1`, `v2 = -L+ v1 / lambda`.
pub fn growing_mode_with(pair: &LinearizedPair, method: EigenMethod) -> Result<Option<GrowingMode>> {
    let mode = match method.resolve(pair.grid().len()) {
        EigenMethod::Dense => growing_mode_dense(pair)?,
        _ => growing_mode_pencil(pair)?,
    };
    if let Some(m) = &mode {
        if m.residual >= GROWTH_RESIDUAL_TOL {
            return Err(Error::NonConvergence {
                what: "growing mode certification",
                iterations: 0,
                residual: m.residual,
            });
        }
    }
    Ok(mode)
}

/// `S = R L+ R` with `R = L-^{1/2}`: negative eigenvalues `nu` of `S` give
/// `lambda^2 = -nu` and `v1 = R w`.
fn growing_mode_dense(pair: &LinearizedPair) -> Result<Option<GrowingMode>> {
    let minus = pair.dense(Operator::LMinus);
    let plus = pair.dense(Operator::LPlus);
    let n = minus.values.len();
    let sq = DVector::from_iterator(n, minus.values.iter().map(|&m| m.max(0.0).sqrt()));
    let mut vs = minus.vectors.clone();
    for (j, s) in sq.iter().enumerate() {
        let mut c = vs.column_mut(j);
        c *= *s;
    }
    let r = &vs * minus.vectors.transpose();
    let s = &r * &plus.matrix * &r;
    let s = (&s + s.transpose()) * 0.5;
    let (vals, vecs) = sorted_eig(s);
    let thr = -GROWTH_TOL * pair.omega * pair.omega;
    let count = vals.iter().filter(|&&v| v < thr).count();
    if count == 0 {
        return Ok(None);
    }
    let v1: Vec<f64> = (&r * vecs.column(0)).iter().copied().collect();
    let mut mode = build_mode(pair, vals[0], v1, count);
    if mode.residual > 0.1 * GROWTH_RESIDUAL_TOL {
        // Inverse iteration on L- L+ near -lambda^2.
        let b = &minus.matrix * &plus.matrix;
        let mut nu = vals[0];
        let mut x = DVector::from_column_slice(mode.v1.values());
        for _ in 0..6 {
            let shifted = &b - DMatrix::identity(n, n) * (nu * (1.0 + 1e-10));
            let Some(y) = shifted.lu().solve(&x) else { break };
            x = &y / y.norm();
            nu = (x.transpose() * &b * &x)[(0, 0)];
        }
        let cand = build_mode(pair, nu, x.iter().copied().collect(), count);
        if cand.residual < mode.residual {
            mode = cand;
        }
    }
    Ok(Some(mode))
}

/// Smallest eigenvalue of the pencil `L+ v = nu L-^{-1} v` on the orthogonal
/// complement of `phi` and of `L-^{-1} d_a phi`, by LOBPCG.
fn growing_mode_pencil(pair: &LinearizedPair) -> Result<Option<GrowingMode>> {
    let n = pair.grid().len();
    let w = pair.omega.abs();
    let phi = pair.phi.values();
    let phin = norm(phi);
    let phat: Vec<f64> = phi.iter().map(|x| x / phin).collect();
    let pre = pair.resolvent(w)?;
    let proj_phi = |v: &mut Vec<f64>| {
        let c = dot(&phat, v);
        for (a, b) in v.iter_mut().zip(&phat) {
            *a -= c * b;
        }
    };
    let kinv = |x: &[f64]| -> Result<Vec<f64>> {
        let mut b = x.to_vec();
        proj_phi(&mut b);
        let out = pcg(
            |y| {
                let mut t = y.to_vec();
                proj_phi(&mut t);
                let mut a = pair.apply_slice(Operator::LMinus, &t);
                proj_phi(&mut a);
                a
            },
            |r| {
                let mut t = r.to_vec();
                proj_phi(&mut t);
                let mut z = pre.apply_slice(&t);
                proj_phi(&mut z);
                z
            },
            &b,
            1e-10,
            5000,
        )?;
        Ok(out.x)
    };
    let mut constraints = vec![phat.clone()];
    for m in translation_modes(pair)? {
        constraints.push(kinv(m.values())?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    orthonormalize(&mut constraints, &mut rng);
    let constrain = |v: &mut Vec<f64>| {
        for _ in 0..2 {
            for z in &constraints {
                let c = dot(z, v);
                for (a, b) in v.iter_mut().zip(z) {
                    *a -= c * b;
                }
            }
        }
    };
    let a_op = |x: &[f64]| -> Vec<f64> {
        let mut y = x.to_vec();
        proj_phi(&mut y);
        let mut a = pair.apply_slice(Operator::LPlus, &y);
        proj_phi(&mut a);
        a
    };

    let seed = extreme_eigs(pair, Operator::LPlus, 1)?;
    let mut x = seed[0].vector.values().to_vec();
    for v in &mut x {
        *v += 1e-3 * rng.gen_range(-1.0..1.0) * phin / (n as f64).sqrt();
    }
    constrain(&mut x);
    let mut prev: Option<Vec<f64>> = None;
    let mut rho = f64::INFINITY;
    let mut rnorm = f64::INFINITY;
    for _ in 0..1000 {
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let ax = a_op(&x);
        let bx = kinv(&x)?;
        rho = dot(&x, &ax) / dot(&x, &bx);
        let r: Vec<f64> = ax.iter().zip(&bx).map(|(a, b)| a - rho * b).collect();
        rnorm = norm(&r) / (norm(&ax) + rho.abs() * norm(&bx));
        if rnorm < 1e-9 {
            break;
        }
        let mut t = pre.apply_slice(&r);
        constrain(&mut t);
        let mut basis = vec![x.clone(), t];
        if let Some(p) = &prev {
            let mut p = p.clone();
            constrain(&mut p);
            basis.push(p);
        }
        orthonormalize(&mut basis, &mut rng);
        let m = basis.len();
        let ab: Vec<Vec<f64>> = basis.iter().map(|v| a_op(v)).collect();
        let bb: Vec<Vec<f64>> = basis.iter().map(|v| kinv(v)).collect::<Result<_>>()?;
        let ga = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&basis[i], &ab[j]) + dot(&basis[j], &ab[i])));
        let gb = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&basis[i], &bb[j]) + dot(&basis[j], &bb[i])));
        let Some(chol) = gb.clone().cholesky() else { break };
        let linv = chol.l().try_inverse().expect("Cholesky factor is invertible");
        let c = &linv * &ga * linv.transpose();
        let (_, vecs) = sorted_eig((&c + c.transpose()) * 0.5);
        let y = linv.transpose() * vecs.column(0);
        let mut xn = vec![0.0; n];
        let mut pn = vec![0.0; n];
        for (i, b) in basis.iter().enumerate() {
            for ((xo, po), v) in xn.iter_mut().zip(pn.iter_mut()).zip(b) {
                *xo += y[i] * v;
                if i > 0 {
                    *po += y[i] * v;
                }
            }
        }
        x = xn;
        prev = Some(pn);
    }
    if rnorm > 1e-6 {
        return Err(Error::NonConvergence {
            what: "growing-mode pencil",
            iterations: 1000,
            residual: rnorm,
        });
    }
    if rho >= -GROWTH_TOL * w * w {
        return Ok(None);
    }
    Ok(Some(build_mode(pair, rho, x, 1)))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SpectralOptions {
    /// Lowest eigenvalues computed per operator; at least `d + 3` are used.
    pub how_many: usize,
    pub method: EigenMethod,
    pub kg_omega: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub omega: f64,
    pub method: EigenMethod,
    #[serde(rename = "n_Lplus")]
    pub n_lplus: usize,
    #[serde(rename = "n_Lminus")]
    pub n_lminus: usize,
    #[serde(rename = "lambda_min_Lminus")]
    pub lambda_min_lminus: f64,
    /// `|<v, phi>| / (||v|| ||phi||)` for the lowest `L-` eigenvector.
    #[serde(rename = "Lminus_phi_correlation")]
    pub lminus_phi_correlation: f64,
    #[serde(rename = "kernel_dim_estimate_Lplus")]
    pub kernel_dim_estimate_lplus: usize,
    #[serde(rename = "lowest_Lplus")]
    pub lowest_lplus: Vec<f64>,
    #[serde(rename = "lowest_Lminus")]
    pub lowest_lminus: Vec<f64>,
    pub max_eig_residual: f64,
    /// Largest `||L+ d_a phi|| / ||d_a phi||`.
    pub translation_residual: f64,
    #[serde(rename = "rayleigh_Lplus_phi")]
    pub rayleigh_lplus_phi: f64,
    /// `-(2p - 2) K`.
    pub rayleigh_expected: f64,
    pub vk_quantity: f64,
    pub vk_residual: f64,
    pub vk_closed_form: Option<f64>,
    pub d11_hartree: f64,
    pub d11_kg: Option<f64>,
    pub growing_mode: Option<GrowingMode>,
    pub ess_spectrum_edges: EssentialEdges,
    pub index_count: i64,
}

/// `n(L+) + n(L-) - n(D)` with `n(D) = 1` when `D11 < 0`.
pub fn index_count(report: &SpectralReport) -> i64 {
    let nd = i64::from(report.d11_hartree < 0.0);
    report.n_lplus as i64 + report.n_lminus as i64 - nd
}

pub fn analyze(gs: &GroundState, opts: &SpectralOptions) -> Result<SpectralReport> {
    let pair = LinearizedPair::new(gs)?;
    analyze_pair(&pair, gs.breakdown.k, opts)
}

pub fn analyze_pair(pair: &LinearizedPair, k_value: f64, opts: &SpectralOptions) -> Result<SpectralReport> {
    let params = pair.params();
    let w = pair.omega.abs();
    let d = pair.grid().ndim();
    let k = opts.how_many.max(d + 3);
    let method = opts.method.resolve(pair.grid().len());
    let plus = extreme_eigs_with(pair, Operator::LPlus, k, method)?;
    let minus = extreme_eigs_with(pair, Operator::LMinus, k, method)?;
    let max_eig_residual = plus.iter().chain(&minus).map(|e| e.residual).fold(0.0, f64::max);

    let phi = pair.phi().values();
    let lm = &minus[0];
    let corr = (dot(lm.vector.values(), phi).abs() / (norm(lm.vector.values()) * norm(phi))).min(1.0);

    let translation_residual = translation_modes(pair)?
        .iter()
        .map(|m| {
            let lm = pair.apply_slice(Operator::LPlus, m.values());
            norm(&lm) / norm(m.values())
        })
        .fold(0.0, f64::max);

    let vk = vk_from_eigs(pair, &plus)?;
    let mass = crate::grid::l2_norm_sq(pair.phi());
    let vk_closed = params.is_classical().then(|| vk_closed_form(params, mass, pair.omega));
    let d11_kg = match opts.kg_omega {
        Some(kw) => Some(d11_kg(params, vk.value, mass, pair.omega, kw)?),
        None => None,
    };
    let growing = growing_mode_with(pair, method)?;

    let mut report = SpectralReport {
        omega: pair.omega,
        method,
        n_lplus: plus.iter().filter(|e| e.value < -NEGATIVE_TOL * w).count(),
        n_lminus: minus.iter().filter(|e| e.value < -NEGATIVE_TOL * w).count(),
        lambda_min_lminus: lm.value,
        lminus_phi_correlation: corr,
        kernel_dim_estimate_lplus: plus.iter().filter(|e| e.value.abs() < KERNEL_TOL * w).count(),
        lowest_lplus: plus.iter().map(|e| e.value).collect(),
        lowest_lminus: minus.iter().map(|e| e.value).collect(),
        max_eig_residual,
        translation_residual,
        rayleigh_lplus_phi: rayleigh_lplus_phi(pair),
        rayleigh_expected: -(2.0 * params.p - 2.0) * k_value,
        vk_quantity: vk.value,
        vk_residual: vk.residual,
        vk_closed_form: vk_closed,
        d11_hartree: vk.value,
        d11_kg,
        growing_mode: growing,
        ess_spectrum_edges: pair.essential_edges(),
        index_count: 0,
    };
    report.index_count = index_count(&report);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::inner;
    use crate::solver::{solve_at_frequency, solve_ground_state, SolverOptions};

    fn state(p: f64, n: usize, l: f64) -> GroundState {
        let pr = ModelParams::from_gamma(1, 1.0, 0.5, p, 1.0).unwrap();
        let grid = GridSpec::cube(1, n, l).unwrap();
        solve_ground_state(&pr, &grid, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn self_adjoint_and_lminus_kernel() {
        let gs = state(2.2, 512, 32.0);
        let pair = LinearizedPair::new(&gs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let f = Field::from_fn(gs.grid(), |x| rng.gen_range(-1.0..1.0) * (-x[0] * x[0] / 20.0).exp()).unwrap();
            let g = Field::from_fn(gs.grid(), |x| rng.gen_range(-1.0..1.0) * (-x[0] * x[0] / 30.0).exp()).unwrap();
            for op in [Operator::LPlus, Operator::LMinus] {
                let a = inner(&pair.apply(op, &f).unwrap(), &g).unwrap();
                let b = inner(&f, &pair.apply(op, &g).unwrap()).unwrap();
                assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
            }
        }
        let lphi = pair.apply_lminus(&gs.phi.map(f64::abs)).unwrap();
        assert!(crate::grid::l2_norm(&lphi) < 1e-7);
    }

    #[test]
    fn dense_and_matrix_free_agree() {
        let gs = state(2.2, 1024, 32.0);
        let pair = LinearizedPair::new(&gs).unwrap();
        for op in [Operator::LPlus, Operator::LMinus] {
            let a = extreme_eigs_with(&pair, op, 4, EigenMethod::Dense).unwrap();
            let b = extreme_eigs_with(&pair, op, 4, EigenMethod::MatrixFree).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x.value - y.value).abs() < 1e-8, "{op:?}: {} vs {}", x.value, y.value);
                assert!(y.residual < EIG_RESIDUAL_TOL);
            }
            assert!(pair.lower_bound(op) <= a[0].value);
        }
    }

    #[test]
    fn vk_matches_closed_form_and_dense_sum() {
        let gs = state(2.2, 1024, 32.0);
        let pair = LinearizedPair::new(&gs).unwrap();
        let vk = vk_quantity(&pair).unwrap();
        let mass = crate::grid::l2_norm_sq(pair.phi());
        let exact = vk_closed_form(&gs.params, mass, gs.omega);
        assert!((vk.value - exact).abs() < 5e-2 * exact.abs(), "{} vs {exact}", vk.value);
        assert_eq!(vk.negative_eigenvalues.len(), 1);
        // Spectral sum over the dense eigenbasis, kernel excluded.
        let ds = pair.dense(Operator::LPlus);
        let phi = pair.phi().values();
        let mut sum = 0.0;
        for (i, &l) in ds.values.iter().enumerate() {
            if l.abs() > KERNEL_TOL * gs.omega.abs() {
                let c: f64 = ds.vectors.column(i).iter().zip(phi).map(|(a, b)| a * b).sum();
                sum += c * c / l;
            }
        }
        sum *= gs.grid().cell_volume();
        assert!((vk.value - sum).abs() < 1e-6 * sum.abs(), "{} vs {sum}", vk.value);
    }

    #[test]
    fn growing_mode_dichotomy() {
        let stable = state(2.2, 512, 32.0);
        let pair = LinearizedPair::new(&stable).unwrap();
        assert!(growing_mode(&pair).unwrap().is_none());
        let pr = ModelParams::from_gamma(1, 1.0, 0.5, 4.0, 1.0).unwrap();
        let grid = GridSpec::cube(1, 512, 16.0).unwrap();
        let gs = solve_at_frequency(&pr, &grid, -1.0, &SolverOptions::default()).unwrap();
        let pair = LinearizedPair::new(&gs).unwrap();
        let dense = growing_mode_with(&pair, EigenMethod::Dense).unwrap().unwrap();
        assert!(dense.residual < GROWTH_RESIDUAL_TOL);
        assert_eq!(dense.multiplicity, 1);
        let free = growing_mode_with(&pair, EigenMethod::MatrixFree).unwrap().unwrap();
        assert!(
            (dense.rate - free.rate).abs() < 1e-6 * dense.rate,
            "{} vs {}",
            dense.rate,
            free.rate
        );
    }

    #[test]
    fn kg_d11_matches_closed_form() {
        let gs = state(2.2, 1024, 32.0);
        let pair = LinearizedPair::new(&gs).unwrap();
        let vk = vk_quantity(&pair).unwrap().value;
        let m1 = classical_mass(&gs.params, gs.mass(), gs.omega);
        for w in [0.0, 0.3, 0.6, 0.9] {
            let num = d11_kg(&gs.params, vk, gs.mass(), gs.omega, w).unwrap();
            let exact = d11_kg_closed_form(&gs.params, m1, w);
            assert!(
                (num - exact).abs() < 5e-2 * exact.abs().max(m1 * 0.1),
                "{w}: {num} vs {exact}"
            );
        }
        assert!(d11_kg(&gs.params, vk, gs.mass(), gs.omega, 1.0).is_err());
    }
}
