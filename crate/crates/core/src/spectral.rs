//! Fourier multipliers on the periodic box and the Riesz potential as a
//! zero-padded linear convolution.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::params::riesz_constant;
use crate::quad::{cube_power_integral, zeta};

/// Multidimensional complex FFT over a row-major array.
pub struct FftNd {
    dims: Vec<usize>,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd").field("dims", &self.dims).finish()
    }
}

impl FftNd {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dims: dims.to_vec(),
            fwd: dims.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inv: dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.fwd);
    }

    /// Unnormalized inverse transform.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.inv);
    }

    fn run(&self, buf: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        debug_assert_eq!(buf.len(), self.len());
        let mut line = Vec::new();
        for (axis, (&n, plan)) in self.dims.iter().zip(plans).enumerate() {
            let stride: usize = self.dims[axis + 1..].iter().product();
            if stride == 1 {
                plan.process(buf);
                continue;
            }
            line.resize(n, Complex64::new(0.0, 0.0));
            let block = n * stride;
            for outer in (0..buf.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = buf[base + k * stride];
                    }
                    plan.process(&mut line);
                    for (k, v) in line.iter().enumerate() {
                        buf[base + k * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Signed integer frequency of FFT bin `k` on an axis of `n` points.
fn signed_bin(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// `|2 pi xi|^2` for every FFT bin, with `xi = k / (2L)`.
fn wave_number_sq(grid: &GridSpec) -> Vec<f64> {
    let dims = grid.dims();
    let mut idx = vec![0; dims.len()];
    (0..grid.len())
        .map(|flat| {
            grid.unravel(flat, &mut idx);
            idx.iter()
                .zip(dims)
                .map(|(&k, &n)| {
                    let w = 2.0 * PI * signed_bin(k, n) as f64 / (2.0 * grid.half_width());
                    w * w
                })
                .sum()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum MultiplierKind {
    /// `(-Delta)^beta`, symbol `|2 pi xi|^{2 beta}`.
    FracLap { beta: f64 },
    /// `|grad|^beta`, symbol `|2 pi xi|^beta`.
    Zygmund { beta: f64 },
    /// `e^{t Delta}`, symbol `exp(-t |2 pi xi|^2)`.
    Heat { t: f64 },
    /// `((-Delta)^beta + shift)^{-1}` with `shift > 0`.
    Resolvent { beta: f64, shift: f64 },
}

impl MultiplierKind {
    fn symbol(self, k2: f64) -> f64 {
        match self {
            MultiplierKind::FracLap { beta } => pow_k2(k2, beta),
            MultiplierKind::Zygmund { beta } => pow_k2(k2, beta / 2.0),
            MultiplierKind::Heat { t } => (-t * k2).exp(),
            MultiplierKind::Resolvent { beta, shift } => 1.0 / (pow_k2(k2, beta) + shift),
        }
    }
}

/// `(k2)^e`, exactly zero at the zero mode.
fn pow_k2(k2: f64, e: f64) -> f64 {
    if k2 == 0.0 {
        0.0
    } else if e == 1.0 {
        k2
    } else {
        k2.powf(e)
    }
}

#[derive(Clone, Debug)]
pub struct MultiplierOp {
    kind: MultiplierKind,
    grid: GridSpec,
    fft: Arc<FftNd>,
    symbol: Vec<f64>,
}

impl MultiplierOp {
    pub fn new(grid: &GridSpec, kind: MultiplierKind) -> Result<Self> {
        Self::with_fft(grid, Arc::new(FftNd::new(grid.dims())), kind)
    }

    /// Builds the operator reusing an existing FFT plan for `grid`.
    pub fn with_fft(grid: &GridSpec, fft: Arc<FftNd>, kind: MultiplierKind) -> Result<Self> {
        match kind {
            MultiplierKind::FracLap { beta } | MultiplierKind::Zygmund { beta } => {
                if !(beta > 0.0 && beta <= 2.0) {
                    return Err(Error::param("beta", format!("{beta} outside (0, 2]")));
                }
            }
            MultiplierKind::Heat { t } => {
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(Error::param("t", format!("heat time {t} must be >= 0")));
                }
            }
            MultiplierKind::Resolvent { beta, shift } => {
                if !(beta > 0.0 && shift > 0.0) {
                    return Err(Error::param("shift", "resolvent needs beta > 0 and shift > 0"));
                }
            }
        }
        let symbol = wave_number_sq(grid).into_iter().map(|k2| kind.symbol(k2)).collect();
        Ok(Self {
            kind,
            grid: grid.clone(),
            fft,
            symbol,
        })
    }

    pub fn frac_lap(grid: &GridSpec, beta: f64) -> Result<Self> {
        Self::new(grid, MultiplierKind::FracLap { beta })
    }

    pub fn zygmund(grid: &GridSpec, beta: f64) -> Result<Self> {
        Self::new(grid, MultiplierKind::Zygmund { beta })
    }

    pub fn heat(grid: &GridSpec, t: f64) -> Result<Self> {
        Self::new(grid, MultiplierKind::Heat { t })
    }

    pub fn kind(&self) -> MultiplierKind {
        self.kind
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn fft(&self) -> &Arc<FftNd> {
        &self.fft
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        self.grid.ensure_same(f.grid())?;
        Ok(Field::from_parts(self.grid.clone(), self.apply_slice(f.values())))
    }

    pub(crate) fn apply_slice(&self, f: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        let scale = 1.0 / buf.len() as f64;
        for (b, s) in buf.iter_mut().zip(&self.symbol) {
            *b *= s * scale;
        }
        self.fft.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// `sum_k symbol_k |f_hat_k|^2` in quadrature units, i.e. `<A f, f>`.
    pub fn quadratic_form(&self, f: &Field) -> Result<f64> {
        self.grid.ensure_same(f.grid())?;
        let mut buf: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        let sum: f64 = buf.iter().zip(&self.symbol).map(|(c, s)| s * c.norm_sqr()).sum();
        Ok(sum * self.grid.cell_volume() / buf.len() as f64)
    }
}

/// Spectral partial derivative along `axis`; the Nyquist bin is dropped.
pub fn derivative(f: &Field, axis: usize) -> Result<Field> {
    let grid = f.grid();
    if axis >= grid.ndim() {
        return Err(Error::InvalidGrid(format!("axis {axis} out of range")));
    }
    let fft = FftNd::new(grid.dims());
    let mut buf: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf);
    let n = grid.dims()[axis];
    let stride: usize = grid.dims()[axis + 1..].iter().product();
    let scale = 1.0 / buf.len() as f64;
    for (flat, b) in buf.iter_mut().enumerate() {
        let k = (flat / stride) % n;
        let w = if k == n / 2 {
            0.0
        } else {
            2.0 * PI * signed_bin(k, n) as f64 / (2.0 * grid.half_width())
        };
        *b *= Complex64::new(0.0, w * scale);
    }
    fft.inverse(&mut buf);
    Ok(Field::from_parts(grid.clone(), buf.into_iter().map(|c| c.re).collect()))
}

/// How the kernel weight of the cell containing the singularity is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum SingularWeight {
    /// Exact integral of `c |x|^{-gamma}` over the origin cell.
    CellAverage,
    /// Origin weight that makes the lattice sum exact to leading order,
    /// removing the `O(h^{d-gamma})` error of the plain cell average.
    #[default]
    Corrected,
}

#[derive(Clone, Debug)]
pub struct RieszOp {
    alpha: f64,
    gamma: f64,
    constant: f64,
    weight: SingularWeight,
    grid: GridSpec,
    padded_dims: Vec<usize>,
    fft: Arc<FftNd>,
    /// Real-space quadrature weights on the padded grid.
    kernel: Vec<f64>,
    kernel_hat: Vec<f64>,
}

impl RieszOp {
    pub fn new(grid: &GridSpec, alpha: f64) -> Result<Self> {
        Self::with_weight(grid, alpha, SingularWeight::default())
    }

    pub fn with_weight(grid: &GridSpec, alpha: f64, weight: SingularWeight) -> Result<Self> {
        let d = grid.ndim();
        let gamma = d as f64 - alpha;
        if !(alpha > 0.0 && gamma > 0.0) {
            return Err(Error::param("alpha", format!("{alpha} is not in (0, {d})")));
        }
        let constant = riesz_constant(d, alpha);
        let padded_dims: Vec<usize> = grid.dims().iter().map(|n| 2 * n).collect();
        let padded = GridSpec::new(padded_dims.clone(), 2.0 * grid.half_width())?;
        let h = grid.spacings();
        let vol = grid.cell_volume();

        let mut idx = vec![0; d];
        let mut kernel: Vec<f64> = (0..padded.len())
            .map(|flat| {
                padded.unravel(flat, &mut idx);
                let r2: f64 = idx
                    .iter()
                    .zip(&padded_dims)
                    .zip(&h)
                    .map(|((&k, &n), &hk)| {
                        let off = signed_bin(k, n) as f64 * hk;
                        off * off
                    })
                    .sum();
                if r2 == 0.0 {
                    0.0
                } else {
                    constant * r2.powf(-gamma / 2.0) * vol
                }
            })
            .collect();
        apply_singular_weight(&mut kernel, &padded_dims, gamma, &h, weight, constant);

        let fft = Arc::new(FftNd::new(&padded_dims));
        let mut buf: Vec<Complex64> = kernel.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.forward(&mut buf);
        let scale = 1.0 / buf.len() as f64;
        // The kernel is even, so its transform is real.
        let kernel_hat = buf.iter().map(|c| c.re * scale).collect();

        Ok(Self {
            alpha,
            gamma,
            constant,
            weight,
            grid: grid.clone(),
            padded_dims,
            fft,
            kernel,
            kernel_hat,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn weight(&self) -> SingularWeight {
        self.weight
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Quadrature weight applied to the sample at integer offset `m`.
    pub fn kernel_weight(&self, offset: &[i64]) -> f64 {
        let mut flat = 0;
        for (&m, &n) in offset.iter().zip(&self.padded_dims) {
            let k = m.rem_euclid(n as i64) as usize;
            flat = flat * n + k;
        }
        self.kernel[flat]
    }

    /// Largest eigenvalue modulus of the padded circulant, an upper bound on
    /// the operator norm of `convolve` in the discrete `l2`.
    pub fn norm_bound(&self) -> f64 {
        let n = self.kernel_hat.len() as f64;
        self.kernel_hat.iter().fold(0.0f64, |m, k| m.max(k.abs())) * n
    }

    /// `I_alpha[g] = c |.|^{-gamma} * g` evaluated on the grid.
    pub fn convolve(&self, g: &Field) -> Result<Field> {
        self.grid.ensure_same(g.grid())?;
        Ok(Field::from_parts(self.grid.clone(), self.convolve_slice(g.values())))
    }

    pub(crate) fn convolve_slice(&self, g: &[f64]) -> Vec<f64> {
        let dims = self.grid.dims();
        let d = dims.len();
        let total: usize = self.padded_dims.iter().product();
        let mut buf = vec![Complex64::new(0.0, 0.0); total];
        let mut idx = vec![0; d];
        for (flat, &v) in g.iter().enumerate() {
            if v != 0.0 {
                buf[self.padded_index(flat, &mut idx)] = Complex64::new(v, 0.0);
            }
        }
        self.fft.forward(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.fft.inverse(&mut buf);
        (0..g.len())
            .map(|flat| buf[self.padded_index(flat, &mut idx)].re)
            .collect()
    }

    fn padded_index(&self, flat: usize, idx: &mut [usize]) -> usize {
        self.grid.unravel(flat, idx);
        idx.iter().zip(&self.padded_dims).fold(0, |acc, (&i, &n)| acc * n + i)
    }
}

/// Linear convolution `(k * f)(x_i) = sum_j k(x_i - x_j) f_j h^d` where the
/// kernel is given as a field centred at the grid centre and taken as zero
/// outside the box.
pub fn convolve_centered(kernel: &Field, f: &Field) -> Result<Field> {
    let grid = f.grid();
    grid.ensure_same(kernel.grid())?;
    let dims = grid.dims();
    let padded: Vec<usize> = dims.iter().map(|n| 2 * n).collect();
    let total: usize = padded.iter().product();
    let fft = FftNd::new(&padded);
    let center = grid.center();
    let mut idx = vec![0; dims.len()];
    let mut kb = vec![Complex64::new(0.0, 0.0); total];
    let mut fb = vec![Complex64::new(0.0, 0.0); total];
    let embed = |idx: &[usize], shift: bool| -> usize {
        idx.iter().zip(&padded).zip(&center).fold(0, |acc, ((&i, &n), &c)| {
            let k = if shift {
                (i as i64 - c as i64).rem_euclid(n as i64) as usize
            } else {
                i
            };
            acc * n + k
        })
    };
    for flat in 0..grid.len() {
        grid.unravel(flat, &mut idx);
        kb[embed(&idx, true)] = Complex64::new(kernel.values()[flat], 0.0);
        fb[embed(&idx, false)] = Complex64::new(f.values()[flat], 0.0);
    }
    fft.forward(&mut kb);
    fft.forward(&mut fb);
    let scale = grid.cell_volume() / total as f64;
    for (a, b) in fb.iter_mut().zip(&kb) {
        *a *= b * scale;
    }
    fft.inverse(&mut fb);
    let out = (0..grid.len())
        .map(|flat| {
            grid.unravel(flat, &mut idx);
            fb[embed(&idx, false)].re
        })
        .collect();
    Ok(Field::from_parts(grid.clone(), out))
}

/// Sets the weights near the origin of the sampled kernel.
fn apply_singular_weight(
    kernel: &mut [f64],
    padded_dims: &[usize],
    gamma: f64,
    h: &[f64],
    weight: SingularWeight,
    constant: f64,
) {
    let d = h.len();
    let hmax = h.iter().cloned().fold(0.0, f64::max);
    let isotropic = h.iter().all(|&x| x == hmax);
    match weight {
        SingularWeight::CellAverage => {
            kernel[0] = constant
                * if isotropic {
                    cube_power_integral(d, hmax / 2.0, gamma)
                } else {
                    anisotropic_cell_integral(gamma, h)
                };
        }
        SingularWeight::Corrected => {
            let ratios: Vec<f64> = h.iter().map(|x| x / hmax).collect();
            let (c0, c2) = lattice_constants(gamma, &ratios);
            let scale = constant * hmax.powf(d as f64 - gamma);
            // The second-order term acts on the discrete Laplacian at the origin.
            kernel[0] = scale * (c0 - 2.0 * d as f64 * c2);
            let strides: Vec<usize> = (0..d).map(|a| padded_dims[a + 1..].iter().product()).collect();
            for a in 0..d {
                kernel[strides[a]] += scale * c2;
                kernel[(padded_dims[a] - 1) * strides[a]] += scale * c2;
            }
        }
    }
}

/// `int |x|^{-gamma}` over a rectangular cell centred at the origin.
fn anisotropic_cell_integral(gamma: f64, h: &[f64]) -> f64 {
    fn rec(rule: &GaussLegendre, h: &[f64], axis: usize, r2: f64, gamma: f64) -> f64 {
        if axis == h.len() {
            return r2.powf(-gamma / 2.0);
        }
        // Geometric splitting toward the singular corner.
        let mut total = 0.0;
        let mut hi = h[axis] / 2.0;
        for _ in 0..12 {
            let lo = hi / 4.0;
            total += rule.integrate(lo, hi, |s| rec(rule, h, axis + 1, r2 + s * s, gamma));
            hi = lo;
        }
        total
    }
    let rule = GaussLegendre::new(NonZeroUsize::new(16).unwrap());
    2f64.powi(h.len() as i32) * rec(&rule, h, 0, 0.0, gamma)
}

/// Constants `(C, C2)` of the corrected lattice rule
///
/// `int |x|^{-gamma} g = h^d sum_{m != 0} |m h|^{-gamma} g(m h)
///     + C h^{d-gamma} g(0) + C2 h^{d+2-gamma} Lap g(0) + O(h^{d+4-gamma})`
///
/// for smooth `g` on a square lattice. `ratios` are the cell spacings divided
/// by the largest one; on rectangular lattices only `C` is fitted.
pub fn lattice_constants(gamma: f64, ratios: &[f64]) -> (f64, f64) {
    if ratios.len() == 1 {
        return (-2.0 * zeta(gamma), -zeta(gamma - 2.0));
    }
    type Key = (u64, Vec<u64>);
    static CACHE: OnceLock<Mutex<HashMap<Key, (f64, f64)>>> = OnceLock::new();
    let key: Key = (gamma.to_bits(), ratios.iter().map(|r| r.to_bits()).collect());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&v) = cache.lock().expect("cache lock").get(&key) {
        return v;
    }
    // Against a Gaussian of width s the defect is C - d C2 / s^2 + O(s^-4).
    let d = ratios.len() as f64;
    let (s1, s2) = if ratios.len() == 2 { (12.0, 24.0) } else { (5.0, 10.0) };
    let f1 = gaussian_fit(gamma, ratios, s1);
    let f2 = gaussian_fit(gamma, ratios, s2);
    let c2 = (f2 - f1) / (d * (1.0 / (s1 * s1) - 1.0 / (s2 * s2)));
    let c0 = f2 + d * c2 / (s2 * s2);
    let isotropic = ratios.iter().all(|&r| r == 1.0);
    let v = (c0, if isotropic { c2 } else { 0.0 });
    cache.lock().expect("cache lock").insert(key, v);
    v
}

fn gaussian_fit(gamma: f64, ratios: &[f64], s: f64) -> f64 {
    let d = ratios.len();
    let df = d as f64;
    let sphere = 2.0 * PI.powf(df / 2.0) / gamma_fn(df / 2.0);
    let exact = sphere * 0.5 * (2.0 * s * s).powf((df - gamma) / 2.0) * gamma_fn((df - gamma) / 2.0);
    let radii: Vec<i64> = ratios.iter().map(|r| (9.0 * s / r).ceil() as i64).collect();
    let sides: Vec<usize> = radii.iter().map(|r| (2 * r + 1) as usize).collect();
    let total: usize = sides.iter().product();
    let vol: f64 = ratios.iter().product();
    let mut lattice = 0.0;
    for flat in 0..total {
        let mut rest = flat;
        let mut r2 = 0.0;
        let mut origin = true;
        for a in 0..d {
            let m = (rest % sides[a]) as i64 - radii[a];
            rest /= sides[a];
            origin &= m == 0;
            let x = m as f64 * ratios[a];
            r2 += x * x;
        }
        if !origin {
            lattice += r2.powf(-gamma / 2.0) * (-r2 / (2.0 * s * s)).exp();
        }
    }
    exact - vol * lattice
}

/// Relative deviation of the heat-semigroup integral representation of
/// `(2 pi |xi|)^{2 beta}` from the symbol itself; absolute at `xi = 0`.
pub fn heat_representation_check(beta: f64, xi: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param("beta", format!("{beta} is not in (0, 1)")));
    }
    let a = 4.0 * PI * PI * xi * xi;
    if a == 0.0 {
        return Ok(0.0);
    }
    // int_0^inf (1 - e^{-a t}) t^{-1-beta} dt, split at a t = 1.
    let rhs = split_power_integral(beta, 1.0 / a, |t| -(-a * t).exp_m1()) / heat_constant(beta);
    let exact = a.powf(beta);
    Ok((rhs - exact).abs() / exact)
}

/// `c_beta = int_0^inf (1 - e^{-y}) y^{-1-beta} dy`.
pub fn heat_constant(beta: f64) -> f64 {
    split_power_integral(beta, 1.0, |y| -(-y).exp_m1())
}

/// `int_0^inf g(t) t^{-1-beta} dt` for `g(t) ~ t` at 0 and bounded at infinity,
/// split at `t1`. Each piece is mapped to `[0, 1]` so that the power weight
/// disappears: `t = t1 s^{1/(1-beta)}` below, `t = t1 s^{-1/beta}` above.
fn split_power_integral(beta: f64, t1: f64, g: impl Fn(f64) -> f64) -> f64 {
    let k = 1.0 / (1.0 - beta);
    let near = quadrature::integrate(
        |s: f64| {
            let t = t1 * s.powf(k);
            if t == 0.0 {
                k * t1.powf(-beta) * g_over_t_at_zero(&g, t1)
            } else {
                k * t1.powf(-beta) * g(t) / (t / t1)
            }
        },
        0.0,
        1.0,
        1e-15,
    )
    .integral;
    let far = quadrature::integrate(
        |s: f64| {
            if s == 0.0 {
                0.0
            } else {
                t1.powf(-beta) / beta * g(t1 * s.powf(-1.0 / beta))
            }
        },
        0.0,
        1.0,
        1e-15,
    )
    .integral;
    near + far
}

fn g_over_t_at_zero(g: &impl Fn(f64) -> f64, t1: f64) -> f64 {
    let t = 1e-300f64.max(t1 * 1e-30);
    g(t) / (t / t1)
}

/// Samples `x -> f(scale * x)` by trigonometric interpolation along each axis.
/// Points whose image leaves the box are set to zero.
pub fn dilate(f: &Field, scale: f64) -> Result<Field> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::param("scale", format!("{scale} must be positive")));
    }
    if scale == 1.0 {
        return Ok(f.clone());
    }
    let grid = f.grid().clone();
    let mut values = f.values().to_vec();
    let dims = grid.dims().to_vec();
    for axis in 0..dims.len() {
        let n = dims[axis];
        let stride: usize = dims[axis + 1..].iter().product();
        let block = n * stride;
        let targets: Vec<f64> = (0..n).map(|j| scale * grid.coord(axis, j)).collect();
        let interp = LineInterpolator::new(n, grid.half_width(), &targets);
        let mut line = vec![0.0; n];
        for outer in (0..values.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = values[base + k * stride];
                }
                let out = interp.apply(&line);
                for (k, v) in out.into_iter().enumerate() {
                    values[base + k * stride] = v;
                }
            }
        }
    }
    Field::new(grid, values)
}

/// Evaluates the trigonometric interpolant of a periodic line at fixed targets.
struct LineInterpolator {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    /// Per target: `exp(i pi t / L)` with t measured from -L, or None if outside.
    phases: Vec<Option<Complex64>>,
}

impl LineInterpolator {
    fn new(n: usize, half_width: f64, targets: &[f64]) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n);
        let phases = targets
            .iter()
            .map(|&x| {
                if x < -half_width || x > half_width - 2.0 * half_width / n as f64 {
                    None
                } else {
                    let theta = PI * (x + half_width) / half_width;
                    Some(Complex64::from_polar(1.0, theta))
                }
            })
            .collect();
        Self { n, fft, phases }
    }

    fn apply(&self, line: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut c: Vec<Complex64> = line.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.process(&mut c);
        let inv_n = 1.0 / n as f64;
        self.phases
            .iter()
            .map(|phase| {
                let Some(w) = phase else { return 0.0 };
                // Sum over k = 0..n/2 with conjugate symmetry; Nyquist split evenly.
                let mut acc = c[0].re;
                let mut wk = Complex64::new(1.0, 0.0);
                for ck in c.iter().take(n / 2).skip(1) {
                    wk *= w;
                    acc += 2.0 * (ck * wk).re;
                }
                wk *= w;
                acc += (c[n / 2] * wk).re;
                acc * inv_n
            })
            .collect()
    }
}
