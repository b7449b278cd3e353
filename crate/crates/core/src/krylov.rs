//! Krylov solvers on plain coefficient vectors: preconditioned CG, preconditioned
//! MINRES and Lanczos with full reorthogonalization.
//!
//! All inner products are Euclidean; grids carry uniform quadrature weights,
//! so operators that are self-adjoint in L2 are symmetric here.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::dot;

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += s * b;
    }
}

pub(crate) fn scale(y: &mut [f64], s: f64) {
    for a in y.iter_mut() {
        *a *= s;
    }
}

#[derive(Clone, Debug)]
pub struct KrylovOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||b - A x|| / ||b||`, recomputed from the returned `x`.
    pub residual: f64,
}

/// Preconditioned conjugate gradients for SPD `A` and SPD preconditioner `M ~ A^{-1}`.
///
/// Fails with `IllConditioned` on non-positive curvature.
pub fn pcg(
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    mut precond: impl FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<KrylovOutcome> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(KrylovOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = apply(&p);
        let curv = dot(&p, &ap);
        if curv <= 0.0 {
            return Err(Error::IllConditioned(format!(
                "conjugate gradients met non-positive curvature {curv:.3e} at step {it}"
            )));
        }
        let step = rz / curv;
        axpy(&mut x, step, &p);
        axpy(&mut r, -step, &ap);
        if norm(&r) <= tol * bnorm {
            let residual = true_residual(&mut apply, &x, b);
            if residual <= tol * 10.0 {
                return Ok(KrylovOutcome {
                    x,
                    iterations: it,
                    residual,
                });
            }
            // Drifted recurrence: restart from the true residual.
            r = sub(b, &apply(&x));
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    let residual = true_residual(&mut apply, &x, b);
    Err(Error::NonConvergence {
        what: "conjugate gradients",
        iterations: max_iter,
        residual,
    })
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn true_residual(apply: &mut impl FnMut(&[f64]) -> Vec<f64>, x: &[f64], b: &[f64]) -> f64 {
    norm(&sub(b, &apply(x))) / norm(b)
}

/// Preconditioned MINRES for symmetric (possibly indefinite) `A` with SPD
/// preconditioner `M`. Restarts from the true residual when the recurrence
/// estimate and the recomputed residual disagree.
pub fn minres(
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    mut precond: impl FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<KrylovOutcome> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(KrylovOutcome {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut used = 0;
    for _restart in 0..8 {
        let r0 = sub(b, &apply(&x));
        let rel = norm(&r0) / bnorm;
        if rel <= tol {
            return Ok(KrylovOutcome {
                x,
                iterations: used,
                residual: rel,
            });
        }
        let budget = max_iter.saturating_sub(used);
        if budget == 0 {
            break;
        }
        // Inner target relative to the current residual.
        let inner_tol = (tol * bnorm / norm(&r0)).min(0.5);
        let (dx, its) = minres_sweep(&mut apply, &mut precond, &r0, inner_tol * 0.5, budget);
        used += its;
        axpy(&mut x, 1.0, &dx);
    }
    let residual = true_residual(&mut apply, &x, b);
    if residual <= tol {
        Ok(KrylovOutcome {
            x,
            iterations: used,
            residual,
        })
    } else {
        Err(Error::NonConvergence {
            what: "minres",
            iterations: used,
            residual,
        })
    }
}

fn minres_sweep(
    apply: &mut impl FnMut(&[f64]) -> Vec<f64>,
    precond: &mut impl FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, usize) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = precond(&r1);
    let beta1 = dot(&r1, &y).max(0.0).sqrt();
    if beta1 == 0.0 {
        return (x, 0);
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    for it in 1..=max_iter {
        let v: Vec<f64> = y.iter().map(|yi| yi / beta).collect();
        y = apply(&v);
        if it >= 2 {
            axpy(&mut y, -beta / oldb, &r1);
        }
        let alfa = dot(&v, &y);
        axpy(&mut y, -alfa / beta, &r2);
        r1 = std::mem::replace(&mut r2, y);
        y = precond(&r2);
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        w = v
            .iter()
            .zip(&w1)
            .zip(&w2)
            .map(|((vi, a), b)| (vi - oldeps * a - delta * b) / gamma)
            .collect();
        axpy(&mut x, phi, &w);
        // phibar bounds the preconditioned residual; compare on the same scale.
        if phibar <= tol * beta1 || beta == 0.0 {
            return (x, it);
        }
    }
    (x, max_iter)
}

/// Lanczos with full reorthogonalization for the largest eigenvalues of a
/// symmetric operator. Returns up to `k` Ritz pairs, largest first.
pub fn lanczos_largest(
    mut apply: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    start: &[f64],
    k: usize,
    max_steps: usize,
    tol: f64,
    project: impl Fn(&mut [f64]),
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = start.len();
    let mut q = start.to_vec();
    project(&mut q);
    let qn = norm(&q);
    if qn == 0.0 {
        return Err(Error::IllConditioned("Lanczos start vector vanishes".into()));
    }
    scale(&mut q, 1.0 / qn);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let steps = max_steps.min(n);
    loop {
        let j = basis.len() - 1;
        let mut w = apply(&basis[j])?;
        project(&mut w);
        let a = dot(&w, &basis[j]);
        alphas.push(a);
        // Full reorthogonalization, twice.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(&mut w, -c, b);
            }
        }
        let bnext = norm(&w);
        let m = alphas.len();
        let done = m >= steps || bnext <= 1e-14 * a.abs().max(1.0);
        if (m >= k && m % 5 == 0) || done {
            let (vals, vecs) = tridiag_eig(&alphas, &betas);
            // Residual bound |beta_m s_{m,i}| for the k largest.
            let worst = (0..k.min(m))
                .map(|i| {
                    let col = m - 1 - i;
                    (bnext * vecs[(m - 1, col)]).abs() / vals[col].abs().max(1e-300)
                })
                .fold(0.0, f64::max);
            if worst < tol || done {
                return Ok((0..k.min(m))
                    .map(|i| {
                        let col = m - 1 - i;
                        let mut v = vec![0.0; n];
                        for (row, b) in basis.iter().enumerate() {
                            axpy(&mut v, vecs[(row, col)], b);
                        }
                        let nv = norm(&v);
                        scale(&mut v, 1.0 / nv);
                        (vals[col], v)
                    })
                    .collect());
            }
        }
        betas.push(bnext);
        scale(&mut w, 1.0 / bnext);
        basis.push(w);
    }
}

/// Eigen-decomposition of the symmetric tridiagonal matrix, ascending.
fn tridiag_eig(alphas: &[f64], betas: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    sorted_eig(t)
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn sorted_eig(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Dense matrix of a linear operator, built column by column and symmetrized.
pub fn dense_symmetric(n: usize, mut apply: impl FnMut(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = apply(&e);
        e[j] = 0.0;
        for (i, v) in col.into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    let at = a.transpose();
    (a + at) * 0.5
}
