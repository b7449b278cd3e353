//! Small quadrature helpers: Hurwitz-free Riemann zeta on the reals and the
//! box integral of a negative radial power.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// `B_{2k} / (2k)!` for k = 1..=6.
const BERNOULLI_OVER_FACT: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
];

/// Riemann zeta for real `s != 1` with `s > -8`, by Euler-Maclaurin at N = 12.
pub fn zeta(s: f64) -> f64 {
    assert!(s != 1.0, "zeta has a pole at 1");
    const N: usize = 12;
    let n = N as f64;
    let mut sum: f64 = (1..N).map(|m| (m as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // Rising factorial s (s+1) ... (s+2k-2) times N^{-s-2k+1}.
    let mut rising = s;
    let mut npow = n.powf(-s - 1.0);
    for (k, coef) in BERNOULLI_OVER_FACT.iter().enumerate() {
        sum += coef * rising * npow;
        let j = 2.0 * k as f64;
        rising *= (s + j + 1.0) * (s + j + 2.0);
        npow /= n * n;
    }
    sum
}

/// `int_{[-a,a]^d} |x|^{-gamma} dx` for `0 < gamma < d`.
///
/// Each of the 2d pyramids with apex at the origin contributes
/// `a/(d-gamma) * int_face |(a, s)|^{-gamma} ds`; the face integral is smooth.
pub fn cube_power_integral(d: usize, a: f64, gamma: f64) -> f64 {
    assert!(d >= 1 && gamma < d as f64 && a > 0.0);
    let rule = GaussLegendre::new(NonZeroUsize::new(24).unwrap());
    let face = face_integral(&rule, d - 1, a * a, a, gamma);
    2.0 * d as f64 * a / (d as f64 - gamma) * face
}

fn face_integral(rule: &GaussLegendre, dims_left: usize, r2: f64, a: f64, gamma: f64) -> f64 {
    if dims_left == 0 {
        return r2.powf(-gamma / 2.0);
    }
    // Even integrand: integrate [0, a] and double.
    2.0 * rule.integrate(0.0, a, |s| face_integral(rule, dims_left - 1, r2 + s * s, a, gamma))
}
