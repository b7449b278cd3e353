#![allow(dead_code)]

use choquard::grid::{Field, GridSpec};
use rand::Rng;

/// Sum of one to four Gaussian bumps with random centres, widths and heights.
pub fn bumps(grid: &GridSpec, rng: &mut impl Rng) -> Field {
    random_bumps(grid, rng, false)
}

/// Like `bumps` but heights take either sign.
pub fn signed_bumps(grid: &GridSpec, rng: &mut impl Rng) -> Field {
    random_bumps(grid, rng, true)
}

fn random_bumps(grid: &GridSpec, rng: &mut impl Rng, signed: bool) -> Field {
    let d = grid.ndim();
    let l = grid.half_width();
    let count = rng.gen_range(1..5);
    let spec: Vec<(Vec<f64>, f64, f64)> = (0..count)
        .map(|_| {
            let centre = (0..d).map(|_| rng.gen_range(-0.4 * l..0.4 * l)).collect();
            let width = rng.gen_range(0.06 * l..0.2 * l);
            let mut height = rng.gen_range(0.2..2.0);
            if signed && rng.gen_bool(0.5) {
                height = -height;
            }
            (centre, width, height)
        })
        .collect();
    Field::from_fn(grid, |x| {
        spec.iter()
            .map(|(c, w, a)| {
                let r2: f64 = x.iter().zip(c).map(|(x, c)| (x - c).powi(2)).sum();
                a * (-r2 / (w * w)).exp()
            })
            .sum()
    })
    .expect("bumps are finite")
}
