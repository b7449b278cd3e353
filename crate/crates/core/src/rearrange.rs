//! Discrete symmetric decreasing rearrangement and the three rearrangement
//! inequalities it satisfies.
//!
//! Values of `|f|` are sorted in decreasing order and placed on the cells
//! ordered by distance from the grid centre; ties in distance are broken by
//! the row-major index.

use crate::energy::Functional;
use crate::error::{Error, Result};
use crate::grid::{inner, Field, GridSpec};
use crate::spectral::{convolve_centered, MultiplierOp};

#[derive(Clone, Debug, PartialEq)]
pub struct RearrangedField {
    pub field: Field,
    /// `permutation[r]` is the flat index of the cell of distance rank `r`.
    pub permutation: Vec<usize>,
}

/// Cells sorted by distance from the centre, ties by flat index.
pub fn distance_order(grid: &GridSpec) -> Vec<usize> {
    let center = grid.center();
    let h = grid.spacings();
    let isotropic = h.iter().all(|&x| x == h[0]);
    let mut idx = vec![0; grid.ndim()];
    let mut order: Vec<usize> = (0..grid.len()).collect();
    if isotropic {
        // Integer keys make equal distances compare equal exactly.
        let keys: Vec<u64> = (0..grid.len())
            .map(|flat| {
                grid.unravel(flat, &mut idx);
                idx.iter()
                    .zip(&center)
                    .map(|(&i, &c)| {
                        let m = i as i64 - c as i64;
                        (m * m) as u64
                    })
                    .sum()
            })
            .collect();
        order.sort_by_key(|&i| (keys[i], i));
    } else {
        let keys: Vec<f64> = (0..grid.len())
            .map(|flat| {
                grid.unravel(flat, &mut idx);
                idx.iter()
                    .zip(&center)
                    .zip(&h)
                    .map(|((&i, &c), &hk)| ((i as f64 - c as f64) * hk).powi(2))
                    .sum()
            })
            .collect();
        order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    }
    order
}

pub fn rearrange(f: &Field) -> RearrangedField {
    let permutation = distance_order(f.grid());
    let mut sorted: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut values = vec![0.0; f.len()];
    for (&cell, &v) in permutation.iter().zip(&sorted) {
        values[cell] = v;
    }
    RearrangedField {
        field: Field::from_parts(f.grid().clone(), values),
        permutation,
    }
}

/// Shorthand for `rearrange(f).field`.
pub fn rearranged(f: &Field) -> Field {
    rearrange(f).field
}

fn ensure_nonnegative(f: &Field, which: &'static str) -> Result<()> {
    if f.values().iter().any(|&v| v < 0.0) {
        Err(Error::NegativeInput(which))
    } else {
        Ok(())
    }
}

/// `(int f g, int f* g*)`; the first never exceeds the second.
pub fn check_hardy_littlewood(f: &Field, g: &Field) -> Result<(f64, f64)> {
    ensure_nonnegative(f, "f")?;
    ensure_nonnegative(g, "g")?;
    let lhs = inner(f, g)?;
    let rhs = inner(&rearranged(f), &rearranged(g))?;
    Ok((lhs, rhs))
}

/// `(<g * f, h>, <g* * f*, h*>)` with `g` read as a kernel centred at the grid centre.
pub fn check_riesz_rearrangement(f: &Field, g: &Field, h: &Field) -> Result<(f64, f64)> {
    ensure_nonnegative(f, "f")?;
    ensure_nonnegative(g, "g")?;
    ensure_nonnegative(h, "h")?;
    let lhs = inner(&convolve_centered(g, f)?, h)?;
    let rhs = inner(&convolve_centered(&rearranged(g), &rearranged(f))?, &rearranged(h))?;
    Ok((lhs, rhs))
}

/// `(K(u), K(u*))`: the Riesz inequality with the Riesz kernel in the middle.
pub fn check_hartree_rearrangement(u: &Field, functional: &Functional) -> Result<(f64, f64)> {
    ensure_nonnegative(u, "u")?;
    let lhs = functional.energy(u)?.k;
    let rhs = functional.energy(&rearranged(u))?.k;
    Ok((lhs, rhs))
}

/// `(|| |grad|^beta f ||, || |grad|^beta f* ||)`; the first is never smaller.
pub fn check_polya_szego(f: &Field, beta: f64) -> Result<(f64, f64)> {
    let op = MultiplierOp::frac_lap(f.grid(), beta)?;
    let lhs = op.quadratic_form(f)?.max(0.0).sqrt();
    let rhs = op.quadratic_form(&rearranged(f))?.max(0.0).sqrt();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::l2_norm_sq;

    #[test]
    fn small_example() {
        let g = GridSpec::cube(1, 8, 4.0).unwrap();
        let f = Field::new(g, vec![0.0, 1.0, 3.0, 2.0, 0.5, 0.0, 0.0, 0.0]).unwrap();
        let r = rearrange(&f);
        // Centre is index 4, then 3, 5, 2, 6, ...
        assert_eq!(&r.permutation[..5], &[4, 3, 5, 2, 6]);
        assert_eq!(r.field.values(), &[0.0, 0.0, 0.5, 2.0, 3.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn gaussian_is_fixed_and_idempotent() {
        let g = GridSpec::cube(2, 32, 4.0).unwrap();
        let u = Field::gaussian(&g, 1.0);
        let r = rearranged(&u);
        assert!(r.axpy(-1.0, &u).unwrap().sup_norm() < 1e-15);
        let two = Field::from_fn(&g, |x| {
            (-(x[0] - 1.5f64).powi(2) - x[1] * x[1]).exp() + 0.5 * (-(x[0] + 1.0f64).powi(2)).exp()
        })
        .unwrap();
        let once = rearranged(&two);
        assert_eq!(rearranged(&once), once);
        assert!((l2_norm_sq(&once) - l2_norm_sq(&two)).abs() < 1e-13 * l2_norm_sq(&two));
    }

    #[test]
    fn negative_inputs_rejected() {
        let g = GridSpec::cube(1, 8, 1.0).unwrap();
        let neg = Field::constant(&g, -1.0);
        let pos = Field::constant(&g, 1.0);
        assert!(matches!(
            check_hardy_littlewood(&neg, &pos),
            Err(Error::NegativeInput("f"))
        ));
        assert!(matches!(
            check_riesz_rearrangement(&pos, &pos, &neg),
            Err(Error::NegativeInput("h"))
        ));
    }

    #[test]
    fn equality_and_strict_cases() {
        let g = GridSpec::cube(1, 256, 10.0).unwrap();
        let bell = Field::gaussian(&g, 1.0);
        let (a, b) = check_hardy_littlewood(&bell, &bell).unwrap();
        assert!((a - b).abs() < 1e-14 * b);
        let shifted = Field::from_fn(&g, |x| (-(x[0] - 2.0).powi(2) / 2.0).exp()).unwrap();
        let (a, b) = check_hardy_littlewood(&bell, &shifted).unwrap();
        assert!(a < b * (1.0 - 1e-3));
        let wide = Field::gaussian(&g, 2.0);
        let (a, b) = check_riesz_rearrangement(&bell, &wide, &bell).unwrap();
        assert!((a - b).abs() < 1e-10 * b);
        let (a, b) = check_riesz_rearrangement(&shifted, &wide, &bell).unwrap();
        assert!(a < b * (1.0 - 1e-3));
        let (a, b) = check_polya_szego(&bell, 0.5).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
        let bumps = Field::from_fn(&g, |x| (-(x[0] - 3.0).powi(2)).exp() + (-(x[0] + 3.0).powi(2)).exp()).unwrap();
        let (a, b) = check_polya_szego(&bumps, 0.5).unwrap();
        assert!(a > b * (1.0 + 1e-3));
    }
}
