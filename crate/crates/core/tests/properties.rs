mod common;

use std::sync::OnceLock;

use choquard::energy::Functional;
use choquard::grid::{decode_field, encode_field, inner, l2_norm_sq, Field, GridSpec};
use choquard::linops::{LinearizedPair, Operator};
use choquard::params::ModelParams;
use choquard::rearrange::rearranged;
use choquard::solver::{solve_at_frequency, solve_ground_state, SolverOptions};
use choquard::spectral::RieszOp;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pair() -> &'static LinearizedPair {
    static PAIR: OnceLock<LinearizedPair> = OnceLock::new();
    PAIR.get_or_init(|| {
        let params = ModelParams::from_alpha(1, 1.0, 0.5, 2.2, 1.0).unwrap();
        let grid = GridSpec::cube(1, 256, 16.0).unwrap();
        let gs = solve_at_frequency(&params, &grid, -1.0, &SolverOptions::default()).unwrap();
        LinearizedPair::new(&gs).unwrap()
    })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Cyclic shift by `k` cells along axis 0 of a one-dimensional field.
fn roll(f: &Field, k: usize) -> Field {
    let n = f.len();
    let v = f.values();
    let shifted = (0..n).map(|i| v[(i + n - k) % n]).collect();
    Field::new(f.grid().clone(), shifted).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linearized_operators_are_symmetric(seed in any::<u64>()) {
        let pair = pair();
        let mut r = rng(seed);
        let f = common::signed_bumps(pair.grid(), &mut r);
        let g = common::signed_bumps(pair.grid(), &mut r);
        for op in [Operator::LPlus, Operator::LMinus] {
            let (lf, lg) = (pair.apply(op, &f).unwrap(), pair.apply(op, &g).unwrap());
            let a = inner(&lf, &g).unwrap();
            let b = inner(&f, &lg).unwrap();
            let scale = (l2_norm_sq(&lf) * l2_norm_sq(&g)).sqrt() + (l2_norm_sq(&f) * l2_norm_sq(&lg)).sqrt();
            prop_assert!((a - b).abs() <= 1e-10 * scale, "{op:?}: {a} vs {b}");
        }
    }

    #[test]
    fn lminus_is_nonnegative(seed in any::<u64>()) {
        let pair = pair();
        let f = common::signed_bumps(pair.grid(), &mut rng(seed));
        let q = inner(&pair.apply_lminus(&f).unwrap(), &f).unwrap();
        prop_assert!(q >= -1e-9 * l2_norm_sq(&f), "<L- f, f> = {q}");
    }

    #[test]
    fn energy_is_translation_invariant(seed in any::<u64>(), k in 0usize..40) {
        let grid = GridSpec::cube(1, 512, 16.0).unwrap();
        let params = ModelParams::from_alpha(1, 1.0, 0.5, 2.5, 1.0).unwrap();
        let functional = Functional::new(&params, &grid).unwrap();
        // Bumps sit within 0.4 L of the centre, so a shift of 40 cells keeps them inside.
        let u = common::bumps(&grid, &mut rng(seed));
        let a = functional.energy(&u).unwrap();
        let b = functional.energy(&roll(&u, k)).unwrap();
        prop_assert!((a.j - b.j).abs() <= 1e-10 * a.j.abs());
        prop_assert!((a.k - b.k).abs() <= 1e-6 * a.k.abs(), "{} vs {}", a.k, b.k);
    }

    #[test]
    fn rearrangement_quotients_translations(seed in any::<u64>(), k in 1usize..40) {
        let grid = GridSpec::cube(1, 512, 16.0).unwrap();
        let u = common::bumps(&grid, &mut rng(seed));
        prop_assert_eq!(rearranged(&u), rearranged(&roll(&u, k)));
    }

    #[test]
    fn rearrangement_preserves_norms(seed in any::<u64>(), p in 1.0f64..4.0) {
        let grid = GridSpec::cube(2, 32, 6.0).unwrap();
        let u = common::bumps(&grid, &mut rng(seed));
        let r = rearranged(&u);
        let lp = |f: &Field| f.values().iter().map(|x| x.abs().powf(p)).sum::<f64>();
        prop_assert!((lp(&u) - lp(&r)).abs() <= 1e-12 * lp(&u));
        prop_assert!((u.sup_norm() - r.sup_norm()).abs() == 0.0);
    }

    #[test]
    fn riesz_potential_is_symmetric_and_positive(seed in any::<u64>()) {
        let grid = GridSpec::cube(2, 32, 6.0).unwrap();
        let op = RieszOp::new(&grid, 1.2).unwrap();
        let mut r = rng(seed);
        let f = common::bumps(&grid, &mut r);
        let g = common::bumps(&grid, &mut r);
        let a = inner(&op.convolve(&f).unwrap(), &g).unwrap();
        let b = inner(&f, &op.convolve(&g).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
        prop_assert!(op.convolve(&f).unwrap().values().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn field_codec_round_trips(seed in any::<u64>()) {
        let grid = GridSpec::new(vec![16, 8], 3.0).unwrap();
        let f = common::signed_bumps(&grid, &mut rng(seed));
        prop_assert_eq!(decode_field(&encode_field(&f)).unwrap(), f);
    }
}

#[test]
fn solver_is_deterministic_and_conserves_mass() {
    let params = ModelParams::from_gamma(1, 1.0, 0.5, 2.2, 1.7).unwrap();
    let grid = GridSpec::cube(1, 1024, 32.0).unwrap();
    let opts = SolverOptions {
        init_noise: 0.05,
        seed: 42,
        ..SolverOptions::default()
    };
    let a = solve_ground_state(&params, &grid, &opts).unwrap();
    let b = solve_ground_state(&params, &grid, &opts).unwrap();
    assert_eq!(a.phi, b.phi);
    assert_eq!(a.omega.to_bits(), b.omega.to_bits());
    assert!((a.mass() - 1.7).abs() < 1e-12, "mass {}", a.mass());
    let other = solve_ground_state(&params, &grid, &SolverOptions { seed: 43, ..opts }).unwrap();
    assert!((other.breakdown.e - a.breakdown.e).abs() < 1e-9 * a.breakdown.e.abs());
}
