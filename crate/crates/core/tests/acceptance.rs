//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any fails. Pass substrings as arguments to run a subset.

mod common;

use std::time::{Duration, Instant};

use choquard::classify::{classify_hartree, classify_kg, Verdict};
use choquard::energy::Functional;
use choquard::grid::{inner, GridSpec};
use choquard::linops::{analyze, vk_quantity, LinearizedPair, SpectralOptions};
use choquard::params::ModelParams;
use choquard::rearrange::{check_hardy_littlewood, check_hartree_rearrangement, check_polya_szego};
use choquard::solver::{
    fit_exponential_tail, fit_tail_exponent, plateau_check, solve_at_frequency, solve_ground_state, verify_identities,
    GroundState, SolverOptions,
};
use choquard::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Tuple = (usize, f64, f64, f64, Option<f64>, Verdict, f64);
type Criterion = fn() -> Result<Verdicts>;

struct Verdicts {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Verdicts> {
    Ok(Verdicts { pass, detail })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn reference_state() -> Result<GroundState> {
    let params = ModelParams::from_gamma(1, 1.0, 0.5, 2.2, 1.0)?;
    let grid = GridSpec::cube(1, 4096, 32.0)?;
    solve_ground_state(&params, &grid, &SolverOptions::default())
}

fn classical_state(p: f64, half_width: f64, n: usize) -> Result<GroundState> {
    let params = ModelParams::from_alpha(1, 1.0, 0.5, p, 1.0)?;
    let grid = GridSpec::cube(1, n, half_width)?;
    solve_at_frequency(&params, &grid, -1.0, &SolverOptions::default())
}

fn classifier_truth_table() -> Result<Verdicts> {
    use Verdict::*;
    let t = 1.0 / 2f64.sqrt();
    // (d, beta, alpha, p, KG omega, verdict, Gamma); Gamma = 2 beta + alpha - d (p - 1).
    let table: [Tuple; 24] = [
        (3, 1.0, 2.0, 2.0, None, Stable, 1.0),
        (3, 1.0, 2.0, 7.0 / 3.0, None, Stable, 0.0),
        (3, 1.0, 2.0, 3.0, None, Unstable, -2.0),
        (3, 1.0, 2.0, 6.0, None, NoSoliton, -11.0),
        (3, 1.0, 2.0, 1.5, None, NoSoliton, 2.5),
        (3, 1.0, 2.0, 5.0, None, NoSoliton, -8.0),
        (3, 1.0, 2.0, 5.0 / 3.0, None, NoSoliton, 2.0),
        (1, 1.0, 0.5, 2.2, None, Stable, 1.3),
        (1, 1.0, 0.5, 4.0, None, Unstable, -0.5),
        (1, 1.0, 0.5, 3.5, None, Stable, 0.0),
        (1, 1.0, 0.5, 1.2, None, NoSoliton, 2.3),
        (2, 1.0, 1.0, 2.0, None, Stable, 1.0),
        (2, 1.0, 1.0, 3.0, None, Unstable, -1.0),
        (3, 1.0, 1.0, 2.0, None, Stable, 0.0),
        (1, 0.5, 0.5, 2.2, None, OutOfTheory, 0.3),
        (3, 1.0, 2.0, 2.0, Some(0.5), Unstable, 1.0),
        (3, 1.0, 2.0, 2.0, Some(t + 1e-6), Stable, 1.0),
        (3, 1.0, 2.0, 2.0, Some(t - 1e-6), Unstable, 1.0),
        (3, 1.0, 2.0, 2.0, Some(0.9), Stable, 1.0),
        (3, 1.0, 2.0, 3.0, Some(0.9), Unstable, -2.0),
        (3, 1.0, 2.0, 6.0, Some(0.9), NoSoliton, -11.0),
        (1, 1.0, 0.5, 2.2, Some(0.6), Unstable, 1.3),
        (1, 1.0, 0.5, 2.2, Some(-0.8), Stable, 1.3),
        (3, 1.0, 2.0, 7.0 / 3.0, Some(0.9), Unstable, 0.0),
    ];
    let start = Instant::now();
    let mut wrong = Vec::new();
    for (i, &(d, beta, alpha, p, omega, expected, gamma_big)) in table.iter().enumerate() {
        let params = ModelParams::from_alpha(d, beta, alpha, p, 1.0)?;
        let got = match omega {
            None => classify_hartree(&params),
            Some(w) => classify_kg(&params.with_kg_omega(w)?)?,
        };
        let note_ok = !(omega.is_none() && gamma_big == 0.0 && expected == Stable) || got.rule.contains("Gamma = 0");
        if got.verdict != expected || (got.gamma_big - gamma_big).abs() > 1e-12 || !note_ok {
            wrong.push(format!("#{i}: {:?} (Gamma {})", got.verdict, got.gamma_big));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        wrong.is_empty() && elapsed < Duration::from_secs(1),
        format!("24 tuples, {} mismatches {wrong:?}, {elapsed:?}", wrong.len()),
    )
}

fn reference_solve(gs: &GroundState, elapsed: Duration) -> Result<Verdicts> {
    let b = gs.breakdown;
    let ids = verify_identities(gs, None)?;
    let omega_err = (gs.omega * b.mass - (b.j - b.k)).abs();
    let pass = gs.residual < 1e-8
        && elapsed < Duration::from_secs(60)
        && b.e < 0.0
        && ids.pohozaev.value < 1e-3
        && omega_err < 1e-6 * gs.omega.abs();
    outcome(
        pass,
        format!(
            "residual {:.2e}, {} iterations, {elapsed:?}, E {:.6e}, Pohozaev {:.2e}, |omega m - (J - K)| {:.2e}, omega {:.6}",
            gs.residual, gs.iterations, b.e, ids.pohozaev.value, omega_err, gs.omega
        ),
    )
}

fn scaling_laws(gs: &GroundState) -> Result<Verdicts> {
    let params = gs.params.clone().with_mass(2.0)?;
    let heavy = solve_ground_state(&params, gs.grid(), &SolverOptions::default())?;
    let s = verify_identities(gs, Some(&heavy))?.scaling.expect("companion given");
    let checks = [&s.energy, &s.kinetic, &s.hartree, &s.omega, &s.profile];
    let pass = checks.iter().all(|c| c.value < 1e-2);
    outcome(
        pass,
        format!(
            "relative errors: E {:.2e}, J {:.2e}, K {:.2e}, omega {:.2e}, profile {:.2e}",
            s.energy.value, s.kinetic.value, s.hartree.value, s.omega.value, s.profile.value
        ),
    )
}

fn spectral_facts(gs: &GroundState) -> Result<Verdicts> {
    let r = analyze(gs, &SpectralOptions::default())?;
    let w = gs.omega.abs();
    let ray = rel(r.rayleigh_lplus_phi, r.rayleigh_expected);
    let pass = r.n_lplus == 1 && r.lambda_min_lminus.abs() < 1e-6 * w && r.lminus_phi_correlation > 0.999 && ray < 1e-4;
    let detail = format!(
        "n(L+) {}, lambda_min(L-) {:.2e} (bound {:.2e}), correlation {:.6}, Rayleigh rel. error {:.2e}",
        r.n_lplus,
        r.lambda_min_lminus,
        1e-6 * w,
        r.lminus_phi_correlation,
        ray
    );
    Ok(Verdicts { pass, detail })
}

fn vk_formula() -> Result<Verdicts> {
    let mut pass = true;
    let mut parts = Vec::new();
    // Algebraic tails at p < 2 need the wider box.
    for (p, half_width) in [(1.8, 64.0), (2.2, 16.0), (3.0, 16.0)] {
        let gs = classical_state(p, half_width, 2048)?;
        let vk = vk_quantity(&LinearizedPair::new(&gs)?)?;
        let ratio = vk.value / gs.mass();
        let big = gs.params.gamma_big();
        let target = -big / (4.0 * (p - 1.0));
        let err = rel(ratio, target);
        pass &= err < 5e-2 && ratio.signum() == -big.signum();
        parts.push(format!("p={p}: {ratio:.8} vs {target:.8} (rel {err:.1e})"));
    }
    outcome(pass, parts.join("; "))
}

fn stability_dichotomy() -> Result<Verdicts> {
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut pass = true;
    for (p, unstable) in [(4.0, true), (2.2, false)] {
        let gs = classical_state(p, 16.0, 2048)?;
        let r = analyze(&gs, &SpectralOptions::default())?;
        pass &= match (&r.growing_mode, unstable) {
            (Some(m), true) => m.residual < 1e-6 && r.index_count == 1,
            (None, false) => r.index_count == 0,
            _ => false,
        };
        rows.push(match &r.growing_mode {
            Some(m) => format!(
                "p={p}: rate {:.6}, residual {:.1e}, index {}",
                m.rate, m.residual, r.index_count
            ),
            None => format!("p={p}: no growing mode, index {}", r.index_count),
        });
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(600);
    outcome(pass, format!("{}; {elapsed:?}", rows.join("; ")))
}

fn rearrangement_suite() -> Result<Verdicts> {
    // Hardy-Littlewood and Riesz hold on the grid up to rounding. Re-centring
    // a sampled profile perturbs the spectral gradient norm at O(1e-8); the
    // Polya-Szego tolerance covers that.
    const TOL: [f64; 4] = [1e-6, 1e-6, 1e-12, 1e-12];
    let start = Instant::now();
    let grid = GridSpec::cube(1, 1024, 16.0)?;
    let functional = Functional::new(&ModelParams::from_alpha(1, 1.0, 0.5, 2.2, 1.0)?, &grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut violations = [0usize; 4];
    let mut worst = [f64::MIN; 4];
    for _ in 0..200 {
        let f = common::bumps(&grid, &mut rng);
        let g = common::bumps(&grid, &mut rng);
        let excess = [
            check_polya_szego(&f, 0.5).map(|(a, b)| (b - a) / a)?,
            check_polya_szego(&f, 1.0).map(|(a, b)| (b - a) / a)?,
            check_hardy_littlewood(&f, &g).map(|(a, b)| (a - b) / b)?,
            check_hartree_rearrangement(&f, &functional).map(|(a, b)| (a - b) / b)?,
        ];
        for (i, e) in excess.into_iter().enumerate() {
            worst[i] = worst[i].max(e);
            violations[i] += usize::from(e > TOL[i]);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations.iter().all(|&v| v == 0) && elapsed < Duration::from_secs(120),
        format!(
            "200 fields each, violations PS(0.5) {} PS(1) {} HL {} Riesz {}; worst relative excess {:.1e} {:.1e} {:.1e} {:.1e}; {elapsed:?}",
            violations[0], violations[1], violations[2], violations[3], worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn gradient_check() -> Result<Verdicts> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let beta = [0.5, 1.0][i % 2];
        let p = [1.8, 2.5][(i / 2) % 2];
        let d = [1, 2][(i / 4) % 2];
        let grid = if d == 1 {
            GridSpec::cube(1, 256, 8.0)?
        } else {
            GridSpec::cube(2, 32, 6.0)?
        };
        let params = ModelParams::from_alpha(d, beta, 0.5 * d as f64, p, 1.0)?;
        let f = Functional::new(&params, &grid)?;
        // A positive floor keeps |u|^p smooth along the whole difference stencil.
        let u = common::bumps(&grid, &mut rng).map(|x| x + 0.1);
        let h = common::signed_bumps(&grid, &mut rng);
        let eps = 1e-4 * rng.gen_range(0.5..1.5);
        let plus = f.energy(&u.axpy(eps, &h)?)?.e;
        let minus = f.energy(&u.axpy(-eps, &h)?)?.e;
        let fd = (plus - minus) / (2.0 * eps);
        let exact = inner(&f.gradient(&u)?, &h)?;
        worst = worst.max(rel(fd, exact));
    }
    outcome(worst < 1e-6, format!("20 pairs, worst relative error {worst:.2e}"))
}

fn tail_asymptotics() -> Result<Verdicts> {
    let start = Instant::now();
    let grid = GridSpec::cube(1, 8192, 128.0)?;
    let opts = SolverOptions::default();
    let algebraic = solve_ground_state(&ModelParams::from_alpha(1, 1.0, 0.5, 1.8, 1.0)?, &grid, &opts)?;
    let exponential = solve_ground_state(&ModelParams::from_alpha(1, 1.0, 0.5, 2.2, 1.0)?, &grid, &opts)?;
    let power = fit_tail_exponent(&algebraic)?;
    let log_lin = fit_exponential_tail(&exponential)?;
    let plateaus = [plateau_check(&algebraic)?, plateau_check(&exponential)?];
    let elapsed = start.elapsed();
    let pass = power.rel_err < 0.1
        && log_lin.r_squared > 0.99
        && plateaus.iter().all(|c| c.rel_err < 0.05)
        && elapsed < Duration::from_secs(900);
    outcome(
        pass,
        format!(
            "p=1.8 exponent {:.4} vs {:.4} ({:.1}%); p=2.2 R^2 {:.6}, rate {:.4}; plateau errors {:.2e} {:.2e}; {elapsed:?}",
            power.exponent,
            power.expected,
            100.0 * power.rel_err,
            log_lin.r_squared,
            log_lin.rate,
            plateaus[0].rel_err,
            plateaus[1].rel_err
        ),
    )
}

fn determinism() -> Result<Verdicts> {
    let dir = tempfile::tempdir().map_err(|e| choquard::Error::Format(e.to_string()))?;
    let mut outputs = Vec::new();
    let out = dir.path().join("stability.json");
    for _ in 0..2 {
        let args = [
            "choquard",
            "stability",
            "--gamma",
            "0.5",
            "--p",
            "2.2",
            "--grid",
            "1024",
            "--box",
            "32",
            "--seed",
            "11",
            "--out",
        ];
        let code = choquard::cli::run(args.iter().map(|s| s.to_string()).chain([out.display().to_string()]));
        let bytes = std::fs::read(&out).map_err(|e| choquard::Error::io(&out, e))?;
        outputs.push((code, bytes));
    }
    let same = outputs[0] == outputs[1];
    outcome(
        same && outputs[0].0 == 0,
        format!(
            "exit codes {} {}, {} bytes, identical: {same}",
            outputs[0].0,
            outputs[1].0,
            outputs[0].1.len()
        ),
    )
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |name: &str| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str()));
    let mut failures = 0;
    let mut record = |name: &str, result: Result<Verdicts>| {
        let (tag, detail) = match result {
            Ok(v) if v.pass => ("PASS", v.detail),
            Ok(v) => ("FAIL", v.detail),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        failures += usize::from(tag == "FAIL");
        println!("{tag} {name}: {detail}");
    };

    if selected("classifier_truth_table") {
        record("classifier_truth_table", classifier_truth_table());
    }
    let needs_reference = ["reference_solve", "scaling_laws", "spectral_facts"]
        .iter()
        .any(|n| selected(n));
    if needs_reference {
        let start = Instant::now();
        let gs = reference_state();
        let elapsed = start.elapsed();
        for name in ["reference_solve", "scaling_laws", "spectral_facts"] {
            if !selected(name) {
                continue;
            }
            let result = match &gs {
                Ok(gs) => match name {
                    "reference_solve" => reference_solve(gs, elapsed),
                    "scaling_laws" => scaling_laws(gs),
                    _ => spectral_facts(gs),
                },
                Err(e) => Ok(Verdicts {
                    pass: false,
                    detail: format!("reference solve failed: {e}"),
                }),
            };
            record(name, result);
        }
    }
    let rest: [(&str, Criterion); 6] = [
        ("vk_formula", vk_formula),
        ("stability_dichotomy", stability_dichotomy),
        ("rearrangement_suite", rearrangement_suite),
        ("gradient_check", gradient_check),
        ("tail_asymptotics", tail_asymptotics),
        ("determinism", determinism),
    ];
    for (name, run) in rest {
        if selected(name) {
            record(name, run());
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
