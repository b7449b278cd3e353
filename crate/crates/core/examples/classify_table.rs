//! Closed-form stability verdicts for a few Hartree and Klein-Gordon-Hartree tuples.

use choquard::classify::{classify_hartree, classify_kg};
use choquard::ModelParams;

fn main() -> choquard::Result<()> {
    for (d, alpha, p) in [
        (3, 2.0, 2.0),
        (3, 2.0, 7.0 / 3.0),
        (3, 2.0, 3.0),
        (3, 2.0, 6.0),
        (1, 0.5, 2.2),
    ] {
        let params = ModelParams::from_alpha(d, 1.0, alpha, p, 1.0)?;
        let v = classify_hartree(&params);
        println!(
            "hartree d={d} alpha={alpha} p={p:.4}: {:?} (Gamma {:.4}) {}",
            v.verdict, v.gamma_big, v.rule
        );
    }
    let base = ModelParams::from_alpha(3, 1.0, 2.0, 2.0, 1.0)?;
    for w in [0.5, 0.7, 0.71, 0.9] {
        let v = classify_kg(&base.clone().with_kg_omega(w)?)?;
        println!(
            "kg omega={w}: {:?} (threshold {:.5})",
            v.verdict,
            v.kg_threshold.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
