//! Which existence regime a parameter tuple falls into.

use choquard::{classify_admissibility, ModelParams};

fn main() -> choquard::Result<()> {
    let tuples = [
        (1, 1.0, 0.5, 2.2),
        (1, 1.0, 0.5, 1.8),
        (1, 1.0, 0.5, 4.0),
        (1, 0.5, 0.5, 2.2),
        (1, 1.0, 0.5, 1.2),
        (3, 1.0, 2.0, 6.0),
    ];
    for (d, beta, gamma, p) in tuples {
        let params = ModelParams::from_gamma(d, beta, gamma, p, 1.0)?;
        let v = classify_admissibility(&params);
        println!("d={d} beta={beta} gamma={gamma} p={p}: {}", v.summary());
        for note in &v.notes {
            println!("    {note}");
        }
    }
    Ok(())
}
