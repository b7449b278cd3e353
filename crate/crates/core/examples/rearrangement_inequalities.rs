//! Discrete symmetric-decreasing rearrangement and the inequalities it satisfies.

use choquard::energy::Functional;
use choquard::rearrange::{check_hardy_littlewood, check_hartree_rearrangement, check_polya_szego, rearranged};
use choquard::{Field, GridSpec, ModelParams};

fn main() -> choquard::Result<()> {
    let grid = GridSpec::cube(1, 1024, 16.0)?;
    let two_bumps = Field::from_fn(&grid, |x| {
        (-(x[0] - 4.0).powi(2)).exp() + 0.6 * (-(x[0] + 3.0).powi(2) / 2.0).exp()
    })?;
    let shifted = Field::from_fn(&grid, |x| (-(x[0] - 1.0).powi(2) / 3.0).exp())?;
    let star = rearranged(&two_bumps);
    println!(
        "peak {:.6} -> {:.6} at the centre",
        two_bumps.sup_norm(),
        star.values()[grid.center()[0]]
    );
    for beta in [0.5, 1.0] {
        let (a, b) = check_polya_szego(&two_bumps, beta)?;
        println!("Polya-Szego beta={beta}: {a:.8} >= {b:.8}");
    }
    let (a, b) = check_hardy_littlewood(&two_bumps, &shifted)?;
    println!("Hardy-Littlewood: {a:.8} <= {b:.8}");
    let functional = Functional::new(&ModelParams::from_alpha(1, 1.0, 0.5, 2.2, 1.0)?, &grid)?;
    let (a, b) = check_hartree_rearrangement(&two_bumps, &functional)?;
    println!("Riesz with the Riesz kernel: {a:.8} <= {b:.8}");
    Ok(())
}
