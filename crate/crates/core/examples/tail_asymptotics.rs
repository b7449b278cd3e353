//! Algebraic tail below p = 2, exponential tail above, and the far-field plateau.

use choquard::solver::{fit_exponential_tail, fit_tail_exponent, plateau_check, solve_ground_state, SolverOptions};
use choquard::{GridSpec, ModelParams};

fn main() -> choquard::Result<()> {
    let grid = GridSpec::cube(1, 8192, 128.0)?;
    let opts = SolverOptions::default();
    let slow = solve_ground_state(&ModelParams::from_alpha(1, 1.0, 0.5, 1.8, 1.0)?, &grid, &opts)?;
    let fit = fit_tail_exponent(&slow)?;
    println!("p=1.8: phi ~ |x|^-{:.4}, predicted {:.4}", fit.exponent, fit.expected);
    let fast = solve_ground_state(&ModelParams::from_alpha(1, 1.0, 0.5, 2.2, 1.0)?, &grid, &opts)?;
    let fit = fit_exponential_tail(&fast)?;
    println!(
        "p=2.2: phi ~ exp(-{:.4} |x|), sqrt(-omega) = {:.4}, R^2 {:.6}",
        fit.rate,
        (-fast.omega).sqrt(),
        fit.r_squared
    );
    for gs in [&slow, &fast] {
        let c = plateau_check(gs)?;
        println!("plateau at |x| = {:.1}: {:.6} vs {:.6}", c.radius, c.ratio, c.expected);
    }
    Ok(())
}
