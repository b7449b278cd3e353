//! Real growing mode of the linearized flow above the critical power.

use choquard::linops::{growing_mode, LinearizedPair};
use choquard::solver::{solve_at_frequency, SolverOptions};
use choquard::{GridSpec, ModelParams};

fn main() -> choquard::Result<()> {
    let grid = GridSpec::cube(1, 512, 16.0)?;
    for p in [2.2, 3.0, 4.0, 5.0] {
        let params = ModelParams::from_alpha(1, 1.0, 0.5, p, 1.0)?;
        let gs = solve_at_frequency(&params, &grid, -1.0, &SolverOptions::default())?;
        match growing_mode(&LinearizedPair::new(&gs)?)? {
            Some(m) => println!("p={p}: growth rate {:.6} (residual {:.1e})", m.rate, m.residual),
            None => println!("p={p}: no growing mode"),
        }
    }
    Ok(())
}
