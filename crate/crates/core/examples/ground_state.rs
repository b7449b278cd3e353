//! Normalized ground state at mass 1 and the identities it satisfies.

use choquard::solver::{solve_ground_state, verify_identities, SolverOptions};
use choquard::{GridSpec, ModelParams};

fn main() -> choquard::Result<()> {
    let params = ModelParams::from_gamma(1, 1.0, 0.5, 2.2, 1.0)?;
    let grid = GridSpec::cube(1, 4096, 32.0)?;
    let gs = solve_ground_state(&params, &grid, &SolverOptions::default())?;
    let b = gs.breakdown;
    println!("iterations {}  residual {:.2e}", gs.iterations, gs.residual);
    println!("omega {:.10}  E {:.10}  J {:.10}  K {:.10}", gs.omega, b.e, b.j, b.k);
    let ids = verify_identities(&gs, None)?;
    println!(
        "Pohozaev {:.2e}  omega m = J - K: {:.2e}",
        ids.pohozaev.value, ids.omega_formula.value
    );
    if let Some(c) = &ids.classical {
        println!("mass of the omega = -1 profile {:.8}", c.mass);
    }
    println!("all identities hold: {}", ids.all_pass());
    Ok(())
}
