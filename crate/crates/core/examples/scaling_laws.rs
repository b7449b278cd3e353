//! Energy, kinetic, Hartree and frequency against mass, compared with the power laws.

use choquard::solver::{mass_exponent, solve_ground_state, verify_identities, SolverOptions};
use choquard::{GridSpec, ModelParams};

fn main() -> choquard::Result<()> {
    let grid = GridSpec::cube(1, 4096, 32.0)?;
    let opts = SolverOptions::default();
    let base = ModelParams::from_gamma(1, 1.0, 0.5, 2.2, 1.0)?;
    let light = solve_ground_state(&base, &grid, &opts)?;
    println!("mass exponent of E: {:.6}", mass_exponent(&base));
    for m in [1.5, 2.0, 4.0] {
        let heavy = solve_ground_state(&base.clone().with_mass(m)?, &grid, &opts)?;
        let s = verify_identities(&light, Some(&heavy))?
            .scaling
            .expect("companion given");
        println!(
            "m={m}: E ratio {:.10} (rel err {:.1e}), omega {:.6}, profile err {:.1e}",
            heavy.breakdown.e / light.breakdown.e,
            s.energy.value,
            heavy.omega,
            s.profile.value
        );
    }
    Ok(())
}
