//! Klein-Gordon-Hartree profiles obtained by rescaling the omega = -1 state.

use choquard::classify::{classify_kg, kg_profile, kg_residual};
use choquard::grid::l2_norm_sq;
use choquard::linops::{classical_mass, d11_kg_closed_form};
use choquard::solver::{solve_at_frequency, SolverOptions};
use choquard::{GridSpec, ModelParams};

fn main() -> choquard::Result<()> {
    let params = ModelParams::from_alpha(1, 1.0, 0.5, 2.2, 1.0)?;
    let grid = GridSpec::cube(1, 2048, 64.0)?;
    let gs = solve_at_frequency(&params, &grid, -1.0, &SolverOptions::default())?;
    let m_cl = classical_mass(&params, gs.mass(), gs.omega);
    for w in [0.3, 0.6, 0.75, 0.9] {
        let psi = kg_profile(&gs, w)?;
        let verdict = classify_kg(&params.clone().with_kg_omega(w)?)?.verdict;
        println!(
            "omega={w}: mass {:.6}, residual {:.1e}, D11 {:+.6}, {verdict:?}",
            l2_norm_sq(&psi),
            kg_residual(&params, &psi, w)?,
            d11_kg_closed_form(&params, m_cl, w)
        );
    }
    Ok(())
}
