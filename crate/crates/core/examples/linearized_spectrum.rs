//! Lowest eigenvalues of L+ and L- at the reference ground state, plus the VK quantity.

use choquard::linops::{analyze, SpectralOptions};
use choquard::solver::{solve_ground_state, SolverOptions};
use choquard::{GridSpec, ModelParams};

fn main() -> choquard::Result<()> {
    let params = ModelParams::from_gamma(1, 1.0, 0.5, 2.2, 1.0)?;
    let grid = GridSpec::cube(1, 2048, 32.0)?;
    let gs = solve_ground_state(&params, &grid, &SolverOptions::default())?;
    let r = analyze(&gs, &SpectralOptions::default())?;
    println!("omega {:.8}  method {:?}", r.omega, r.method);
    println!("L+ lowest {:?}", r.lowest_lplus);
    println!("L- lowest {:?}", r.lowest_lminus);
    println!(
        "n(L+) {}  n(L-) {}  kernel(L+) {}",
        r.n_lplus, r.n_lminus, r.kernel_dim_estimate_lplus
    );
    println!(
        "<L+ phi, phi> {:.10} vs {:.10}",
        r.rayleigh_lplus_phi, r.rayleigh_expected
    );
    println!("<L+^-1 phi, phi> {:.10} vs {:?}", r.vk_quantity, r.vk_closed_form);
    println!("index count {}", r.index_count);
    Ok(())
}
