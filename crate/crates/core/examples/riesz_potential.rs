//! Riesz potential of a Gaussian against the closed form at the origin.

use choquard::spectral::{RieszOp, SingularWeight};
use choquard::{Field, GridSpec};

fn main() -> choquard::Result<()> {
    // In d = 1, I_alpha[exp(-x^2)](0) = c int |y|^{-gamma} exp(-y^2) dy = c Gamma((1 - gamma)/2).
    let alpha = 0.5;
    let gamma: f64 = 1.0 - alpha;
    for n in [512, 1024, 2048] {
        let grid = GridSpec::cube(1, n, 16.0)?;
        let g = Field::from_fn(&grid, |x| (-x[0] * x[0]).exp())?;
        for weight in [SingularWeight::CellAverage, SingularWeight::Corrected] {
            let op = RieszOp::with_weight(&grid, alpha, weight)?;
            let exact = op.constant() * statrs::function::gamma::gamma((1.0 - gamma) / 2.0);
            let v = op.convolve(&g)?.values()[grid.center()[0]];
            println!(
                "h={:.5} {weight:?}: rel err {:.2e}",
                grid.spacing(0),
                (v - exact).abs() / exact
            );
        }
    }
    Ok(())
}
