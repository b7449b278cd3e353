//! The constrained energy `E(u) = J/2 - K/(2p)` with
//! `J = || |grad|^beta u ||^2` and `K = < I_alpha[|u|^p], |u|^p >`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{dot, l2_norm_sq, Field, GridSpec};
use crate::params::ModelParams;
use crate::spectral::{MultiplierOp, RieszOp, SingularWeight};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub mass: f64,
}

impl EnergyBreakdown {
    pub fn new(j: f64, k: f64, mass: f64, p: f64) -> Self {
        Self {
            j,
            k,
            e: j / 2.0 - k / (2.0 * p),
            mass,
        }
    }
}

/// `sign(u) |u|^e`.
pub(crate) fn signed_pow(u: f64, e: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.signum() * u.abs().powf(e)
    }
}

/// Operators needed to evaluate the functional on one grid.
#[derive(Clone, Debug)]
pub struct Functional {
    params: ModelParams,
    grid: GridSpec,
    lap: MultiplierOp,
    riesz: RieszOp,
}

impl Functional {
    pub fn new(params: &ModelParams, grid: &GridSpec) -> Result<Self> {
        Self::with_weight(params, grid, SingularWeight::default())
    }

    pub fn with_weight(params: &ModelParams, grid: &GridSpec, weight: SingularWeight) -> Result<Self> {
        params.validate()?;
        if grid.ndim() != params.d {
            return Err(Error::GridMismatch(format!(
                "grid has {} axes but d = {}",
                grid.ndim(),
                params.d
            )));
        }
        Ok(Self {
            params: params.clone(),
            grid: grid.clone(),
            lap: MultiplierOp::frac_lap(grid, params.beta)?,
            riesz: RieszOp::with_weight(grid, params.alpha, weight)?,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn lap(&self) -> &MultiplierOp {
        &self.lap
    }

    pub fn riesz(&self) -> &RieszOp {
        &self.riesz
    }

    /// `|u|^p` samples.
    fn density(&self, u: &[f64]) -> Result<Vec<f64>> {
        let p = self.params.p;
        let rho: Vec<f64> = u.iter().map(|v| v.abs().powf(p)).collect();
        if let Some(i) = rho.iter().position(|v| !v.is_finite()) {
            return Err(Error::Evaluation(format!("|u|^p overflows at index {i}")));
        }
        Ok(rho)
    }

    /// `I_alpha[|u|^p]`.
    pub fn potential(&self, u: &Field) -> Result<Field> {
        self.grid.ensure_same(u.grid())?;
        let rho = self.density(u.values())?;
        Ok(Field::from_parts(self.grid.clone(), self.riesz.convolve_slice(&rho)))
    }

    pub fn energy(&self, u: &Field) -> Result<EnergyBreakdown> {
        self.grid.ensure_same(u.grid())?;
        let j = self.lap.quadratic_form(u)?;
        let rho = self.density(u.values())?;
        let v = self.riesz.convolve_slice(&rho);
        let k = dot(&v, &rho) * self.grid.cell_volume();
        finite_breakdown(EnergyBreakdown::new(j, k, l2_norm_sq(u), self.params.p))
    }

    /// `(-Delta)^beta u - I_alpha[|u|^p] |u|^{p-2} u`, the L2 gradient of `E`.
    pub fn gradient(&self, u: &Field) -> Result<Field> {
        Ok(self.energy_and_gradient(u)?.1)
    }

    pub fn energy_and_gradient(&self, u: &Field) -> Result<(EnergyBreakdown, Field)> {
        self.grid.ensure_same(u.grid())?;
        let p = self.params.p;
        let vals = u.values();
        let lap_u = self.lap.apply_slice(vals);
        let rho = self.density(vals)?;
        let v = self.riesz.convolve_slice(&rho);
        let vol = self.grid.cell_volume();
        let j = dot(&lap_u, vals) * vol;
        let k = dot(&v, &rho) * vol;
        let grad: Vec<f64> = lap_u
            .iter()
            .zip(&v)
            .zip(vals)
            .map(|((l, w), &x)| l - w * signed_pow(x, p - 1.0))
            .collect();
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::Evaluation(format!("gradient is not finite at index {i}")));
        }
        let e = finite_breakdown(EnergyBreakdown::new(j, k, l2_norm_sq(u), p))?;
        Ok((e, Field::from_parts(self.grid.clone(), grad)))
    }
}

fn finite_breakdown(b: EnergyBreakdown) -> Result<EnergyBreakdown> {
    if [b.j, b.k, b.e, b.mass].iter().all(|v| v.is_finite()) {
        Ok(b)
    } else {
        Err(Error::Evaluation(format!("non-finite energy terms {b:?}")))
    }
}

pub fn energy(u: &Field, params: &ModelParams) -> Result<EnergyBreakdown> {
    Functional::new(params, u.grid())?.energy(u)
}

pub fn energy_gradient(u: &Field, params: &ModelParams) -> Result<Field> {
    Functional::new(params, u.grid())?.gradient(u)
}
