//! Run configuration: TOML with `[model]`, `[grid]`, `[solver]` and `[output]`
//! tables. Unknown keys are rejected; defaults are filled in and echoed back.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::linops::EigenMethod;
use crate::params::ModelParams;
use crate::solver::SolverOptions;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Hartree,
    Kg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub d: usize,
    pub beta: f64,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub p: Option<f64>,
    pub mass: f64,
    /// Klein-Gordon-Hartree frequency.
    pub omega: Option<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kind: ModelKind::Hartree,
            d: 1,
            beta: 1.0,
            alpha: None,
            gamma: None,
            p: None,
            mass: 1.0,
            omega: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Points per axis; a single entry applies to every axis.
    pub n: Vec<usize>,
    /// Half-width `L` of the box `[-L, L)^d`.
    #[serde(rename = "box")]
    pub half_width: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n: vec![4096],
            half_width: 32.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub rearrange_every: usize,
    pub init_sigma: Option<f64>,
    pub init_noise: f64,
    pub seed: u64,
    pub boundary_tol: f64,
    /// Solve at this fixed `omega < 0` instead of at fixed mass.
    pub frequency: Option<f64>,
    /// Mass of a second state used for the scaling checks.
    pub companion_mass: Option<f64>,
    pub eig_method: EigenMethod,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            tol: o.tol,
            max_iter: o.max_iter,
            rearrange_every: o.rearrange_every,
            init_sigma: o.init_sigma,
            init_noise: o.init_noise,
            seed: o.seed,
            boundary_tol: o.boundary_tol,
            frequency: None,
            companion_mass: None,
            eig_method: EigenMethod::Auto,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// JSON report (stdout when absent).
    pub out: Option<PathBuf>,
    /// FLD1 dump of the computed profile.
    pub field: Option<PathBuf>,
    /// `(r, phi(r))` CSV.
    pub profile: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn params(&self) -> Result<ModelParams> {
        let m = &self.model;
        let p = m.p.ok_or_else(|| Error::param("p", "the exponent p is required"))?;
        let kg = match m.kind {
            ModelKind::Kg => m.omega,
            ModelKind::Hartree => None,
        };
        ModelParams::from_parts(m.d, m.beta, m.alpha, m.gamma, p, m.mass, kg)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let d = self.model.d;
        let dims = match self.grid.n.as_slice() {
            [n] => vec![*n; d],
            ns if ns.len() == d => ns.to_vec(),
            ns => return Err(Error::InvalidGrid(format!("{} grid sizes given for d = {d}", ns.len()))),
        };
        GridSpec::new(dims, self.grid.half_width)
    }

    pub fn solver_options(&self) -> SolverOptions {
        let s = &self.solver;
        SolverOptions {
            tol: s.tol,
            max_iter: s.max_iter,
            rearrange_every: s.rearrange_every,
            init_sigma: s.init_sigma,
            init_noise: s.init_noise,
            seed: s.seed,
            boundary_tol: s.boundary_tol,
            ..SolverOptions::default()
        }
    }
}
