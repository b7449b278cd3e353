use std::path::PathBuf;

use thiserror::Error;

use crate::params::AdmissibilityVerdict;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field contains a non-finite value at index {0}")]
    NonFinite(usize),

    #[error("field file format error: {0}")]
    Format(String),

    #[error("field file truncated: expected {expected} payload bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("negative input to a rearrangement inequality ({0})")]
    NegativeInput(&'static str),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("parameters outside the admissible range for this operation: {}", .0.summary())]
    Inadmissible(AdmissibilityVerdict),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("energy of the converged state is not negative (E = {0:.6e}); box, grid or parameters are unsuitable")]
    EnergyNotNegative(f64),

    #[error("profile tail at the box edge is too large ({ratio:.3e} of the peak, limit {limit:.1e}); enlarge the box")]
    BoundaryMass { ratio: f64, limit: f64 },

    #[error("ill-conditioned solve: {0}")]
    IllConditioned(String),

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
