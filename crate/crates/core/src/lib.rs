//! Normalized ground states of the fractional Choquard (Hartree) equation
//!
//! `(-Delta)^beta phi - I_alpha[|phi|^p] |phi|^{p-2} phi = omega phi`,
//!
//! computed by energy minimization at fixed mass, together with identity
//! checks, the linearized operators `L+`/`L-`, and stability classification
//! for Hartree and Klein-Gordon-Hartree standing waves.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod cli;
pub mod config;
pub mod energy;
pub mod error;
pub mod grid;
pub mod krylov;
pub mod linops;
pub mod params;
pub mod quad;
pub mod rearrange;
pub mod report;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Field, GridSpec};
pub use params::{classify_admissibility, AdmissibilityVerdict, ModelParams, Regime};
