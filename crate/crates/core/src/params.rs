//! Scalar model parameters and the regime they fall in.
//!
//! The model is fixed by the dimension `d`, the order `beta` of the fractional
//! Laplacian, the Riesz order `alpha` (equivalently `gamma = d - alpha`, the
//! exponent of the interaction kernel `|x|^-gamma`), the power `p`, the mass
//! constraint and an optional Klein-Gordon frequency.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};

/// Relative slack used when deciding whether a boundary equality holds.
///
/// Parameter tuples such as `p = 7/3` are not representable exactly, so the
/// regime boundaries are compared with this tolerance.
pub const BOUNDARY_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    pub d: usize,
    pub beta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub p: f64,
    pub mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kg_omega: Option<f64>,
}

/// Wire form: either `alpha` or `gamma` may be given (or both, if consistent).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    d: usize,
    #[serde(default = "one")]
    beta: f64,
    alpha: Option<f64>,
    gamma: Option<f64>,
    p: f64,
    #[serde(default = "one")]
    mass: f64,
    kg_omega: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl ModelParams {
    /// Build from the Riesz order `alpha`; `gamma` is derived.
    pub fn from_alpha(d: usize, beta: f64, alpha: f64, p: f64, mass: f64) -> Result<Self> {
        let params = Self {
            d,
            beta,
            alpha,
            gamma: d as f64 - alpha,
            p,
            mass,
            kg_omega: None,
        };
        params.validate()?;
        Ok(params)
    }

    /// Build from the kernel exponent `gamma`; `alpha` is derived.
    pub fn from_gamma(d: usize, beta: f64, gamma: f64, p: f64, mass: f64) -> Result<Self> {
        let params = Self {
            d,
            beta,
            alpha: d as f64 - gamma,
            gamma,
            p,
            mass,
            kg_omega: None,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_kg_omega(mut self, omega: f64) -> Result<Self> {
        self.kg_omega = Some(omega);
        self.validate()?;
        Ok(self)
    }

    pub fn with_mass(mut self, mass: f64) -> Result<Self> {
        self.mass = mass;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d as f64;
        if self.d == 0 {
            return Err(Error::param("d", "dimension must be a positive integer"));
        }
        let finite = [self.beta, self.alpha, self.gamma, self.p, self.mass];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("params", "all parameters must be finite"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::param("beta", format!("{} is not in (0, 1]", self.beta)));
        }
        if !(self.alpha > 0.0 && self.alpha < d) {
            return Err(Error::param("alpha", format!("{} is not in (0, {d})", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.gamma < d) {
            return Err(Error::param("gamma", format!("{} is not in (0, {d})", self.gamma)));
        }
        if ((self.alpha + self.gamma) - d).abs() > 1e-12 * d {
            return Err(Error::param(
                "gamma",
                format!("alpha + gamma = {} must equal d = {d}", self.alpha + self.gamma),
            ));
        }
        if !(self.p > 1.0) {
            return Err(Error::param("p", format!("{} must exceed 1", self.p)));
        }
        if !(self.mass > 0.0) {
            return Err(Error::param("mass", format!("{} must be positive", self.mass)));
        }
        if let Some(w) = self.kg_omega {
            if !(w.is_finite() && w.abs() < 1.0) {
                return Err(Error::param("kg_omega", format!("{w} is not in (-1, 1)")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawParams = serde_json::from_str(text).map_err(|e| Error::Config(format!("model params: {e}")))?;
        Self::from_parts(raw.d, raw.beta, raw.alpha, raw.gamma, raw.p, raw.mass, raw.kg_omega)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("params serialize")
    }

    /// Shared constructor for wire formats that accept either `alpha` or `gamma`.
    pub fn from_parts(
        d: usize,
        beta: f64,
        alpha: Option<f64>,
        gamma: Option<f64>,
        p: f64,
        mass: f64,
        kg_omega: Option<f64>,
    ) -> Result<Self> {
        let mut params = match (alpha, gamma) {
            (Some(a), None) => Self::from_alpha(d, beta, a, p, mass)?,
            (None, Some(g)) => Self::from_gamma(d, beta, g, p, mass)?,
            (Some(a), Some(g)) => {
                if ((a + g) - d as f64).abs() > 1e-12 * d as f64 {
                    return Err(Error::param(
                        "gamma",
                        format!("alpha = {a} and gamma = {g} do not sum to d = {d}"),
                    ));
                }
                Self::from_alpha(d, beta, a, p, mass)?
            }
            (None, None) => return Err(Error::param("alpha", "one of alpha or gamma is required")),
        };
        if let Some(w) = kg_omega {
            params = params.with_kg_omega(w)?;
        }
        Ok(params)
    }

    /// `2 beta - gamma - d (p - 2)`; its sign decides stability of the waves.
    pub fn gamma_big(&self) -> f64 {
        2.0 * self.beta - self.gamma - self.d as f64 * (self.p - 2.0)
    }

    /// Normalization of the Riesz potential: `I_alpha(x) = c / |x|^gamma`.
    pub fn riesz_constant(&self) -> f64 {
        riesz_constant(self.d, self.alpha)
    }

    pub fn is_classical(&self) -> bool {
        self.beta == 1.0
    }

    /// Exponent of the mass in `E_lambda = lambda^e E_1`.
    pub fn energy_mass_exponent(&self) -> f64 {
        1.0 + 2.0 * self.beta * (self.p - 1.0) / self.gamma_big()
    }
}

/// `Gamma((d - alpha)/2) / (Gamma(alpha/2) pi^(d/2) 2^alpha)`.
pub fn riesz_constant(d: usize, alpha: f64) -> f64 {
    let d = d as f64;
    gamma_fn((d - alpha) / 2.0) / (gamma_fn(alpha / 2.0) * PI.powf(d / 2.0) * 2f64.powf(alpha))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    ClassicalExistence,
    FractionalNormalized,
    Both,
    NoSoliton,
    OutOfTheory,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::ClassicalExistence => "ClassicalExistence",
            Regime::FractionalNormalized => "FractionalNormalized",
            Regime::Both => "Both",
            Regime::NoSoliton => "NoSoliton",
            Regime::OutOfTheory => "OutOfTheory",
        }
    }

    /// Whether the constrained minimization problem has a minimizer.
    pub fn admits_normalized(self) -> bool {
        matches!(self, Regime::FractionalNormalized | Regime::Both)
    }

    pub fn admits_classical(self) -> bool {
        matches!(self, Regime::ClassicalExistence | Regime::Both)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityVerdict {
    pub regime: Regime,
    pub gamma_big: f64,
    pub notes: Vec<String>,
}

impl AdmissibilityVerdict {
    pub fn summary(&self) -> String {
        format!("regime {} (Gamma = {})", self.regime.as_str(), self.gamma_big)
    }
}

fn strictly_less(a: f64, b: f64) -> bool {
    a < b - BOUNDARY_EPS * (1.0 + a.abs().max(b.abs()))
}

/// Whether `|x|` is within the boundary tolerance of zero.
pub(crate) fn near_zero(x: f64) -> bool {
    x.abs() <= BOUNDARY_EPS * 10.0
}

/// The classical existence window `(d-2)/(2d-gamma) < 1/p < d/(2d-gamma)`.
pub fn classical_window(params: &ModelParams) -> bool {
    let d = params.d as f64;
    let denom = 2.0 * d - params.gamma;
    let inv_p = 1.0 / params.p;
    strictly_less((d - 2.0) / denom, inv_p) && strictly_less(inv_p, d / denom)
}

/// The normalized-solution window `0 < (p-2) d + gamma < 2 beta`.
pub fn normalized_window(params: &ModelParams) -> bool {
    let s = (params.p - 2.0) * params.d as f64 + params.gamma;
    strictly_less(0.0, s) && strictly_less(s, 2.0 * params.beta)
}

pub fn classify_admissibility(params: &ModelParams) -> AdmissibilityVerdict {
    let gamma_big = params.gamma_big();
    let classical = params.is_classical() && classical_window(params);
    let normalized = normalized_window(params);
    let mut notes = Vec::new();

    let regime = match (classical, normalized) {
        (true, true) => Regime::Both,
        (true, false) => Regime::ClassicalExistence,
        (false, true) => Regime::FractionalNormalized,
        (false, false) if params.is_classical() => Regime::NoSoliton,
        (false, false) => Regime::OutOfTheory,
    };

    match regime {
        Regime::NoSoliton => notes.push(
            "outside (d-2)/(2d-gamma) < 1/p < d/(2d-gamma): the only regular localized solution is zero".to_string(),
        ),
        Regime::OutOfTheory => notes
            .push("beta < 1 with 0 < (p-2)d + gamma < 2 beta violated: no existence claim is available".to_string()),
        _ => {}
    }
    if normalized {
        notes.push("0 < (p-2)d + gamma < 2 beta: normalized minimizers exist and are bell-shaped".to_string());
        if params.p <= 2.0 && !params.is_classical() {
            notes.push(
                "p <= 2: the fractional stability statement is proved only for p > 2; numerical checks apply"
                    .to_string(),
            );
        }
    }
    if regime != Regime::NoSoliton && regime != Regime::OutOfTheory && near_zero(gamma_big) {
        notes.push("Gamma = 0: extra generalized kernel of the linearization; classified as stable".to_string());
    }

    AdmissibilityVerdict {
        regime,
        gamma_big,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hartree(d: usize, alpha: f64, p: f64) -> ModelParams {
        ModelParams::from_alpha(d, 1.0, alpha, p, 1.0).unwrap()
    }

    #[test]
    fn gamma_big_examples() {
        assert_eq!(hartree(3, 2.0, 2.0).gamma_big(), 1.0);
        assert_eq!(hartree(3, 2.0, 3.0).gamma_big(), -2.0);
        // p = 2 cancels the d(p-2) term: Gamma = 2 beta - gamma.
        let p = ModelParams::from_gamma(1, 1.0, 0.25, 2.0, 1.0).unwrap();
        assert_eq!(p.gamma_big(), 1.75);
    }

    #[test]
    fn admissibility_examples() {
        assert_eq!(classify_admissibility(&hartree(3, 2.0, 2.0)).regime, Regime::Both);
        assert_eq!(classify_admissibility(&hartree(3, 2.0, 6.0)).regime, Regime::NoSoliton);
        let frac = ModelParams::from_gamma(1, 0.5, 0.5, 2.2, 1.0).unwrap();
        assert_eq!(classify_admissibility(&frac).regime, Regime::FractionalNormalized);
    }

    #[test]
    fn classical_only_and_out_of_theory() {
        // d = 3, alpha = 2, p = 3: classical window holds, (p-2)d + gamma = 4 > 2.
        assert_eq!(
            classify_admissibility(&hartree(3, 2.0, 3.0)).regime,
            Regime::ClassicalExistence
        );
        let frac = ModelParams::from_gamma(1, 0.5, 0.5, 3.0, 1.0).unwrap();
        assert_eq!(classify_admissibility(&frac).regime, Regime::OutOfTheory);
    }

    #[test]
    fn boundaries() {
        // 1/p = d/(2d - gamma) exactly: p = 5/3 for d = 3, gamma = 1.
        let v = classify_admissibility(&hartree(3, 2.0, 5.0 / 3.0));
        assert_eq!(v.regime, Regime::NoSoliton);
        // Upper boundary of the normalized window (p-2)d + gamma = 2 -> only classical.
        let v = classify_admissibility(&hartree(3, 2.0, 7.0 / 3.0));
        assert_eq!(v.regime, Regime::ClassicalExistence);
        assert!(v.notes.iter().any(|n| n.contains("Gamma = 0")));
    }

    #[test]
    fn validation_errors() {
        assert!(ModelParams::from_alpha(1, 1.5, 0.5, 2.0, 1.0).is_err());
        assert!(ModelParams::from_alpha(1, 1.0, 1.0, 2.0, 1.0).is_err());
        assert!(ModelParams::from_alpha(1, 1.0, 0.5, 1.0, 1.0).is_err());
        assert!(ModelParams::from_alpha(1, 1.0, 0.5, 2.0, 0.0).is_err());
        assert!(hartree(1, 0.5, 2.0).with_kg_omega(1.0).is_err());
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let p = hartree(3, 2.0, 2.0).with_kg_omega(0.9).unwrap();
        let back = ModelParams::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
        let from_gamma = ModelParams::from_json(r#"{"d":3,"gamma":1.0,"p":2.0}"#).unwrap();
        assert_eq!(from_gamma.alpha, 2.0);
        assert!(ModelParams::from_json(r#"{"d":3,"alpha":2.0,"p":2.0,"q":1}"#).is_err());
        assert!(ModelParams::from_json(r#"{"d":3,"alpha":2.0,"gamma":2.0,"p":2.0}"#).is_err());
    }

    #[test]
    fn riesz_constant_d1_half() {
        // Gamma(1/4) / (Gamma(1/4) sqrt(pi) 2^(1/2)) = 1/sqrt(2 pi) for d = 1, alpha = 1/2.
        let c = riesz_constant(1, 0.5);
        assert!((c - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-14);
    }
}
