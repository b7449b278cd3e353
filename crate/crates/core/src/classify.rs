//! Closed-form stability verdicts for classical (`beta = 1`) Hartree and
//! Klein-Gordon-Hartree standing waves, the Klein-Gordon profile, and sweeps.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::energy::Functional;
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::params::{classical_window, near_zero, ModelParams, BOUNDARY_EPS};
use crate::solver::{amplitude_for_dilation, el_residual, to_classical, GroundState};
use crate::spectral::dilate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StabilityModel {
    Hartree,
    KGHartree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Stable,
    Unstable,
    NoSoliton,
    OutOfTheory,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "Stable",
            Verdict::Unstable => "Unstable",
            Verdict::NoSoliton => "NoSoliton",
            Verdict::OutOfTheory => "OutOfTheory",
        }
    }

    /// `NoSoliton` and `OutOfTheory` are outcomes, not failures, but callers
    /// such as the command line distinguish them.
    pub fn is_definite(self) -> bool {
        matches!(self, Verdict::Stable | Verdict::Unstable)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub model: StabilityModel,
    pub verdict: Verdict,
    pub gamma_big: f64,
    pub kg_threshold: Option<f64>,
    pub rule: String,
}

/// `sqrt((p-1) / (2 + alpha - (p-1)(d-1)))`, defined when `Gamma > 0`.
pub fn kg_threshold(params: &ModelParams) -> Option<f64> {
    let g = params.gamma_big();
    if g <= 0.0 || near_zero(g) {
        return None;
    }
    let d = params.d as f64;
    let q = params.p - 1.0;
    Some((q / (2.0 + params.alpha - q * (d - 1.0))).sqrt())
}

fn existence_rule(params: &ModelParams) -> String {
    let d = params.d as f64;
    let lo = 1.0 + params.alpha / d;
    if params.d >= 3 {
        let hi = 1.0 + (2.0 + params.alpha) / (d - 2.0);
        format!("no soliton: solitary waves exist only for {lo} < p < {hi}")
    } else {
        format!("no soliton: solitary waves exist only for p > {lo}")
    }
}

fn precheck(params: &ModelParams, model: StabilityModel) -> Option<StabilityVerdict> {
    let gamma_big = params.gamma_big();
    if !params.is_classical() {
        return Some(StabilityVerdict {
            model,
            verdict: Verdict::OutOfTheory,
            gamma_big,
            kg_threshold: None,
            rule: format!(
                "the closed form covers beta = 1 only (beta = {}); use the numerical stability pipeline",
                params.beta
            ),
        });
    }
    if !classical_window(params) {
        return Some(StabilityVerdict {
            model,
            verdict: Verdict::NoSoliton,
            gamma_big,
            kg_threshold: None,
            rule: existence_rule(params),
        });
    }
    None
}

/// Stable iff `Gamma >= 0`, i.e. `p <= 1 + (2 + alpha)/d`.
pub fn classify_hartree(params: &ModelParams) -> StabilityVerdict {
    if let Some(v) = precheck(params, StabilityModel::Hartree) {
        return v;
    }
    let g = params.gamma_big();
    let crit = 1.0 + (2.0 + params.alpha) / params.d as f64;
    let (verdict, rule) = if near_zero(g) {
        (
            Verdict::Stable,
            format!("Gamma = 0 (p = {crit}): stable, with an extra pair in the generalized kernel"),
        )
    } else if g > 0.0 {
        (Verdict::Stable, format!("Gamma > 0: stable for p < {crit}"))
    } else {
        (Verdict::Unstable, format!("Gamma < 0: unstable for p > {crit}"))
    };
    StabilityVerdict {
        model: StabilityModel::Hartree,
        verdict,
        gamma_big: g,
        kg_threshold: None,
        rule,
    }
}

/// Stable iff `Gamma > 0` and `threshold < |omega| < 1`.
pub fn classify_kg(params: &ModelParams) -> Result<StabilityVerdict> {
    let omega = params
        .kg_omega
        .ok_or_else(|| Error::param("kg_omega", "the Klein-Gordon-Hartree model needs omega"))?;
    if !(omega.abs() < 1.0) {
        return Err(Error::param("kg_omega", format!("|{omega}| must be below 1")));
    }
    if let Some(v) = precheck(params, StabilityModel::KGHartree) {
        return Ok(v);
    }
    let g = params.gamma_big();
    let threshold = kg_threshold(params);
    let w = omega.abs();
    let (verdict, rule) = match threshold {
        None if near_zero(g) => (
            Verdict::Unstable,
            "Gamma = 0: unstable for every |omega| < 1".to_string(),
        ),
        None => (
            Verdict::Unstable,
            "Gamma < 0: unstable for every |omega| < 1".to_string(),
        ),
        Some(t) if w > t + BOUNDARY_EPS * (1.0 + t) => (
            Verdict::Stable,
            format!("Gamma > 0 and |omega| = {w} above the threshold {t}"),
        ),
        Some(t) => (
            Verdict::Unstable,
            format!("Gamma > 0 but |omega| = {w} does not exceed the threshold {t}"),
        ),
    };
    Ok(StabilityVerdict {
        model: StabilityModel::KGHartree,
        verdict,
        gamma_big: g,
        kg_threshold: threshold,
        rule,
    })
}

/// Profile of the Klein-Gordon-Hartree wave at frequency `kg_omega`:
/// `Psi(x) = (1 - w^2)^{(2+alpha)/(4(p-1))} phi(x sqrt(1 - w^2))` with `phi` the
/// `omega = -1` profile. Returned on the grid of that profile.
pub fn kg_profile(gs: &GroundState, kg_omega: f64) -> Result<Field> {
    if !gs.params.is_classical() {
        return Err(Error::WrongRegime(format!(
            "Klein-Gordon-Hartree needs beta = 1, got {}",
            gs.params.beta
        )));
    }
    if !(kg_omega.abs() < 1.0) {
        return Err(Error::param("kg_omega", format!("|{kg_omega}| must be below 1")));
    }
    let classical;
    let base = if (gs.omega + 1.0).abs() < 1e-12 {
        gs
    } else {
        classical = to_classical(gs)?;
        &classical
    };
    let b = (1.0 - kg_omega * kg_omega).sqrt();
    if b == 1.0 {
        return Ok(base.phi.clone());
    }
    Ok(dilate(&base.phi, b)?.scaled(amplitude_for_dilation(&base.params, b)))
}

/// `||-Delta Psi + (1 - w^2) Psi - I[Psi^p] Psi^{p-1}|| / ||Psi||`.
pub fn kg_residual(params: &ModelParams, psi: &Field, kg_omega: f64) -> Result<f64> {
    let f = Functional::new(params, psi.grid())?;
    el_residual(&f, psi, -(1.0 - kg_omega * kg_omega))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub d: usize,
    pub alpha: f64,
    pub p: f64,
    pub omega: Option<f64>,
    pub gamma_big: f64,
    pub threshold: Option<f64>,
    pub verdict: &'static str,
    pub rule: String,
}

/// `start, start + step, ...` up to `stop` inclusive (to rounding).
pub fn inclusive_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::param("range", format!("bad range {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

/// One row per `(alpha, p[, omega])`, in that nesting order.
pub fn sweep(model: StabilityModel, d: usize, alphas: &[f64], ps: &[f64], omegas: &[f64]) -> Result<Vec<SweepRow>> {
    let ws: Vec<Option<f64>> = match model {
        StabilityModel::Hartree => vec![None],
        StabilityModel::KGHartree if omegas.is_empty() => {
            return Err(Error::param("omega", "a Klein-Gordon-Hartree sweep needs omega values"))
        }
        StabilityModel::KGHartree => omegas.iter().map(|&w| Some(w)).collect(),
    };
    let mut tuples = Vec::with_capacity(alphas.len() * ps.len() * ws.len());
    for &a in alphas {
        for &p in ps {
            for &w in &ws {
                tuples.push((a, p, w));
            }
        }
    }
    tuples
        .into_par_iter()
        .map(|(alpha, p, w)| {
            let mut params = ModelParams::from_alpha(d, 1.0, alpha, p, 1.0)?;
            let v = match w {
                None => classify_hartree(&params),
                Some(w) => {
                    params = params.with_kg_omega(w)?;
                    classify_kg(&params)?
                }
            };
            Ok(SweepRow {
                d,
                alpha,
                p,
                omega: w,
                gamma_big: v.gamma_big,
                threshold: v.kg_threshold,
                verdict: v.verdict.as_str(),
                rule: v.rule,
            })
        })
        .collect()
}

pub fn write_sweep_csv(rows: &[SweepRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hartree(d: usize, alpha: f64, p: f64) -> ModelParams {
        ModelParams::from_alpha(d, 1.0, alpha, p, 1.0).unwrap()
    }

    #[test]
    fn hartree_examples() {
        assert_eq!(classify_hartree(&hartree(3, 2.0, 2.0)).verdict, Verdict::Stable);
        assert_eq!(classify_hartree(&hartree(3, 2.0, 3.0)).verdict, Verdict::Unstable);
        let edge = classify_hartree(&hartree(1, 0.5, 3.5));
        assert_eq!(edge.verdict, Verdict::Stable);
        assert!(edge.rule.contains("Gamma = 0"));
        assert_eq!(classify_hartree(&hartree(3, 2.0, 6.0)).verdict, Verdict::NoSoliton);
        let frac = ModelParams::from_alpha(1, 0.5, 0.5, 2.2, 1.0).unwrap();
        assert_eq!(classify_hartree(&frac).verdict, Verdict::OutOfTheory);
    }

    #[test]
    fn kg_examples() {
        let kg = |w: f64| classify_kg(&hartree(3, 2.0, 2.0).with_kg_omega(w).unwrap()).unwrap();
        let v = kg(0.9);
        assert_eq!(v.verdict, Verdict::Stable);
        assert!((v.kg_threshold.unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(kg(0.5).verdict, Verdict::Unstable);
        assert_eq!(kg(-0.9).verdict, Verdict::Stable);
        assert_eq!(kg(0.5f64.sqrt() - 1e-6).verdict, Verdict::Unstable);
        assert_eq!(kg(0.5f64.sqrt() + 1e-6).verdict, Verdict::Stable);
        let unstable = classify_kg(&hartree(3, 2.0, 3.0).with_kg_omega(0.99).unwrap()).unwrap();
        assert_eq!(unstable.verdict, Verdict::Unstable);
        assert!(unstable.kg_threshold.is_none());
        assert!(classify_kg(&hartree(3, 2.0, 2.0)).is_err());
    }

    #[test]
    fn sweep_flips_after_critical_power() {
        let ps = inclusive_range(1.7, 4.0, 0.1).unwrap();
        assert_eq!(ps.len(), 24);
        let rows = sweep(StabilityModel::Hartree, 3, &[2.0], &ps, &[]).unwrap();
        assert_eq!(rows.len(), ps.len());
        for r in &rows {
            let expect = if r.p < 7.0 / 3.0 { "Stable" } else { "Unstable" };
            assert_eq!(r.verdict, expect, "p = {}", r.p);
        }
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), rows.len() + 1);
        assert!(text.starts_with("d,alpha,p,omega,gamma_big,threshold,verdict,rule"));
    }

    #[test]
    fn kg_profile_solves_the_shifted_equation() {
        let params = hartree(1, 0.5, 2.2);
        let grid = crate::grid::GridSpec::cube(1, 1024, 32.0).unwrap();
        let gs = crate::solver::solve_at_frequency(&params, &grid, -1.0, &Default::default()).unwrap();
        let w = 0.6;
        let psi = kg_profile(&gs, w).unwrap();
        assert!(kg_residual(&params, &psi, w).unwrap() < 1e-4);
        let b: f64 = 0.8;
        let expected = b.powf((2.0 + params.alpha) / (params.p - 1.0) - 1.0) * gs.mass();
        let mass = crate::grid::l2_norm_sq(&psi);
        assert!((mass - expected).abs() < 1e-6 * expected, "{mass} vs {expected}");
    }
}
