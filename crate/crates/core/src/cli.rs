//! Command-line front end. Every subcommand prints one canonical JSON report
//! embedding the effective configuration; `sweep` prints CSV.
//!
//! Exit codes: 0 success, 2 for `NoSoliton`/`OutOfTheory` outcomes, 1 on errors.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::classify::{
    classify_hartree, classify_kg, inclusive_range, sweep, write_sweep_csv, StabilityModel, StabilityVerdict, Verdict,
};
use crate::config::{ModelKind, RunConfig};
use crate::error::{Error, Result};
use crate::grid::{write_atomic, write_field, GridSpec};
use crate::linops::{
    analyze, extreme_eigs_with, rayleigh_lplus_phi, EigenMethod, LinearizedPair, Operator, SpectralOptions,
    SpectralReport, KERNEL_TOL, NEGATIVE_TOL,
};
use crate::params::{classify_admissibility, AdmissibilityVerdict, ModelParams, Regime};
use crate::report::{radial_profile_csv, to_canonical_json};
use crate::solver::{
    fit_exponential_tail, fit_tail_exponent, plateau_check, solve_at_frequency, solve_ground_state, verify_identities,
    ExponentialFit, GroundState, IdentityReport, PlateauCheck, TailFit,
};

#[derive(Parser, Debug)]
#[command(
    name = "choquard",
    version,
    about = "Ground states and stability of Choquard/Hartree standing waves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Admissibility regime of the parameters.
    CheckParams(Common),
    /// Closed-form stability verdict (Hartree or Klein-Gordon-Hartree).
    Classify(Common),
    /// Verdict table over ranges of p and alpha, as CSV.
    Sweep(SweepArgs),
    /// Compute a ground state.
    Solve(Common),
    /// Solve and check the identities satisfied by ground states.
    Verify(Common),
    /// Lowest eigenvalues of the linearized operators.
    Spectrum(Common),
    /// Full pipeline: solve, verify, spectra, VK quantity, growing mode, index count.
    Stability(Common),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `hartree` or `kg`.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    #[arg(long)]
    mass: Option<f64>,
    /// Klein-Gordon-Hartree frequency.
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<f64>,
    /// Points per axis, e.g. `4096` or `64,64`.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Half-width L of the box.
    #[arg(long = "box")]
    half_width: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rearrange_every: Option<usize>,
    #[arg(long)]
    init_sigma: Option<f64>,
    /// Solve at this fixed omega < 0 instead of at fixed mass.
    #[arg(long, allow_hyphen_values = true)]
    frequency: Option<f64>,
    #[arg(long)]
    companion_mass: Option<f64>,
    /// `auto`, `dense` or `matrix_free`.
    #[arg(long)]
    eig_method: Option<String>,
    /// JSON (or CSV for sweep) output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// FLD1 dump of the profile.
    #[arg(long)]
    field: Option<PathBuf>,
    /// `(r, phi(r))` CSV of the profile.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// `start:stop:step`, inclusive.
    #[arg(long)]
    p_range: String,
    /// `start:stop:step`; defaults to the single `--alpha`.
    #[arg(long)]
    alpha_range: Option<String>,
    /// Klein-Gordon-Hartree frequencies.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    omegas: Option<Vec<f64>>,
}

fn effective_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &c.model {
        cfg.model.kind = match m.as_str() {
            "hartree" => ModelKind::Hartree,
            "kg" => ModelKind::Kg,
            other => {
                return Err(Error::Config(format!(
                    "--model: unknown model `{other}` (hartree | kg)"
                )))
            }
        };
    }
    if let Some(v) = c.d {
        cfg.model.d = v;
    }
    if let Some(v) = c.beta {
        cfg.model.beta = v;
    }
    if c.alpha.is_some() {
        cfg.model.alpha = c.alpha;
        if c.gamma.is_none() {
            cfg.model.gamma = None;
        }
    }
    if c.gamma.is_some() {
        cfg.model.gamma = c.gamma;
        if c.alpha.is_none() {
            cfg.model.alpha = None;
        }
    }
    if c.p.is_some() {
        cfg.model.p = c.p;
    }
    if let Some(v) = c.mass {
        cfg.model.mass = v;
    }
    if c.omega.is_some() {
        cfg.model.omega = c.omega;
    }
    if let Some(v) = &c.grid {
        cfg.grid.n = v.clone();
    }
    if let Some(v) = c.half_width {
        cfg.grid.half_width = v;
    }
    if let Some(v) = c.tol {
        cfg.solver.tol = v;
    }
    if let Some(v) = c.max_iter {
        cfg.solver.max_iter = v;
    }
    if let Some(v) = c.seed {
        cfg.solver.seed = v;
    }
    if let Some(v) = c.rearrange_every {
        cfg.solver.rearrange_every = v;
    }
    if c.init_sigma.is_some() {
        cfg.solver.init_sigma = c.init_sigma;
    }
    if c.frequency.is_some() {
        cfg.solver.frequency = c.frequency;
    }
    if c.companion_mass.is_some() {
        cfg.solver.companion_mass = c.companion_mass;
    }
    if let Some(m) = &c.eig_method {
        cfg.solver.eig_method = match m.as_str() {
            "auto" => EigenMethod::Auto,
            "dense" => EigenMethod::Dense,
            "matrix_free" | "matrix-free" => EigenMethod::MatrixFree,
            other => return Err(Error::Config(format!("--eig-method: unknown method `{other}`"))),
        };
    }
    if c.out.is_some() {
        cfg.output.out = c.out.clone();
    }
    if c.field.is_some() {
        cfg.output.field = c.field.clone();
    }
    if c.profile.is_some() {
        cfg.output.profile = c.profile.clone();
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'static str,
    config: &'a RunConfig,
    result: T,
    version: &'static str,
}

#[derive(Serialize)]
struct Refusal<'a> {
    command: &'static str,
    config: &'a RunConfig,
    error: String,
    verdict: &'a AdmissibilityVerdict,
    version: &'static str,
}

struct Outcome {
    text: String,
    code: i32,
}

fn envelope<T: Serialize>(command: &'static str, config: &RunConfig, result: T, code: i32) -> Result<Outcome> {
    let text = to_canonical_json(&Envelope {
        command,
        config,
        result,
        version: env!("CARGO_PKG_VERSION"),
    })?;
    Ok(Outcome { text, code })
}

fn verdict_code(v: Verdict) -> i32 {
    if v.is_definite() {
        0
    } else {
        2
    }
}

#[derive(Serialize)]
struct StateEcho<'a> {
    grid: &'a GridSpec,
    state: &'a GroundState,
}

impl<'a> StateEcho<'a> {
    fn new(gs: &'a GroundState) -> Self {
        Self {
            grid: gs.grid(),
            state: gs,
        }
    }
}

/// Fixed mass when admissible; otherwise, if `fallback_classical`, the
/// `omega = -1` profile of the classical existence range.
fn solve_state(cfg: &RunConfig, params: &ModelParams, fallback_classical: bool) -> Result<GroundState> {
    let grid = cfg.grid()?;
    let opts = cfg.solver_options();
    if let Some(w) = cfg.solver.frequency {
        return solve_at_frequency(params, &grid, w, &opts);
    }
    let verdict = classify_admissibility(params);
    if verdict.regime.admits_normalized() {
        solve_ground_state(params, &grid, &opts)
    } else if fallback_classical && verdict.regime.admits_classical() {
        solve_at_frequency(params, &grid, -1.0, &opts)
    } else {
        Err(Error::Inadmissible(verdict))
    }
}

fn write_artifacts(cfg: &RunConfig, gs: &GroundState) -> Result<()> {
    if let Some(path) = &cfg.output.field {
        write_field(&gs.phi, path)?;
    }
    if let Some(path) = &cfg.output.profile {
        write_atomic(path, radial_profile_csv(&gs.phi)?.as_bytes())?;
    }
    Ok(())
}

fn closed_form(cfg: &RunConfig, params: &ModelParams) -> Result<StabilityVerdict> {
    match cfg.model.kind {
        ModelKind::Hartree => Ok(classify_hartree(params)),
        ModelKind::Kg => classify_kg(params),
    }
}

#[derive(Serialize)]
struct ClassifyResult {
    admissibility: AdmissibilityVerdict,
    stability: StabilityVerdict,
}

#[derive(Serialize)]
struct TailReport {
    algebraic: Option<TailFit>,
    exponential: Option<ExponentialFit>,
    plateau: Option<PlateauCheck>,
}

fn tails(gs: &GroundState) -> TailReport {
    TailReport {
        algebraic: fit_tail_exponent(gs).ok(),
        exponential: fit_exponential_tail(gs).ok(),
        plateau: plateau_check(gs).ok(),
    }
}

#[derive(Serialize)]
struct VerifyResult<'a> {
    ground_state: StateEcho<'a>,
    companion: Option<StateEcho<'a>>,
    identities: IdentityReport,
    all_pass: bool,
    tails: TailReport,
}

#[derive(Serialize)]
struct SpectrumSummary {
    omega: f64,
    #[serde(rename = "lowest_Lplus")]
    lowest_lplus: Vec<f64>,
    #[serde(rename = "lowest_Lminus")]
    lowest_lminus: Vec<f64>,
    #[serde(rename = "n_Lplus")]
    n_lplus: usize,
    #[serde(rename = "n_Lminus")]
    n_lminus: usize,
    #[serde(rename = "kernel_dim_estimate_Lplus")]
    kernel_dim_estimate_lplus: usize,
    max_residual: f64,
    #[serde(rename = "rayleigh_Lplus_phi")]
    rayleigh_lplus_phi: f64,
    rayleigh_expected: f64,
    ess_spectrum_edges: crate::linops::EssentialEdges,
}

#[derive(Serialize)]
struct StabilityResult<'a> {
    ground_state: StateEcho<'a>,
    identities: IdentityReport,
    spectral: SpectralReport,
    closed_form: Option<StabilityVerdict>,
    numerical_verdict: Verdict,
    agreement: Option<bool>,
}

fn cmd_check_params(cfg: &RunConfig) -> Result<Outcome> {
    let v = classify_admissibility(&cfg.params()?);
    let code = if matches!(v.regime, Regime::NoSoliton | Regime::OutOfTheory) {
        2
    } else {
        0
    };
    envelope("check-params", cfg, v, code)
}

fn cmd_classify(cfg: &RunConfig) -> Result<Outcome> {
    let params = cfg.params()?;
    let stability = closed_form(cfg, &params)?;
    let code = verdict_code(stability.verdict);
    envelope(
        "classify",
        cfg,
        ClassifyResult {
            admissibility: classify_admissibility(&params),
            stability,
        },
        code,
    )
}

fn cmd_sweep(args: &SweepArgs, cfg: &RunConfig) -> Result<Outcome> {
    let parse = |s: &str| -> Result<Vec<f64>> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("range `{s}`: {e}")))?;
        match parts.as_slice() {
            [a, b, c] => inclusive_range(*a, *b, *c),
            [a] => Ok(vec![*a]),
            _ => Err(Error::Config(format!("range `{s}` is not start:stop:step"))),
        }
    };
    let ps = parse(&args.p_range)?;
    let alphas = match (&args.alpha_range, cfg.model.alpha) {
        (Some(r), _) => parse(r)?,
        (None, Some(a)) => vec![a],
        (None, None) => return Err(Error::Config("sweep needs --alpha or --alpha-range".into())),
    };
    let model = match cfg.model.kind {
        ModelKind::Hartree => StabilityModel::Hartree,
        ModelKind::Kg => StabilityModel::KGHartree,
    };
    let omegas = match (&args.omegas, cfg.model.omega) {
        (Some(w), _) => w.clone(),
        (None, Some(w)) => vec![w],
        (None, None) => Vec::new(),
    };
    let rows = sweep(model, cfg.model.d, &alphas, &ps, &omegas)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    let text = String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))?;
    Ok(Outcome { text, code: 0 })
}

fn cmd_solve(cfg: &RunConfig) -> Result<Outcome> {
    let gs = solve_state(cfg, &cfg.params()?, false)?;
    write_artifacts(cfg, &gs)?;
    envelope("solve", cfg, StateEcho::new(&gs), 0)
}

fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    let params = cfg.params()?;
    let gs = solve_state(cfg, &params, false)?;
    let companion = match cfg.solver.companion_mass {
        Some(m) => Some(solve_state(cfg, &params.clone().with_mass(m)?, false)?),
        None => None,
    };
    let identities = verify_identities(&gs, companion.as_ref())?;
    write_artifacts(cfg, &gs)?;
    let all_pass = identities.all_pass();
    envelope(
        "verify",
        cfg,
        VerifyResult {
            ground_state: StateEcho::new(&gs),
            companion: companion.as_ref().map(StateEcho::new),
            identities,
            all_pass,
            tails: tails(&gs),
        },
        0,
    )
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let params = cfg.params()?;
    let gs = solve_state(cfg, &params, true)?;
    let pair = LinearizedPair::new(&gs)?;
    let k = params.d + 3;
    let method = cfg.solver.eig_method;
    let plus = extreme_eigs_with(&pair, Operator::LPlus, k, method)?;
    let minus = extreme_eigs_with(&pair, Operator::LMinus, k, method)?;
    let w = gs.omega.abs();
    let summary = SpectrumSummary {
        omega: gs.omega,
        lowest_lplus: plus.iter().map(|e| e.value).collect(),
        lowest_lminus: minus.iter().map(|e| e.value).collect(),
        n_lplus: plus.iter().filter(|e| e.value < -NEGATIVE_TOL * w).count(),
        n_lminus: minus.iter().filter(|e| e.value < -NEGATIVE_TOL * w).count(),
        kernel_dim_estimate_lplus: plus.iter().filter(|e| e.value.abs() < KERNEL_TOL * w).count(),
        max_residual: plus.iter().chain(&minus).map(|e| e.residual).fold(0.0, f64::max),
        rayleigh_lplus_phi: rayleigh_lplus_phi(&pair),
        rayleigh_expected: -(2.0 * params.p - 2.0) * gs.breakdown.k,
        ess_spectrum_edges: pair.essential_edges(),
    };
    envelope("spectrum", cfg, summary, 0)
}

fn cmd_stability(cfg: &RunConfig) -> Result<Outcome> {
    let params = cfg.params()?;
    let gs = solve_state(cfg, &params, true)?;
    let identities = verify_identities(&gs, None)?;
    let opts = SpectralOptions {
        how_many: 0,
        method: cfg.solver.eig_method,
        kg_omega: match cfg.model.kind {
            ModelKind::Kg if params.is_classical() => params.kg_omega,
            _ => None,
        },
    };
    let spectral = analyze(&gs, &opts)?;
    let numerical_verdict = match cfg.model.kind {
        ModelKind::Hartree if spectral.growing_mode.is_some() => Verdict::Unstable,
        ModelKind::Hartree => Verdict::Stable,
        ModelKind::Kg => match spectral.d11_kg {
            Some(d) if d < 0.0 => Verdict::Stable,
            Some(_) => Verdict::Unstable,
            None => Verdict::OutOfTheory,
        },
    };
    let closed = if params.is_classical() {
        Some(closed_form(cfg, &params)?)
    } else {
        None
    };
    let agreement = closed.as_ref().map(|c| c.verdict == numerical_verdict);
    write_artifacts(cfg, &gs)?;
    envelope(
        "stability",
        cfg,
        StabilityResult {
            ground_state: StateEcho::new(&gs),
            identities,
            spectral,
            closed_form: closed,
            numerical_verdict,
            agreement,
        },
        0,
    )
}

fn configure_threads() {
    if let Some(n) = std::env::var("CHOQUARD_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // A second call in the same process finds the pool already built.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Runs one command line; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let (name, common) = match &cli.command {
        Command::CheckParams(c) => ("check-params", c),
        Command::Classify(c) => ("classify", c),
        Command::Sweep(s) => ("sweep", &s.common),
        Command::Solve(c) => ("solve", c),
        Command::Verify(c) => ("verify", c),
        Command::Spectrum(c) => ("spectrum", c),
        Command::Stability(c) => ("stability", c),
    };
    let cfg = match effective_config(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let result = match &cli.command {
        Command::CheckParams(_) => cmd_check_params(&cfg),
        Command::Classify(_) => cmd_classify(&cfg),
        Command::Sweep(s) => cmd_sweep(s, &cfg),
        Command::Solve(_) => cmd_solve(&cfg),
        Command::Verify(_) => cmd_verify(&cfg),
        Command::Spectrum(_) => cmd_spectrum(&cfg),
        Command::Stability(_) => cmd_stability(&cfg),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(Error::Inadmissible(verdict)) => {
            let text = to_canonical_json(&Refusal {
                command: name,
                config: &cfg,
                error: format!("no ground state to compute: {}", verdict.summary()),
                verdict: &verdict,
                version: env!("CARGO_PKG_VERSION"),
            });
            match text {
                Ok(text) => Outcome { text, code: 2 },
                Err(e) => {
                    eprintln!("error: {e}");
                    return 1;
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let written = match &cfg.output.out {
        Some(path) => write_atomic(path, outcome.text.as_bytes()),
        None => {
            print!("{}", outcome.text);
            Ok(())
        }
    };
    match written {
        Ok(()) => outcome.code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
