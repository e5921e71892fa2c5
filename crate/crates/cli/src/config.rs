//! Experiment configuration.
//!
//! A config is a TOML document: `key = value` lines grouped under `[section]`
//! headers. Unknown keys are rejected. Example:
//!
//! ```toml
//! problem = "manufactured"
//! scheme = "both"
//!
//! [params]
//! mu = 1.0
//! lambda = 0.01
//!
//! [mesh]
//! M = 1200
//! T = 1.0
//! N_c = 8
//! beta_tau = 2
//!
//! [sweep]
//! axis = "time"
//! ladder = ["1/8", "1/16", "1/32", "1/64"]
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use ttcd_core::{LinearSolverKind, SourceSampling};

use crate::error::{CliError, Result};
use crate::problems::ProblemKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    Ncd,
    Ttcd,
    #[default]
    Both,
}

impl SchemeChoice {
    pub fn runs_ttcd(self) -> bool {
        matches!(self, Self::Ttcd | Self::Both)
    }

    pub fn runs_ncd(self) -> bool {
        matches!(self, Self::Ncd | Self::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Time,
    Space,
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "time" => Ok(Self::Time),
            "space" => Ok(Self::Space),
            _ => Err(format!("unknown axis `{s}` (expected `time` or `space`)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LinearSolverChoice {
    #[default]
    Block,
    Dense,
}

impl From<LinearSolverChoice> for LinearSolverKind {
    fn from(c: LinearSolverChoice) -> Self {
        match c {
            LinearSolverChoice::Block => LinearSolverKind::BlockCyclic,
            LinearSolverChoice::Dense => LinearSolverKind::DenseLu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SamplingChoice {
    #[default]
    Average,
    Midpoint,
}

impl From<SamplingChoice> for SourceSampling {
    fn from(c: SamplingChoice) -> Self {
        match c {
            SamplingChoice::Average => SourceSampling::EndpointAverage,
            SamplingChoice::Midpoint => SourceSampling::Midpoint,
        }
    }
}

/// One Fourier component `amplitude·sin(2π·wavenumber·(x − a)/L + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub amplitude: f64,
    pub wavenumber: u32,
    #[serde(default)]
    pub phase: f64,
}

/// Initial data of the `custom` problem: a constant plus Fourier modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CustomSpec {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub modes: Vec<Mode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    /// Amplitude of `ζ(x) = zeta_amp·sin(2π·mode·(x − a)/L)`.
    #[serde(default = "default_zeta")]
    pub zeta_amp: f64,
    #[serde(default = "default_mode")]
    pub mode: u32,
    /// Amplitude of the source perturbation `r(x, t) = source_amp·sin(2π·mode·(x − a)/L)`.
    #[serde(default)]
    pub source_amp: f64,
}

fn default_zeta() -> f64 {
    1e-5
}

fn default_mode() -> u32 {
    1
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            zeta_amp: default_zeta(),
            mode: default_mode(),
            source_amp: 0.0,
        }
    }
}

/// Resolved sweep: integer counts (`N_c` for time, `M` for space) in 2:1 progression.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub axis: Axis,
    pub counts: Vec<usize>,
}

/// Fully validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub custom: Option<CustomSpec>,
    pub a: f64,
    pub length: f64,
    pub horizon: f64,
    pub nodes: usize,
    pub coarse_steps: usize,
    pub beta_tau: usize,
    pub mu: f64,
    pub lambda: f64,
    pub scheme: SchemeChoice,
    pub tol: f64,
    pub max_iter: usize,
    pub divergence_guard: f64,
    pub linear_solver: LinearSolverChoice,
    pub source_sampling: SamplingChoice,
    pub sweep: Option<Sweep>,
    pub perturbation: PerturbationSpec,
    pub output: PathBuf,
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn h(&self) -> f64 {
        self.length / self.nodes as f64
    }

    pub fn tau_c(&self) -> f64 {
        self.horizon / self.coarse_steps as f64
    }

    pub fn tau_f(&self) -> f64 {
        self.tau_c() / self.beta_tau as f64
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: ProblemKind,
    #[serde(default)]
    scheme: SchemeChoice,
    output: Option<PathBuf>,
    threads: Option<usize>,
    #[serde(default)]
    params: RawParams,
    #[serde(default)]
    domain: RawDomain,
    #[serde(default)]
    mesh: RawMesh,
    #[serde(default)]
    policy: RawPolicy,
    sweep: Option<RawSweep>,
    #[serde(default)]
    perturbation: PerturbationSpec,
    custom: Option<CustomSpec>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawParams {
    mu: Option<f64>,
    lambda: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    a: Option<f64>,
    #[serde(rename = "L")]
    length: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    #[serde(rename = "M")]
    nodes: Option<usize>,
    h: Option<Step>,
    #[serde(rename = "T")]
    horizon: Option<f64>,
    #[serde(rename = "N_c")]
    coarse_steps: Option<usize>,
    tau_c: Option<Step>,
    beta_tau: Option<usize>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    tol: Option<f64>,
    max_iter: Option<usize>,
    divergence_guard: Option<f64>,
    #[serde(default)]
    linear_solver: LinearSolverChoice,
    #[serde(default)]
    source_sampling: SamplingChoice,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: Axis,
    ladder: Option<Vec<Step>>,
    counts: Option<Vec<usize>>,
}

/// A step size written as a number or as a fraction string such as `"1/8"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Step {
    Number(f64),
    Text(String),
}

impl Step {
    fn value(&self, field: &str) -> Result<f64> {
        let v = match self {
            Step::Number(v) => *v,
            Step::Text(s) => parse_fraction(s).ok_or_else(|| {
                CliError::invalid(field, format!("`{s}` is not a number or fraction p/q"))
            })?,
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(CliError::invalid(
                field,
                format!("step must be positive, got {v}"),
            ));
        }
        Ok(v)
    }
}

fn parse_fraction(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((p, q)) => {
            let (p, q): (f64, f64) = (p.trim().parse().ok()?, q.trim().parse().ok()?);
            (q != 0.0).then_some(p / q)
        }
        None => s.trim().parse().ok(),
    }
}

/// `extent / step` when it is an integer to within 1e-9 relative.
fn count_for(extent: f64, step: f64, field: &str) -> Result<usize> {
    let n = extent / step;
    let r = n.round();
    if r < 1.0 || (n - r).abs() > 1e-9 * r {
        return Err(CliError::invalid(
            field,
            format!("step {step} does not divide {extent} into a whole number of intervals"),
        ));
    }
    Ok(r as usize)
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::invalid(
            field,
            format!("must be positive, got {v}"),
        ))
    }
}

/// Parses and validates a config document, filling defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let defaults = raw.problem.defaults();

    let a = raw.domain.a.unwrap_or(defaults.a);
    if !a.is_finite() {
        return Err(CliError::invalid("domain.a", "must be finite"));
    }
    let length = positive("domain.L", raw.domain.length.unwrap_or(defaults.length))?;
    let horizon = positive("mesh.T", raw.mesh.horizon.unwrap_or(defaults.horizon))?;

    let nodes = match (raw.mesh.nodes, &raw.mesh.h) {
        (Some(_), Some(_)) => {
            return Err(CliError::invalid("mesh.h", "give either M or h, not both"))
        }
        (Some(m), None) => m,
        (None, Some(h)) => count_for(length, h.value("mesh.h")?, "mesh.h")?,
        (None, None) => defaults.nodes,
    };
    if nodes < 3 {
        return Err(CliError::invalid(
            "mesh.M",
            format!("need at least 3 nodes, got {nodes}"),
        ));
    }
    let coarse_steps = match (raw.mesh.coarse_steps, &raw.mesh.tau_c) {
        (Some(_), Some(_)) => {
            return Err(CliError::invalid(
                "mesh.tau_c",
                "give either N_c or tau_c, not both",
            ))
        }
        (Some(n), None) => n,
        (None, Some(t)) => count_for(horizon, t.value("mesh.tau_c")?, "mesh.tau_c")?,
        (None, None) => defaults.coarse_steps,
    };
    if coarse_steps == 0 {
        return Err(CliError::invalid("mesh.N_c", "must be at least 1"));
    }
    let beta_tau = raw.mesh.beta_tau.unwrap_or(defaults.beta_tau);
    if beta_tau == 0 {
        return Err(CliError::invalid("mesh.beta_tau", "must be at least 1"));
    }

    let mu = positive("params.mu", raw.params.mu.unwrap_or(1.0))?;
    let lambda = positive("params.lambda", raw.params.lambda.unwrap_or(1.0))?;

    let tol = positive("policy.tol", raw.policy.tol.unwrap_or(1e-12))?;
    let max_iter = raw.policy.max_iter.unwrap_or(200);
    if max_iter == 0 {
        return Err(CliError::invalid("policy.max_iter", "must be at least 1"));
    }
    let divergence_guard = positive(
        "policy.divergence_guard",
        raw.policy.divergence_guard.unwrap_or(1e8),
    )?;

    let sweep = raw
        .sweep
        .map(|s| resolve_sweep(s, length, horizon))
        .transpose()?;

    let custom = match (raw.problem, raw.custom) {
        (ProblemKind::Custom, c) => Some(c.unwrap_or_default()),
        (_, Some(_)) => {
            return Err(CliError::invalid(
                "custom",
                "only allowed with problem = \"custom\"",
            ))
        }
        (_, None) => None,
    };

    let p = raw.perturbation;
    if !p.zeta_amp.is_finite() || !p.source_amp.is_finite() {
        return Err(CliError::invalid(
            "perturbation",
            "amplitudes must be finite",
        ));
    }

    let threads = raw.threads.unwrap_or_else(default_threads);
    if threads == 0 {
        return Err(CliError::invalid("threads", "must be at least 1"));
    }

    Ok(ExperimentConfig {
        problem: raw.problem,
        custom,
        a,
        length,
        horizon,
        nodes,
        coarse_steps,
        beta_tau,
        mu,
        lambda,
        scheme: raw.scheme,
        tol,
        max_iter,
        divergence_guard,
        linear_solver: raw.policy.linear_solver,
        source_sampling: raw.policy.source_sampling,
        sweep,
        perturbation: p,
        output: raw.output.unwrap_or_else(|| PathBuf::from("out")),
        threads,
    })
}

fn resolve_sweep(s: RawSweep, length: f64, horizon: f64) -> Result<Sweep> {
    let extent = match s.axis {
        Axis::Time => horizon,
        Axis::Space => length,
    };
    let counts = match (s.ladder, s.counts) {
        (Some(_), Some(_)) => {
            return Err(CliError::invalid(
                "sweep.counts",
                "give either ladder or counts, not both",
            ))
        }
        (Some(ladder), None) => ladder
            .iter()
            .map(|step| count_for(extent, step.value("sweep.ladder")?, "sweep.ladder"))
            .collect::<Result<Vec<_>>>()?,
        (None, Some(c)) => c,
        (None, None) => return Err(CliError::invalid("sweep", "needs `ladder` or `counts`")),
    };
    if counts.len() < 2 {
        return Err(CliError::invalid(
            "sweep.ladder",
            "needs at least two entries for rates",
        ));
    }
    if s.axis == Axis::Space && counts[0] < 3 {
        return Err(CliError::invalid(
            "sweep.ladder",
            "coarsest grid needs at least 3 nodes",
        ));
    }
    if counts[0] == 0 {
        return Err(CliError::invalid("sweep.ladder", "counts must be positive"));
    }
    for w in counts.windows(2) {
        if w[1] != 2 * w[0] {
            return Err(CliError::invalid(
                "sweep.ladder",
                format!(
                    "entries must halve the step each time; {} is followed by {}",
                    w[0], w[1]
                ),
            ));
        }
    }
    Ok(Sweep {
        axis: s.axis,
        counts,
    })
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
