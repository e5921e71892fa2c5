//! Built-in test problems.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use ttcd_core::PdeParams64;

use crate::config::{CustomSpec, ExperimentConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    /// `u = e^t sin(πx)` on `[0, 2]` with the matching source.
    Manufactured,
    /// `φ(x) = (√6/3) sech²(x/3)` on `[−30, 30]`, no source.
    Soliton,
    /// Constant plus Fourier modes, no source.
    Custom,
}

/// Mesh values used when a config leaves them out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemDefaults {
    pub a: f64,
    pub length: f64,
    pub nodes: usize,
    pub horizon: f64,
    pub coarse_steps: usize,
    pub beta_tau: usize,
}

impl ProblemKind {
    pub fn defaults(self) -> ProblemDefaults {
        match self {
            Self::Manufactured => ProblemDefaults {
                a: 0.0,
                length: 2.0,
                nodes: 1200,
                horizon: 1.0,
                coarse_steps: 8,
                beta_tau: 2,
            },
            Self::Soliton => ProblemDefaults {
                a: -30.0,
                length: 60.0,
                nodes: 600,
                horizon: 1.0,
                coarse_steps: 256,
                beta_tau: 4,
            },
            Self::Custom => ProblemDefaults {
                a: 0.0,
                length: 2.0 * PI,
                nodes: 128,
                horizon: 1.0,
                coarse_steps: 16,
                beta_tau: 2,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Manufactured => "manufactured",
            Self::Soliton => "soliton",
            Self::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemDef {
    pub kind: ProblemKind,
    pub description: &'static str,
    pub has_exact: bool,
    pub has_source: bool,
}

pub fn builtin_problems() -> Vec<ProblemDef> {
    vec![
        ProblemDef {
            kind: ProblemKind::Manufactured,
            description: "u = e^t sin(pi x) on [0, 2] with its source term",
            has_exact: true,
            has_source: true,
        },
        ProblemDef {
            kind: ProblemKind::Soliton,
            description: "phi = (sqrt(6)/3) sech^2(x/3) on [-30, 30], no exact solution",
            has_exact: false,
            has_source: false,
        },
        ProblemDef {
            kind: ProblemKind::Custom,
            description: "constant plus Fourier modes, no source",
            has_exact: false,
            has_source: false,
        },
    ]
}

pub fn manufactured_exact(x: f64, t: f64) -> f64 {
    t.exp() * (PI * x).sin()
}

pub fn manufactured_source(mu: f64, lambda: f64, x: f64, t: f64) -> f64 {
    (1.0 + (mu + lambda) * PI * PI) * t.exp() * (PI * x).sin()
        + PI / 2.0 * (2.0 * t).exp() * (2.0 * PI * x).sin()
        + PI * t.exp() * (PI * x).cos()
}

pub fn soliton_profile(x: f64) -> f64 {
    let s = 1.0 / (x / 3.0).cosh();
    6f64.sqrt() / 3.0 * s * s
}

/// `Σ amplitude·sin(2π·k·(x − a)/L + phase)` plus the constant.
pub fn custom_profile(
    spec: &CustomSpec,
    a: f64,
    length: f64,
) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
    let spec = spec.clone();
    move |x| {
        spec.constant
            + spec
                .modes
                .iter()
                .map(|m| {
                    m.amplitude
                        * (2.0 * PI * m.wavenumber as f64 * (x - a) / length + m.phase).sin()
                })
                .sum::<f64>()
    }
}

/// Equation data for a validated config.
pub fn build_params(cfg: &ExperimentConfig) -> Result<PdeParams64> {
    let (mu, lambda) = (cfg.mu, cfg.lambda);
    let params = match cfg.problem {
        ProblemKind::Manufactured => PdeParams64::new(mu, lambda, |x| (PI * x).sin()).map(|p| {
            p.with_source(move |x, t| manufactured_source(mu, lambda, x, t))
                .with_exact(manufactured_exact)
        }),
        ProblemKind::Soliton => PdeParams64::new(mu, lambda, soliton_profile),
        ProblemKind::Custom => {
            let spec = cfg.custom.clone().unwrap_or_default();
            PdeParams64::new(mu, lambda, custom_profile(&spec, cfg.a, cfg.length))
        }
    }
    .map_err(|e| CliError::solver("problem setup", e))?;
    Ok(params.with_sampling(cfg.source_sampling.into()))
}
