//! Configuration, problem presets and experiment drivers for the `ttcd`
//! command-line tool.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod problems;

pub use config::{parse_config, Axis, ExperimentConfig, SchemeChoice};
pub use error::{CliError, Result};
pub use experiment::{converge, invariant, perturb, run, RunOptions, RunRecord, RunReport, Scheme};
pub use problems::{builtin_problems, ProblemKind};
