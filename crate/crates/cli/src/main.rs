use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ttcd_cli::config::Axis;
use ttcd_cli::error::CliError;
use ttcd_cli::experiment::{self, RunOptions, RunReport};
use ttcd_cli::output::{fmt_error, fmt_rate};
use ttcd_cli::parse_config;

#[derive(Parser)]
#[command(
    name = "ttcd",
    version,
    about = "Two-grid compact difference solver for the periodic BBM-Burgers equation"
)]
struct Cli {
    /// Run ladders one job at a time (for timing comparisons).
    #[arg(long, global = true)]
    serial: bool,
    /// Output directory; overrides `output` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the selected scheme(s) once on the configured mesh.
    Run {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
    /// Refinement ladder with convergence rates.
    Converge {
        #[arg(long, value_parser = ["time", "space"])]
        axis: String,
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
    /// Discrete energy series.
    Invariant {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
    /// Response to an initial-data perturbation of amplitude A and A/2.
    Perturb {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        #[arg(long = "zeta-amp", value_name = "REAL", allow_negative_numbers = true)]
        zeta_amp: f64,
    },
}

fn load(path: &Path) -> Result<ttcd_cli::ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

fn summarize(report: &RunReport, out: &Path) {
    for r in &report.records {
        let err = r.error.map_or("-".to_string(), fmt_error);
        let rate = r.rate.map_or("-".to_string(), fmt_rate);
        println!(
            "{:<4} M={:<6} N_c={:<6} tau_f={:.6e} error={err} rate={rate} cpu={:.2}s iters<={}",
            r.scheme.tag(),
            r.nodes,
            r.coarse_steps,
            r.tau_f,
            r.cpu_seconds,
            r.max_iterations
        );
    }
    for e in &report.energy {
        println!(
            "{:<4} energy E0={:.12} max|E-E0|={:.3e}",
            e.scheme.tag(),
            e.values.first().copied().unwrap_or(0.0),
            e.max_abs_drift
        );
    }
    if let Some(p) = &report.perturbation {
        println!(
            "perturbation {}: response({:e})={:.6e} response({:e})={:.6e} ratio={:.4}",
            p.scheme.tag(),
            p.zeta_amp,
            p.response,
            0.5 * p.zeta_amp,
            p.response_half,
            p.ratio
        );
    }
    println!("wrote {}", out.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let path = match &cli.command {
            Command::Run { config }
            | Command::Converge { config, .. }
            | Command::Invariant { config }
            | Command::Perturb { config, .. } => config,
        };
        let mut cfg = load(path)?;
        if let Some(out) = &cli.out {
            cfg.output = out.clone();
        }
        if cli.serial {
            cfg.threads = 1;
        }
        let opts = RunOptions {
            out_dir: Some(cfg.output.clone()),
            serial: cli.serial,
        };
        let report = match &cli.command {
            Command::Run { .. } => experiment::run(&cfg, &opts)?,
            Command::Converge { axis, .. } => {
                let axis: Axis = axis.parse().map_err(|m| CliError::invalid("axis", m))?;
                experiment::converge(&cfg, axis, &opts)?
            }
            Command::Invariant { .. } => experiment::invariant(&cfg, &opts)?,
            Command::Perturb { zeta_amp, .. } => experiment::perturb(&cfg, *zeta_amp, &opts)?,
        };
        summarize(&report, &cfg.output);
        Ok::<_, CliError>(())
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
