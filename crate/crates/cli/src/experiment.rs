//! Experiment drivers behind the CLI subcommands.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use ttcd_core::diagnostics::{
    energy_fine, max_error_vs_exact, perturbation_response, self_error_space, self_error_time,
};
use ttcd_core::twogrid::run_ttcd_with;
use ttcd_core::{IterationPolicy, PdeParams64, SpaceGrid, Stepper, TimeGridPair, Trajectory64};

use crate::config::{Axis, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::output::{
    ensure_dir, fmt_energy, fmt_error, fmt_rate, fmt_seconds, fmt_step, write_text, Table,
};
use crate::problems::build_params;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Where CSV and JSON files go; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    /// Run every job on the calling thread, one after another.
    pub serial: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Ttcd,
    Ncd,
}

impl Scheme {
    pub fn tag(self) -> &'static str {
        match self {
            Self::Ttcd => "ttcd",
            Self::Ncd => "ncd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSeconds {
    pub step1: f64,
    pub step2: f64,
    pub step3: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub scheme: Scheme,
    pub nodes: usize,
    pub h: f64,
    pub coarse_steps: usize,
    pub fine_steps: usize,
    pub tau_c: f64,
    pub tau_f: f64,
    /// `Error_∞` against the exact solution, or the self-convergence error.
    pub error: Option<f64>,
    pub rate: Option<f64>,
    pub cpu_seconds: f64,
    pub phases: Option<PhaseSeconds>,
    pub max_iterations: usize,
    pub mean_iterations: f64,
    pub energy_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTrace {
    pub scheme: Scheme,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    pub max_abs_drift: f64,
    pub max_rel_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub scheme: Scheme,
    pub zeta_amp: f64,
    pub source_amp: f64,
    pub response: f64,
    pub response_half: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMetric {
    Exact,
    SelfTime,
    SelfSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub config: ExperimentConfig,
    pub error_metric: Option<ErrorMetric>,
    pub records: Vec<RunRecord>,
    pub energy: Vec<EnergyTrace>,
    pub perturbation: Option<PerturbationReport>,
    pub max_iterations: usize,
    #[serde(skip)]
    pub table: Table,
    #[serde(skip)]
    pub pareto: Table,
    #[serde(skip)]
    pub energy_table: Option<Table>,
}

impl RunReport {
    fn new(command: &'static str, config: &ExperimentConfig) -> Self {
        Self {
            command,
            config: config.clone(),
            error_metric: None,
            records: Vec::new(),
            energy: Vec::new(),
            perturbation: None,
            max_iterations: 0,
            table: Table::default(),
            pareto: Table::default(),
            energy_table: None,
        }
    }

    pub fn records_for(&self, scheme: Scheme) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(move |r| r.scheme == scheme)
    }

    /// Writes `table.csv`, `pareto.csv`, `energy.csv` (when present) and `report.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        ensure_dir(dir)?;
        self.table.write(&dir.join("table.csv"))?;
        if !self.pareto.header.is_empty() {
            self.pareto.write(&dir.join("pareto.csv"))?;
        }
        if let Some(t) = &self.energy_table {
            t.write(&dir.join("energy.csv"))?;
        }
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::Pool(e.to_string()))?;
        write_text(&dir.join("report.json"), &json)
    }

    fn finish(&mut self) {
        self.max_iterations = self
            .records
            .iter()
            .map(|r| r.max_iterations)
            .max()
            .unwrap_or(0);
    }
}

/// One solver run and what it produced.
pub struct Outcome {
    pub fine: Trajectory64,
    pub record: RunRecord,
}

/// Runs one scheme on an `M`-node grid with `N_c` coarse steps; NCD runs on
/// the fine step `τ_c/β`.
pub fn execute(
    cfg: &ExperimentConfig,
    params: &PdeParams64,
    scheme: Scheme,
    nodes: usize,
    coarse_steps: usize,
) -> Result<Outcome> {
    let context = format!(
        "{} run with M = {nodes}, N_c = {coarse_steps}, beta_tau = {}",
        scheme.tag(),
        cfg.beta_tau
    );
    let wrap = |e| CliError::solver(context.clone(), e);
    let grid = SpaceGrid::new(cfg.a, cfg.length, nodes).map_err(wrap)?;
    let time = TimeGridPair::new(cfg.horizon, coarse_steps, cfg.beta_tau).map_err(wrap)?;
    let mut policy = IterationPolicy::new(cfg.tol, cfg.max_iter).map_err(wrap)?;
    policy.divergence_guard = cfg.divergence_guard;
    let stepper = Stepper::new(grid, params.clone())
        .map_err(wrap)?
        .with_solver(cfg.linear_solver.into());

    let (fine, iterations, cpu, phases) = match scheme {
        Scheme::Ttcd => {
            let run = run_ttcd_with(&stepper, &time, &policy).map_err(wrap)?;
            let t = run.timings;
            let phases = PhaseSeconds {
                step1: t.step1.as_secs_f64(),
                step2: t.step2.as_secs_f64(),
                step3: t.step3.as_secs_f64(),
                total: t.total.as_secs_f64(),
            };
            (run.fine, run.coarse.iterations, phases.total, Some(phases))
        }
        Scheme::Ncd => {
            let traj = stepper
                .solve_ncd(time.fine_steps(), time.tau_f(), &policy)
                .map_err(wrap)?;
            let iterations = traj.iterations.clone();
            let cpu = traj.elapsed.as_secs_f64();
            (traj, iterations, cpu, None)
        }
    };
    let error = params
        .exact()
        .map(|u| max_error_vs_exact(&fine, |x, t| u(x, t)));
    let energy = energy_fine(&fine, cfg.mu, cfg.lambda, time.tau_f());
    let record = RunRecord {
        scheme,
        nodes,
        h: grid.h(),
        coarse_steps,
        fine_steps: time.fine_steps(),
        tau_c: time.tau_c(),
        tau_f: time.tau_f(),
        error,
        rate: None,
        cpu_seconds: cpu,
        phases,
        max_iterations: iterations.iter().copied().max().unwrap_or(0),
        mean_iterations: if iterations.is_empty() {
            0.0
        } else {
            iterations.iter().sum::<usize>() as f64 / iterations.len() as f64
        },
        energy_drift: Some(energy.max_abs_drift()),
    };
    Ok(Outcome { fine, record })
}

fn schemes(cfg: &ExperimentConfig) -> Vec<Scheme> {
    let mut out = Vec::new();
    if cfg.scheme.runs_ttcd() {
        out.push(Scheme::Ttcd);
    }
    if cfg.scheme.runs_ncd() {
        out.push(Scheme::Ncd);
    }
    out
}

/// Maps `f` over `jobs`, concurrently unless `serial`; results keep job order.
fn fan_out<J: Sync, R: Send>(
    jobs: &[J],
    threads: usize,
    serial: bool,
    f: impl Fn(&J) -> R + Sync + Send,
) -> Result<Vec<R>> {
    if serial || threads <= 1 || jobs.len() <= 1 {
        return Ok(jobs.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.min(jobs.len()))
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    Ok(pool.install(|| jobs.par_iter().map(f).collect()))
}

fn run_table() -> Table {
    Table::new(&[
        "scheme",
        "M",
        "h",
        "N_c",
        "beta_tau",
        "tau_c",
        "tau_f",
        "error",
        "cpu_seconds",
        "step1_seconds",
        "step2_seconds",
        "step3_seconds",
        "max_iterations",
        "energy_drift",
    ])
}

fn run_row(r: &RunRecord, beta: usize) -> Vec<String> {
    let phase = |f: fn(&PhaseSeconds) -> f64| {
        r.phases
            .as_ref()
            .map_or(String::new(), |p| fmt_seconds(f(p)))
    };
    vec![
        r.scheme.tag().to_string(),
        r.nodes.to_string(),
        fmt_step(r.h),
        r.coarse_steps.to_string(),
        beta.to_string(),
        fmt_step(r.tau_c),
        fmt_step(r.tau_f),
        r.error.map_or(String::new(), fmt_error),
        fmt_seconds(r.cpu_seconds),
        phase(|p| p.step1),
        phase(|p| p.step2),
        phase(|p| p.step3),
        r.max_iterations.to_string(),
        r.energy_drift.map_or(String::new(), fmt_error),
    ]
}

fn pareto_table(records: &[RunRecord]) -> Table {
    let mut t = Table::new(&["scheme", "tau_f", "h", "cpu_seconds", "error"]);
    for r in records {
        if let Some(e) = r.error {
            t.push(vec![
                r.scheme.tag().to_string(),
                fmt_step(r.tau_f),
                fmt_step(r.h),
                fmt_seconds(r.cpu_seconds),
                fmt_error(e),
            ]);
        }
    }
    t
}

fn energy_table(traces: &[EnergyTrace]) -> Table {
    let mut header = vec!["level", "t"];
    header.extend(traces.iter().map(|tr| match tr.scheme {
        Scheme::Ttcd => "energy_ttcd",
        Scheme::Ncd => "energy_ncd",
    }));
    let mut t = Table::new(&header);
    if let Some(first) = traces.first() {
        for k in 0..first.values.len() {
            let mut row = vec![k.to_string(), format!("{:.9}", first.t[k])];
            row.extend(traces.iter().map(|tr| fmt_energy(tr.values[k])));
            t.push(row);
        }
    }
    t
}

fn trace(scheme: Scheme, fine: &Trajectory64, cfg: &ExperimentConfig) -> EnergyTrace {
    let e = energy_fine(fine, cfg.mu, cfg.lambda, fine.tau);
    EnergyTrace {
        scheme,
        t: fine.levels.iter().map(|l| l.t).collect(),
        max_abs_drift: e.max_abs_drift(),
        max_rel_drift: e.max_rel_drift(),
        values: e.values,
    }
}

fn flush(report: &RunReport, opts: &RunOptions) -> Result<()> {
    match &opts.out_dir {
        Some(dir) => report.write(dir),
        None => Ok(()),
    }
}

/// `run`: each selected scheme once on the configured mesh.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let params = build_params(cfg)?;
    let jobs = schemes(cfg);
    let results = fan_out(&jobs, cfg.threads, opts.serial, |&s| {
        execute(cfg, &params, s, cfg.nodes, cfg.coarse_steps)
    })?;
    let mut report = RunReport::new("run", cfg);
    report.error_metric = params.exact().map(|_| ErrorMetric::Exact);
    report.table = run_table();
    let mut failure = None;
    for (s, res) in jobs.iter().zip(results) {
        match res {
            Ok(out) => {
                report.table.push(run_row(&out.record, cfg.beta_tau));
                report.energy.push(trace(*s, &out.fine, cfg));
                report.records.push(out.record);
            }
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    }
    report.pareto = pareto_table(&report.records);
    if !report.energy.is_empty() && failure.is_none() {
        report.energy_table = Some(energy_table(&report.energy));
    }
    report.finish();
    flush(&report, opts)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

/// `invariant`: like `run`, with the energy series as the main product.
pub fn invariant(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let mut report = run(
        cfg,
        &RunOptions {
            out_dir: None,
            ..opts.clone()
        },
    )?;
    report.command = "invariant";
    flush(&report, opts)?;
    Ok(report)
}

/// `converge`: the configured ladder along `axis`, with rates.
pub fn converge(cfg: &ExperimentConfig, axis: Axis, opts: &RunOptions) -> Result<RunReport> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::invalid("sweep", "converge needs a [sweep] section"))?;
    if sweep.axis != axis {
        return Err(CliError::invalid(
            "sweep.axis",
            format!(
                "config sweeps {:?} but {:?} was requested",
                sweep.axis, axis
            ),
        ));
    }
    let params = build_params(cfg)?;
    let exact = params.exact().is_some();
    let mut counts = sweep.counts.clone();
    if !exact {
        counts.push(2 * counts.last().copied().unwrap_or(1));
    }
    let rungs = sweep.counts.len();
    let schemes = schemes(cfg);
    let jobs: Vec<(Scheme, usize)> = schemes
        .iter()
        .flat_map(|&s| counts.iter().map(move |&c| (s, c)))
        .collect();
    let results = fan_out(&jobs, cfg.threads, opts.serial, |&(s, c)| match axis {
        Axis::Time => execute(cfg, &params, s, cfg.nodes, c),
        Axis::Space => execute(cfg, &params, s, c, cfg.coarse_steps),
    })?;

    let mut report = RunReport::new("converge", cfg);
    report.error_metric = Some(match (exact, axis) {
        (true, _) => ErrorMetric::Exact,
        (false, Axis::Time) => ErrorMetric::SelfTime,
        (false, Axis::Space) => ErrorMetric::SelfSpace,
    });

    // Per scheme, the records for rungs whose error could be evaluated.
    let mut per_scheme: Vec<Vec<RunRecord>> = Vec::new();
    let mut failure = None;
    let mut results = results.into_iter();
    for _ in &schemes {
        let outcomes: Vec<Result<Outcome>> = results.by_ref().take(counts.len()).collect();
        let mut records = Vec::new();
        for i in 0..rungs {
            let current = match &outcomes[i] {
                Ok(o) => o,
                Err(_) => break,
            };
            let mut rec = current.record.clone();
            if !exact {
                let Ok(next) = &outcomes[i + 1] else { break };
                let e = match axis {
                    Axis::Time => self_error_time(&current.fine, &next.fine),
                    Axis::Space => self_error_space(&current.fine, &next.fine),
                }
                .map_err(|e| CliError::solver("self-convergence error", e))?;
                rec.error = Some(e);
            }
            records.push(rec);
        }
        for o in outcomes {
            if let Err(e) = o {
                failure.get_or_insert(e);
            }
        }
        for i in 1..records.len() {
            if let (Some(a), Some(b)) = (records[i - 1].error, records[i].error) {
                if a > 0.0 && b > 0.0 {
                    records[i].rate = Some((a / b).log2());
                }
            }
        }
        per_scheme.push(records);
    }

    let mut header = vec!["tau_c", "tau_f", "h"];
    for s in &schemes {
        header.extend(match s {
            Scheme::Ttcd => ["error_ttcd", "rate_ttcd", "cpu_ttcd"],
            Scheme::Ncd => ["error_ncd", "rate_ncd", "cpu_ncd"],
        });
    }
    let mut table = Table::new(&header);
    // A rung appears once any scheme completed it; a scheme that stopped
    // earlier leaves its cells blank.
    let reached = per_scheme.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..reached {
        let Some(first) = per_scheme.iter().find_map(|recs| recs.get(i)) else {
            break;
        };
        let mut row = vec![
            fmt_step(first.tau_c),
            fmt_step(first.tau_f),
            fmt_step(first.h),
        ];
        for recs in &per_scheme {
            match recs.get(i) {
                Some(r) => {
                    row.push(r.error.map_or(String::new(), fmt_error));
                    row.push(r.rate.map_or("-".to_string(), fmt_rate));
                    row.push(fmt_seconds(r.cpu_seconds));
                }
                None => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        table.push(row);
    }
    report.table = table;
    report.records = per_scheme.into_iter().flatten().collect();
    report.pareto = pareto_table(&report.records);
    report.finish();
    flush(&report, opts)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

/// `perturb`: base run against runs with `ζ = A·sin(2πk(x − a)/L)` for `A`
/// and `A/2` (and the source perturbation scaled alike).
pub fn perturb(cfg: &ExperimentConfig, zeta_amp: f64, opts: &RunOptions) -> Result<RunReport> {
    if !zeta_amp.is_finite() {
        return Err(CliError::invalid("zeta-amp", "must be finite"));
    }
    let base = build_params(cfg)?;
    let scheme = if cfg.scheme.runs_ttcd() {
        Scheme::Ttcd
    } else {
        Scheme::Ncd
    };
    let p = cfg.perturbation;
    let (a, l, k) = (cfg.a, cfg.length, p.mode as f64);
    let source_scale = if cfg.perturbation.zeta_amp != 0.0 {
        p.source_amp / cfg.perturbation.zeta_amp
    } else {
        0.0
    };
    let perturbed = |amp: f64| {
        let shape = move |x: f64| (2.0 * PI * k * (x - a) / l).sin();
        let r_amp = amp * source_scale;
        let mut q = base.with_initial_perturbation(move |x| amp * shape(x));
        if r_amp != 0.0 {
            q = q.with_source_perturbation(move |x, _t| r_amp * shape(x));
        }
        q
    };
    let variants = [base.clone(), perturbed(zeta_amp), perturbed(0.5 * zeta_amp)];
    let results = fan_out(&variants, cfg.threads, opts.serial, |params| {
        execute(cfg, params, scheme, cfg.nodes, cfg.coarse_steps)
    })?;
    let mut outs = Vec::with_capacity(3);
    for r in results {
        outs.push(r?);
    }
    let resp = |i: usize| {
        perturbation_response(&outs[0].fine, &outs[i].fine)
            .map_err(|e| CliError::solver("perturbation response", e))
    };
    let (full, half) = (resp(1)?, resp(2)?);
    let ratio = if half > 0.0 { full / half } else { f64::NAN };

    let mut report = RunReport::new("perturb", cfg);
    report.perturbation = Some(PerturbationReport {
        scheme,
        zeta_amp,
        source_amp: zeta_amp * source_scale,
        response: full,
        response_half: half,
        ratio,
    });
    let mut t = Table::new(&["scheme", "zeta_amp", "source_amp", "response", "ratio"]);
    t.push(vec![
        scheme.tag().into(),
        fmt_error(zeta_amp),
        fmt_error(zeta_amp * source_scale),
        fmt_error(full),
        String::new(),
    ]);
    t.push(vec![
        scheme.tag().into(),
        fmt_error(0.5 * zeta_amp),
        fmt_error(0.5 * zeta_amp * source_scale),
        fmt_error(half),
        fmt_rate(ratio),
    ]);
    report.table = t;
    report.records = outs.into_iter().map(|o| o.record).collect();
    report.finish();
    flush(&report, opts)?;
    Ok(report)
}
