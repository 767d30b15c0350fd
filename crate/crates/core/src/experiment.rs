//! Runs, sweeps and offline audits built on the simulator.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{RunConfig, TraceSource};
use crate::dram::{audit_command_log, AuditOutcome, Cycle, Density, TimingParams};
use crate::metrics::{
    csv, degradation, run_energy, sort_rows, svg, weighted_speedup, AloneBaseline, CoreStats, RunStats, StatsRow,
};
use crate::records::{command_log_csv, commands, completion_log_csv, parse_command_log, LogParseError, LogRecord};
use crate::refresh::{audit_refresh_coverage, CoverageOutcome, CoverageSpec, Policy, PolicyKind};
use crate::sim::{simulate, RunOutput, SimError, SimOptions};
use crate::workload::{core_seed, core_trace_path, generate_trace, parse_trace, GenParams, TraceEntry, TraceError};
use crate::ConfigError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Trace { path: PathBuf, source: TraceError },
    #[error("{path}: {source}")]
    Log { path: PathBuf, source: LogParseError },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("audit failed: {0}")]
    Audit(String),
}

impl ExperimentError {
    /// Process exit status for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Io { .. } | ExperimentError::Trace { .. } | ExperimentError::Log { .. } => 3,
            ExperimentError::Sim(_) | ExperimentError::Audit(_) => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
    }
    fs::write(path, contents).map_err(io_err(path))
}

/// Synthetic generator settings for core `core` under run seed `seed`.
pub fn core_gen_params(gen: &GenParams, seed: u64, core: usize) -> GenParams {
    GenParams {
        seed: core_seed(seed, core),
        ..gen.clone()
    }
}

/// One trace per core, generated or read from disk.
pub fn load_traces(cfg: &RunConfig, seed: u64) -> Result<Vec<Vec<TraceEntry>>, ExperimentError> {
    match &cfg.trace {
        TraceSource::Generated => Ok((0..cfg.cores)
            .map(|k| generate_trace(&core_gen_params(&cfg.gen, seed, k), &cfg.geometry))
            .collect()),
        TraceSource::Files(prefix) => (0..cfg.cores)
            .map(|k| {
                let path = core_trace_path(prefix, k);
                let text = fs::read_to_string(&path).map_err(io_err(&path))?;
                parse_trace(&text).map_err(|source| ExperimentError::Trace { path, source })
            })
            .collect(),
    }
}

/// Simulates one policy at one density over the given traces.
pub fn simulate_cell(
    cfg: &RunConfig,
    kind: PolicyKind,
    density: Density,
    traces: Vec<Vec<TraceEntry>>,
    options: &SimOptions,
) -> Result<(RunOutput, TimingParams), ExperimentError> {
    let params = cfg.timing_for(density)?;
    let policy = Policy { kind, ..cfg.policy };
    let out = simulate(&cfg.geometry, &params, policy, &cfg.controller, traces, options)?;
    Ok((out, params))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub timing: AuditOutcome,
    /// `None` when the policy never refreshes.
    pub coverage: Option<CoverageOutcome>,
}

impl AuditReport {
    pub fn is_pass(&self) -> bool {
        self.timing.is_pass() && self.coverage.as_ref().map_or(true, CoverageOutcome::is_pass)
    }

    /// Human-readable summary, one line per violation (capped).
    pub fn describe(&self, log: &[LogRecord]) -> String {
        let cmds = commands(log);
        let mut lines = Vec::new();
        for v in self.timing.violations().iter().take(20) {
            let c = &cmds[v.index];
            lines.push(format!(
                "timing: {} at cycle {} ({:?} ch{} rk{} bk{}) violates {}",
                v.index, c.cycle, c.kind, c.target.channel, c.target.rank, c.target.bank, v.constraint
            ));
        }
        if let Some(cov) = &self.coverage {
            for v in cov.violations().iter().take(20) {
                lines.push(format!("coverage: {v}"));
            }
        }
        if lines.is_empty() {
            "pass".to_string()
        } else {
            lines.join("\n")
        }
    }
}

/// Runs both offline auditors over a command log.
pub fn audit_output(
    log: &[LogRecord],
    cfg: &RunConfig,
    kind: PolicyKind,
    params: &TimingParams,
    end_cycle: Cycle,
) -> AuditReport {
    let cmds = commands(log);
    let timing = audit_command_log(&cmds, &cfg.geometry, params);
    let coverage = (kind != PolicyKind::Ideal).then(|| {
        audit_refresh_coverage(
            &cmds,
            &cfg.geometry,
            params,
            CoverageSpec {
                credit_limit: cfg.controller.credit_limit,
                end_cycle,
            },
        )
    });
    AuditReport { timing, coverage }
}

/// Runs shared by every policy of one (density, seed) cell.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub ideal: RunStats,
    pub ideal_energy: f64,
    pub ideal_ws: f64,
    /// Alone runs under the no-refresh policy.
    pub alone: Vec<CoreStats>,
}

fn alone_runs(
    cfg: &RunConfig,
    kind: PolicyKind,
    density: Density,
    seed: u64,
    traces: &[Vec<TraceEntry>],
) -> Result<Vec<CoreStats>, ExperimentError> {
    let options = SimOptions {
        min_cycles: 0,
        ..cfg.sim_options()
    };
    let mut alone = Vec::with_capacity(traces.len());
    for (k, t) in traces.iter().enumerate() {
        let (out, _) = simulate_cell(cfg, kind, density, vec![t.clone()], &options)?;
        let mut stats = RunStats::from_run(kind, density.gb(), seed, &out).cores.remove(0);
        stats.core = k;
        alone.push(stats);
    }
    Ok(alone)
}

pub fn baseline(cfg: &RunConfig, density: Density, seed: u64) -> Result<Baseline, ExperimentError> {
    let traces = load_traces(cfg, seed)?;
    let alone = alone_runs(cfg, PolicyKind::Ideal, density, seed, &traces)?;
    let options = SimOptions {
        min_cycles: 0,
        ..cfg.sim_options()
    };
    let (out, params) = simulate_cell(cfg, PolicyKind::Ideal, density, traces, &options)?;
    let ideal = RunStats::from_run(PolicyKind::Ideal, density.gb(), seed, &out);
    let ideal_energy = run_energy(&ideal, &cfg.energy, &params, cfg.geometry.banks_total());
    let ideal_ws = weighted_speedup(&ideal, &alone).map_err(|e| ConfigError::invalid("cores", e.to_string()))?;
    Ok(Baseline {
        ideal,
        ideal_energy,
        ideal_ws,
        alone,
    })
}

/// Everything one policy run produced.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub row: StatsRow,
    pub stats: RunStats,
    pub output: RunOutput,
    pub audit: AuditReport,
}

pub fn evaluate_cell(
    cfg: &RunConfig,
    kind: PolicyKind,
    density: Density,
    seed: u64,
    base: &Baseline,
) -> Result<CellResult, ExperimentError> {
    let traces = load_traces(cfg, seed)?;
    let alone = match cfg.alone_baseline {
        AloneBaseline::Ideal => base.alone.clone(),
        AloneBaseline::SamePolicy => alone_runs(cfg, kind, density, seed, &traces)?,
    };
    let (output, params) = simulate_cell(cfg, kind, density, traces, &cfg.sim_options())?;
    let stats = RunStats::from_run(kind, density.gb(), seed, &output);
    let ws = weighted_speedup(&stats, &alone).map_err(|e| ConfigError::invalid("cores", e.to_string()))?;
    let energy = run_energy(&stats, &cfg.energy, &params, cfg.geometry.banks_total());
    let row = StatsRow {
        policy: kind,
        density_gb: density.gb(),
        seed,
        cores: cfg.cores,
        weighted_speedup: ws,
        degradation_vs_ideal: degradation(ws, base.ideal_ws),
        mean_read_latency_cycles: stats.mean_read_latency(),
        refresh_blocked_cycles: stats.refresh_blocked_cycles(),
        overlap_ratio: stats.overlap_ratio(),
        energy_norm: if base.ideal_energy > 0.0 {
            energy / base.ideal_energy
        } else {
            1.0
        },
    };
    let audit = audit_output(&output.log, cfg, kind, &params, output.end_cycle);
    Ok(CellResult {
        row,
        stats,
        output,
        audit,
    })
}

/// Runs the configured policy once and writes `commands.csv`,
/// `completions.csv` and `stats.csv` under the output directory.
pub fn run(cfg: &RunConfig) -> Result<CellResult, ExperimentError> {
    cfg.validate()?;
    let base = baseline(cfg, cfg.density, cfg.seed)?;
    let cell = evaluate_cell(cfg, cfg.policy.kind, cfg.density, cfg.seed, &base)?;
    let dir = &cfg.out_dir;
    write_file(&dir.join("commands.csv"), command_log_csv(&cell.output.log).as_bytes())?;
    write_file(
        &dir.join("completions.csv"),
        completion_log_csv(&cell.output.completions).as_bytes(),
    )?;
    write_file(&dir.join("stats.csv"), csv(std::slice::from_ref(&cell.row)).as_bytes())?;
    if !cell.audit.is_pass() {
        return Err(ExperimentError::Audit(cell.audit.describe(&cell.output.log)));
    }
    Ok(cell)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential without the `parallel` feature.
    Parallel,
}

#[cfg(feature = "parallel")]
fn map_cells<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match exec {
        Execution::Sequential => items.iter().map(f).collect(),
        Execution::Parallel => items.par_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_cells<T, R, F>(items: &[T], _exec: Execution, f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Every policy x density x seed cell, rows sorted. The first audit
/// failure or simulation error fails the whole sweep.
pub fn sweep_rows(
    cfg: &RunConfig,
    policies: &[PolicyKind],
    densities: &[Density],
    seeds: &[u64],
    exec: Execution,
) -> Result<Vec<StatsRow>, ExperimentError> {
    cfg.validate()?;
    let keys: Vec<(Density, u64)> = densities
        .iter()
        .flat_map(|&d| seeds.iter().map(move |&s| (d, s)))
        .collect();
    let bases: BTreeMap<(Density, u64), Baseline> = keys
        .iter()
        .copied()
        .zip(map_cells(&keys, exec, |&(d, s)| baseline(cfg, d, s)))
        .map(|(k, b)| b.map(|b| (k, b)))
        .collect::<Result<_, _>>()?;

    let cells: Vec<(PolicyKind, Density, u64)> = policies
        .iter()
        .flat_map(|&p| keys.iter().map(move |&(d, s)| (p, d, s)))
        .collect();
    let results = map_cells(&cells, exec, |&(p, d, s)| {
        let cell = evaluate_cell(cfg, p, d, s, &bases[&(d, s)])?;
        if cell.audit.is_pass() {
            Ok(cell.row)
        } else {
            Err(ExperimentError::Audit(format!(
                "{} {}Gb seed {}:\n{}",
                p.name(),
                d.gb(),
                s,
                cell.audit.describe(&cell.output.log)
            )))
        }
    });
    let mut rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    sort_rows(&mut rows);
    Ok(rows)
}

/// [`sweep_rows`] plus `sweep.csv` and `sweep.svg` under the output directory.
pub fn sweep_with(
    cfg: &RunConfig,
    policies: &[PolicyKind],
    densities: &[Density],
    seeds: &[u64],
    exec: Execution,
) -> Result<Vec<StatsRow>, ExperimentError> {
    let rows = sweep_rows(cfg, policies, densities, seeds, exec)?;
    write_file(&cfg.out_dir.join("sweep.csv"), csv(&rows).as_bytes())?;
    write_file(&cfg.out_dir.join("sweep.svg"), svg(&rows).as_bytes())?;
    Ok(rows)
}

/// Writes one trace file per core under `prefix`; returns the paths.
pub fn write_traces(cfg: &RunConfig, seed: u64, prefix: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut paths = Vec::with_capacity(cfg.cores);
    for k in 0..cfg.cores {
        let trace = generate_trace(&core_gen_params(&cfg.gen, seed, k), &cfg.geometry);
        let path = core_trace_path(prefix, k);
        write_file(&path, crate::workload::format_trace(&trace).as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}

/// Audits a command log written by an earlier run. Without an explicit end
/// cycle the run is taken to end one cycle after the last logged record.
pub fn audit_file(
    cfg: &RunConfig,
    path: &Path,
    end_cycle: Option<Cycle>,
) -> Result<(AuditReport, Vec<LogRecord>), ExperimentError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let log = parse_command_log(&text).map_err(|source| ExperimentError::Log {
        path: path.to_path_buf(),
        source,
    })?;
    let params = cfg.timing()?;
    let end = end_cycle.unwrap_or_else(|| log.iter().map(|r| r.cycle() + 1).max().unwrap_or(0));
    let report = audit_output(&log, cfg, cfg.policy.kind, &params, end);
    Ok((report, log))
}
