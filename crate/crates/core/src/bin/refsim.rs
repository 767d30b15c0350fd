use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use refsim::config::{parse_config_text, RunConfig};
use refsim::dram::Density;
use refsim::experiment::{audit_file, run, sweep_with, write_traces, Execution, ExperimentError};
use refsim::refresh::PolicyKind;
use refsim::ConfigError;

#[derive(Parser)]
#[command(name = "refsim", version, about = "DRAM refresh scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set t_refi=3120`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Start from the scaled-down geometry (512 rows per bank).
    #[arg(long)]
    scaled: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one policy and write logs and stats.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        density: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        cores: Option<usize>,
    },
    /// Every policy x density x seed; writes sweep.csv and sweep.svg.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated policies (default: all).
        #[arg(long, value_delimiter = ',')]
        policy: Vec<String>,
        /// Comma-separated densities in Gb (default: 8,16,32).
        #[arg(long, value_delimiter = ',')]
        density: Vec<u32>,
        /// Comma-separated seeds (default: 1).
        #[arg(long, value_delimiter = ',')]
        seed: Vec<u64>,
        #[arg(long)]
        cores: Option<usize>,
        #[arg(long)]
        sequential: bool,
    },
    /// Write synthetic traces, one file per core.
    GenTrace {
        #[command(flatten)]
        common: Common,
        /// Output path prefix; files are `<prefix>.core<k>.trace`.
        #[arg(long)]
        prefix: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        cores: Option<usize>,
        /// Generator preset: intensive, bursty or default.
        #[arg(long)]
        gen: Option<String>,
    },
    /// Check a command log for timing and refresh-coverage violations.
    Audit {
        #[command(flatten)]
        common: Common,
        log: PathBuf,
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        density: Option<u32>,
        /// First cycle not simulated; defaults to one past the last record.
        #[arg(long)]
        end_cycle: Option<u64>,
    },
}

fn load(common: &Common, extra: &[(&str, Option<String>)]) -> Result<RunConfig, ExperimentError> {
    let mut cfg = if common.scaled {
        RunConfig::scaled()
    } else {
        RunConfig::default()
    };
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.clone(),
            source,
        })?;
        cfg.apply_pairs(&parse_config_text(&text)?)?;
    }
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ConfigError::invalid(kv.as_str(), "expected KEY=VALUE"))?;
        cfg.set(k, v)?;
    }
    for (k, v) in extra {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Run {
            common,
            policy,
            density,
            seed,
            cores,
        } => {
            let cfg = load(
                &common,
                &[
                    ("policy", policy),
                    ("density", density.map(|d| d.to_string())),
                    ("seed", seed.map(|s| s.to_string())),
                    ("cores", cores.map(|c| c.to_string())),
                ],
            )?;
            let cell = run(&cfg)?;
            print!("{}", refsim::metrics::csv(std::slice::from_ref(&cell.row)));
            eprintln!("wrote {}", cfg.out_dir.display());
        }
        Command::Sweep {
            common,
            policy,
            density,
            seed,
            cores,
            sequential,
        } => {
            let cfg = load(&common, &[("cores", cores.map(|c| c.to_string()))])?;
            let policies = if policy.is_empty() {
                PolicyKind::ALL.to_vec()
            } else {
                policy
                    .iter()
                    .map(|p| PolicyKind::parse(p).ok_or_else(|| ConfigError::invalid("policy", format!("unknown policy {p:?}"))))
                    .collect::<Result<_, _>>()?
            };
            let densities = if density.is_empty() {
                Density::ALL.to_vec()
            } else {
                density
                    .iter()
                    .map(|&d| Density::from_gb(d).ok_or_else(|| ConfigError::invalid("density", "must be one of 8, 16, 32")))
                    .collect::<Result<_, _>>()?
            };
            let seeds = if seed.is_empty() { vec![cfg.seed] } else { seed };
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            let rows = sweep_with(&cfg, &policies, &densities, &seeds, exec)?;
            print!("{}", refsim::metrics::csv(&rows));
            eprintln!("wrote {}", cfg.out_dir.display());
        }
        Command::GenTrace {
            common,
            prefix,
            seed,
            cores,
            gen,
        } => {
            let cfg = load(
                &common,
                &[
                    ("mix", gen),
                    ("seed", seed.map(|s| s.to_string())),
                    ("cores", cores.map(|c| c.to_string())),
                ],
            )?;
            cfg.validate()?;
            for path in write_traces(&cfg, cfg.seed, &prefix)? {
                println!("{}", path.display());
            }
        }
        Command::Audit {
            common,
            log,
            policy,
            density,
            end_cycle,
        } => {
            let cfg = load(
                &common,
                &[("policy", policy), ("density", density.map(|d| d.to_string()))],
            )?;
            cfg.validate()?;
            let (report, records) = audit_file(&cfg, &log, end_cycle)?;
            println!("{}", report.describe(&records));
            if !report.is_pass() {
                return Err(ExperimentError::Audit(format!("{} has violations", log.display())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
