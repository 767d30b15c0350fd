//! Run configuration: a flat `key = value` file plus overrides.

use std::path::PathBuf;

use crate::controller::ControllerConfig;
use crate::dram::{Cycle, Density, Geometry, TimingParams};
use crate::metrics::{AloneBaseline, EnergyParams};
use crate::refresh::{Policy, PolicyKind, SarpBase};
use crate::sim::SimOptions;
use crate::workload::{BankSpread, Burst, GenParams};
use crate::ConfigError;

#[derive(Debug, Clone, PartialEq)]
pub enum TraceSource {
    /// Synthetic traces from `gen`, one per core, seeded from the run seed.
    Generated,
    /// `<prefix>.core<k>.trace` files.
    Files(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub density: Density,
    /// Timing fields set explicitly, applied over the density defaults.
    pub timing_overrides: Vec<(String, u64)>,
    pub policy: Policy,
    pub controller: ControllerConfig,
    pub cores: usize,
    pub max_outstanding_reads: usize,
    pub trace: TraceSource,
    pub gen: GenParams,
    pub seed: u64,
    pub min_cycles: Cycle,
    pub max_cycles: Cycle,
    pub out_dir: PathBuf,
    pub energy: EnergyParams,
    pub alone_baseline: AloneBaseline,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            geometry: Geometry::default(),
            density: Density::Gb8,
            timing_overrides: Vec::new(),
            policy: Policy::new(PolicyKind::Dsarp),
            controller: ControllerConfig::default(),
            cores: 4,
            max_outstanding_reads: 8,
            trace: TraceSource::Generated,
            gen: GenParams::memory_intensive(0, 10_000),
            seed: 0,
            min_cycles: 0,
            max_cycles: SimOptions::default().max_cycles,
            out_dir: std::env::var_os("REFSIM_OUT").map_or_else(|| PathBuf::from("refsim-out"), PathBuf::from),
            energy: EnergyParams::default(),
            alone_baseline: AloneBaseline::Ideal,
        }
    }
}

const TIMING_KEYS: [&str; 21] = [
    "clock_period_ps",
    "t_rcd",
    "t_rp",
    "t_ras",
    "t_rc",
    "cl",
    "cwl",
    "t_bl",
    "t_ccd",
    "t_rrd",
    "t_wtr",
    "t_rtw",
    "t_wr",
    "t_rtp",
    "t_rfc_ab",
    "t_rfc_pb",
    "t_refi",
    "t_refi_pb",
    "t_refw",
    "rows_per_refresh",
    "t_sarp_penalty",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .replace('_', "")
        .parse()
        .map_err(|_| ConfigError::invalid(key, format!("cannot parse {value:?}")))
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = parse_num(key, value)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::invalid(key, "must be finite"))
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::invalid(format!("line {}", i + 1), "expected key = value"))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

impl RunConfig {
    /// Scaled-down geometry that keeps a full retention window short:
    /// 512 rows per bank, so `t_refw` is 64 refresh intervals.
    pub fn scaled() -> Self {
        RunConfig {
            geometry: Geometry::new(1, 1, 8, 8, 64, 128, 64),
            ..RunConfig::default()
        }
    }

    pub fn apply_pairs(&mut self, pairs: &[(String, String)]) -> Result<(), ConfigError> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    fn rebuild_geometry(&mut self, key: &str, value: u32) {
        let g = &self.geometry;
        let mut dims = [
            g.channels,
            g.ranks_per_channel,
            g.banks_per_rank,
            g.subarrays_per_bank,
            g.rows_per_subarray,
            g.columns_per_row,
            g.column_bytes,
        ];
        let idx = match key {
            "channels" => 0,
            "ranks" => 1,
            "banks" => 2,
            "subarrays" => 3,
            "rows_per_subarray" => 4,
            "columns" => 5,
            _ => 6,
        };
        dims[idx] = value;
        self.geometry = Geometry::new(dims[0], dims[1], dims[2], dims[3], dims[4], dims[5], dims[6]);
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim();
        let value = value.trim();
        match key {
            "channels" | "ranks" | "banks" | "subarrays" | "rows_per_subarray" | "columns" | "column_bytes" => {
                let v: u32 = parse_num(key, value)?;
                self.rebuild_geometry(key, v);
            }
            "density" | "density_gb" => {
                let gb: u32 = parse_num(key, value.trim_end_matches("Gb").trim_end_matches("gb"))?;
                self.density = Density::from_gb(gb)
                    .ok_or_else(|| ConfigError::invalid("density", "must be one of 8, 16, 32"))?;
            }
            k if TIMING_KEYS.contains(&k) => {
                let v: u64 = parse_num(key, value)?;
                self.timing_overrides.retain(|(name, _)| name != k);
                self.timing_overrides.push((k.to_string(), v));
            }
            "policy" => {
                self.policy.kind =
                    PolicyKind::parse(value).ok_or_else(|| ConfigError::invalid("policy", format!("unknown policy {value:?}")))?;
            }
            "sarp_base" => {
                self.policy.sarp_base =
                    SarpBase::parse(value).ok_or_else(|| ConfigError::invalid("sarp_base", "expected perbank or allbank"))?;
            }
            "credit_limit" => self.controller.credit_limit = parse_num(key, value)?,
            "idle_pullin_threshold" => {
                self.controller.idle_pullin_threshold = match value {
                    "inf" | "none" | "off" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            "read_queue" => self.controller.read_queue_capacity = parse_num(key, value)?,
            "write_capacity" => self.controller.write_capacity = parse_num(key, value)?,
            "high_watermark" => self.controller.high_watermark = parse_num(key, value)?,
            "low_watermark" => self.controller.low_watermark = parse_num(key, value)?,
            "cores" => self.cores = parse_num(key, value)?,
            "max_outstanding" => self.max_outstanding_reads = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "min_cycles" => self.min_cycles = parse_num(key, value)?,
            "max_cycles" => self.max_cycles = parse_num(key, value)?,
            "trace" => {
                self.trace = if value.is_empty() || value == "gen" {
                    TraceSource::Generated
                } else {
                    TraceSource::Files(PathBuf::from(value))
                }
            }
            "out" => self.out_dir = PathBuf::from(value),
            "mix" => {
                let requests = self.gen.requests;
                self.gen = match value {
                    "intensive" | "memory-intensive" => GenParams::memory_intensive(0, requests),
                    "bursty" => GenParams::bursty_writes(0, requests),
                    "default" => GenParams {
                        requests,
                        ..GenParams::default()
                    },
                    _ => return Err(ConfigError::invalid("mix", "expected intensive, bursty or default")),
                };
            }
            "gen.requests" | "requests" => self.gen.requests = parse_num(key, value)?,
            "gen.read_fraction" | "read_fraction" => self.gen.read_fraction = parse_f64(key, value)?,
            "gen.row_locality" | "row_locality" => self.gen.row_locality = parse_f64(key, value)?,
            "gen.think_min" | "think_min" => self.gen.think_gap.0 = parse_num(key, value)?,
            "gen.think_max" | "think_max" => self.gen.think_gap.1 = parse_num(key, value)?,
            "gen.bank_spread" | "bank_spread" => {
                self.gen.bank_spread = match value.split(':').collect::<Vec<_>>().as_slice() {
                    ["uniform"] => BankSpread::Uniform,
                    ["skewed", bank, weight] => BankSpread::Skewed {
                        bank: parse_num(key, bank)?,
                        weight: parse_f64(key, weight)?,
                    },
                    _ => return Err(ConfigError::invalid(key, "expected uniform or skewed:<bank>:<weight>")),
                }
            }
            "gen.burst" | "burst" => {
                self.gen.burst = match value.split(':').collect::<Vec<_>>().as_slice() {
                    ["none"] | ["off"] => None,
                    [len, gap] => Some(Burst {
                        len: parse_num(key, len)?,
                        gap: parse_num(key, gap)?,
                    }),
                    _ => return Err(ConfigError::invalid(key, "expected none or <len>:<gap>")),
                }
            }
            "energy.act" => self.energy.act = parse_f64(key, value)?,
            "energy.rdwr" => self.energy.rd_wr = parse_f64(key, value)?,
            "energy.pre" => self.energy.pre = parse_f64(key, value)?,
            "energy.refpb" => self.energy.ref_pb = parse_f64(key, value)?,
            "energy.refab" => self.energy.ref_ab = parse_f64(key, value)?,
            "energy.background" => self.energy.background = parse_f64(key, value)?,
            "alone_baseline" => {
                self.alone_baseline = AloneBaseline::parse(value)
                    .ok_or_else(|| ConfigError::invalid("alone_baseline", "expected ideal or same"))?
            }
            _ => return Err(ConfigError::invalid(key, "unknown configuration key")),
        }
        Ok(())
    }

    /// Timing parameters for `density` with the explicit overrides applied.
    pub fn timing_for(&self, density: Density) -> Result<TimingParams, ConfigError> {
        let mut p = TimingParams::ddr3_1600(density, &self.geometry);
        let mut pacing_set = false;
        for (k, v) in &self.timing_overrides {
            let v = *v;
            match k.as_str() {
                "clock_period_ps" => p.clock_period_ps = v,
                "t_rcd" => p.t_rcd = v,
                "t_rp" => p.t_rp = v,
                "t_ras" => p.t_ras = v,
                "t_rc" => p.t_rc = v,
                "cl" => p.cl = v,
                "cwl" => p.cwl = v,
                "t_bl" => p.t_bl = v,
                "t_ccd" => p.t_ccd = v,
                "t_rrd" => p.t_rrd = v,
                "t_wtr" => p.t_wtr = v,
                "t_rtw" => p.t_rtw = v,
                "t_wr" => p.t_wr = v,
                "t_rtp" => p.t_rtp = v,
                "t_rfc_ab" => p.t_rfc_ab = v,
                "t_rfc_pb" => p.t_rfc_pb = v,
                "t_refi" => p.t_refi = v,
                "rows_per_refresh" => {
                    p.rows_per_refresh = u32::try_from(v).map_err(|_| ConfigError::invalid(k.as_str(), "too large"))?
                }
                "t_sarp_penalty" => p.t_sarp_penalty = v,
                _ => pacing_set = true,
            }
        }
        p.derive_refresh_pacing(&self.geometry);
        if pacing_set {
            for (k, v) in &self.timing_overrides {
                match k.as_str() {
                    "t_refi_pb" => p.t_refi_pb = *v,
                    "t_refw" => p.t_refw = *v,
                    _ => {}
                }
            }
        }
        p.validate(&self.geometry)?;
        Ok(p)
    }

    pub fn timing(&self) -> Result<TimingParams, ConfigError> {
        self.timing_for(self.density)
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            max_outstanding_reads: self.max_outstanding_reads,
            min_cycles: self.min_cycles,
            max_cycles: self.max_cycles,
        }
    }

    /// Whole-config validation, run before any simulation starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.geometry.validate()?;
        for d in Density::ALL {
            self.timing_for(d)?;
        }
        self.controller.validate()?;
        if self.cores == 0 {
            return Err(ConfigError::invalid("cores", "must be positive"));
        }
        if self.max_outstanding_reads == 0 {
            return Err(ConfigError::invalid("max_outstanding", "must be positive"));
        }
        if self.max_cycles <= self.min_cycles {
            return Err(ConfigError::invalid("max_cycles", "must exceed min_cycles"));
        }
        if self.geometry.banks_per_channel() > 64 {
            return Err(ConfigError::invalid("banks", "at most 64 banks per channel"));
        }
        if self.policy.kind == PolicyKind::Sarp || self.policy.kind == PolicyKind::Dsarp {
            let p = self.timing()?;
            if self.geometry.rows_per_subarray < p.rows_per_refresh {
                return Err(ConfigError::invalid("rows_per_refresh", "must fit in one subarray"));
            }
        }
        self.gen.validate(&self.geometry)?;
        self.energy.validate()
    }
}
