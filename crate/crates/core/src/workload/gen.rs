//! Synthetic trace generation.

use crate::dram::{DramAddress, Geometry};
use crate::ConfigError;

use super::rng::XorShift64Star;
use super::trace::{AccessKind, TraceEntry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BankSpread {
    Uniform,
    /// `bank` receives an extra `weight` share of accesses; the rest are
    /// uniform over all banks.
    Skewed { bank: u32, weight: f64 },
}

/// Accesses arrive in groups of `len` separated by `gap` idle cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Burst {
    pub len: u32,
    pub gap: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub seed: u64,
    pub requests: usize,
    pub read_fraction: f64,
    /// Probability that an access reuses the previous row of its bank.
    pub row_locality: f64,
    pub bank_spread: BankSpread,
    /// Inclusive uniform range of think gaps.
    pub think_gap: (u64, u64),
    pub burst: Option<Burst>,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            seed: 0,
            requests: 10_000,
            read_fraction: 0.67,
            row_locality: 0.5,
            bank_spread: BankSpread::Uniform,
            think_gap: (0, 100),
            burst: None,
        }
    }
}

impl GenParams {
    /// Short think gaps and little row reuse.
    pub fn memory_intensive(seed: u64, requests: usize) -> Self {
        GenParams {
            seed,
            requests,
            read_fraction: 0.75,
            row_locality: 0.2,
            bank_spread: BankSpread::Uniform,
            think_gap: (0, 20),
            burst: None,
        }
    }

    /// Half writes, arriving in short dense bursts with idle gaps that keep
    /// the channel busy without saturating it.
    pub fn bursty_writes(seed: u64, requests: usize) -> Self {
        GenParams {
            seed,
            requests,
            read_fraction: 0.5,
            row_locality: 0.3,
            bank_spread: BankSpread::Uniform,
            think_gap: (0, 4),
            burst: Some(Burst { len: 16, gap: 600 }),
        }
    }

    pub fn validate(&self, geometry: &Geometry) -> Result<(), ConfigError> {
        if self.requests == 0 {
            return Err(ConfigError::invalid("gen.requests", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.read_fraction) {
            return Err(ConfigError::invalid("gen.read_fraction", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.row_locality) {
            return Err(ConfigError::invalid("gen.row_locality", "must lie in [0, 1]"));
        }
        if let BankSpread::Skewed { bank, weight } = self.bank_spread {
            if bank >= geometry.banks_per_rank {
                return Err(ConfigError::invalid("gen.bank_spread", "skewed bank out of range"));
            }
            if !(0.0..=1.0).contains(&weight) {
                return Err(ConfigError::invalid("gen.bank_spread", "weight must lie in [0, 1]"));
            }
        }
        if self.think_gap.0 > self.think_gap.1 {
            return Err(ConfigError::invalid("gen.think_gap", "min exceeds max"));
        }
        if let Some(b) = self.burst {
            if b.len == 0 {
                return Err(ConfigError::invalid("gen.burst", "length must be positive"));
            }
        }
        Ok(())
    }
}

pub fn generate_trace(params: &GenParams, geometry: &Geometry) -> Vec<TraceEntry> {
    let mut rng = XorShift64Star::new(params.seed);
    let banks = geometry.banks_total();
    let mut last_row: Vec<Option<u32>> = vec![None; banks];
    let mut out = Vec::with_capacity(params.requests);
    for i in 0..params.requests {
        let mut think_gap = rng.range_inclusive(params.think_gap.0, params.think_gap.1);
        if let Some(b) = params.burst {
            if i > 0 && i % b.len as usize == 0 {
                think_gap += b.gap;
            }
        }
        let kind = if rng.chance(params.read_fraction) {
            AccessKind::Read
        } else {
            AccessKind::Write
        };
        let channel = rng.below(geometry.channels as u64) as u32;
        let rank = rng.below(geometry.ranks_per_channel as u64) as u32;
        let bank = match params.bank_spread {
            BankSpread::Uniform => rng.below(geometry.banks_per_rank as u64) as u32,
            BankSpread::Skewed { bank, weight } => {
                if rng.chance(weight) {
                    bank
                } else {
                    rng.below(geometry.banks_per_rank as u64) as u32
                }
            }
        };
        let slot = ((channel * geometry.ranks_per_channel + rank) * geometry.banks_per_rank + bank) as usize;
        let fresh = rng.below(geometry.rows_per_bank() as u64) as u32;
        let row = match last_row[slot] {
            Some(prev) if rng.chance(params.row_locality) => prev,
            _ => fresh,
        };
        last_row[slot] = Some(row);
        let column = rng.below(geometry.columns_per_row as u64) as u32;
        let addr = DramAddress {
            channel,
            rank,
            bank,
            subarray: geometry.subarray_of(row),
            row,
            column,
        };
        out.push(TraceEntry {
            think_gap,
            kind,
            address: geometry.encode(&addr),
        });
    }
    out
}
