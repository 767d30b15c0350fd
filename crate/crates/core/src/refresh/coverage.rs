//! Post-hoc retention coverage check over a refresh log.
//!
//! Works from the logged refresh commands alone: row-group pointers, debt
//! trajectories and slot arithmetic are all re-derived here rather than
//! taken from the ledger.

use crate::dram::{Command, Cycle, Geometry, TimingParams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverageViolation {
    /// A row group went longer than the retention slack without refresh.
    Retention {
        channel: u32,
        rank: u32,
        bank: u32,
        row_group: u32,
        deadline: Cycle,
        actual: Cycle,
    },
    /// The re-derived debt left the credit bound.
    Debt {
        channel: u32,
        rank: u32,
        bank: u32,
        cycle: Cycle,
        debt: i64,
    },
}

impl std::fmt::Display for CoverageViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoverageViolation::Retention {
                channel,
                rank,
                bank,
                row_group,
                deadline,
                actual,
            } => write!(
                f,
                "retention ch{channel} rank{rank} bank{bank} row_group {row_group}: deadline {deadline}, refreshed {actual}"
            ),
            CoverageViolation::Debt {
                channel,
                rank,
                bank,
                cycle,
                debt,
            } => write!(f, "debt ch{channel} rank{rank} bank{bank} at cycle {cycle}: {debt}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverageOutcome {
    Pass,
    Violations(Vec<CoverageViolation>),
}

impl CoverageOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, CoverageOutcome::Pass)
    }

    pub fn violations(&self) -> &[CoverageViolation] {
        match self {
            CoverageOutcome::Pass => &[],
            CoverageOutcome::Violations(v) => v,
        }
    }
}

/// Run facts the log alone does not carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverageSpec {
    pub credit_limit: u32,
    /// First cycle that was not simulated.
    pub end_cycle: Cycle,
}

/// Number of obligations accrued by `cycle` for a slot first due at `first`.
fn ticks(first: Cycle, interval: Cycle, cycle: Cycle) -> i64 {
    if cycle < first {
        0
    } else {
        ((cycle - first) / interval + 1) as i64
    }
}

pub fn audit_refresh_coverage(
    log: &[Command],
    geometry: &Geometry,
    params: &TimingParams,
    spec: CoverageSpec,
) -> CoverageOutcome {
    let banks = geometry.banks_per_rank as usize;
    let groups = (geometry.rows_per_bank() / params.rows_per_refresh.max(1)) as usize;
    let slack = params.t_refw + spec.credit_limit as Cycle * params.t_refi;
    let limit = spec.credit_limit as i64;
    let upper = limit.max(1);
    let last_cycle = spec.end_cycle.saturating_sub(1);
    let mut out = Vec::new();

    for channel in 0..geometry.channels {
        for rank in 0..geometry.ranks_per_channel {
            let refreshes: Vec<&Command> = log
                .iter()
                .filter(|c| c.kind.is_refresh() && c.target.channel == channel && c.target.rank == rank)
                .collect();
            let rank_wide = refreshes.iter().any(|c| c.kind.is_rank_refresh());
            for bank in 0..banks {
                let first = if rank_wide {
                    params.t_refi
                } else if bank + 1 == banks {
                    params.t_refi
                } else {
                    (bank as Cycle + 1) * (params.t_refi / banks as Cycle)
                };
                let mut last = vec![0 as Cycle; groups];
                let mut issued: i64 = 0;
                for cmd in refreshes
                    .iter()
                    .filter(|c| c.kind.is_rank_refresh() || c.target.bank as usize == bank)
                {
                    let t = cmd.cycle;
                    let owed = ticks(first, params.t_refi, t);
                    // Debt peaks just before a refresh issues.
                    if owed - issued > upper {
                        out.push(CoverageViolation::Debt {
                            channel,
                            rank,
                            bank: bank as u32,
                            cycle: t,
                            debt: owed - issued,
                        });
                    }
                    let group = issued as usize % groups;
                    issued += 1;
                    if owed - issued < -limit {
                        out.push(CoverageViolation::Debt {
                            channel,
                            rank,
                            bank: bank as u32,
                            cycle: t,
                            debt: owed - issued,
                        });
                    }
                    if t > last[group] + slack {
                        out.push(CoverageViolation::Retention {
                            channel,
                            rank,
                            bank: bank as u32,
                            row_group: group as u32,
                            deadline: last[group] + slack,
                            actual: t,
                        });
                    }
                    last[group] = t;
                }
                if spec.end_cycle == 0 {
                    continue;
                }
                let owed = ticks(first, params.t_refi, last_cycle);
                if owed - issued > upper {
                    out.push(CoverageViolation::Debt {
                        channel,
                        rank,
                        bank: bank as u32,
                        cycle: last_cycle,
                        debt: owed - issued,
                    });
                }
                for (group, &when) in last.iter().enumerate() {
                    if last_cycle > when + slack {
                        out.push(CoverageViolation::Retention {
                            channel,
                            rank,
                            bank: bank as u32,
                            row_group: group as u32,
                            deadline: when + slack,
                            actual: last_cycle,
                        });
                    }
                }
            }
        }
    }
    if out.is_empty() {
        CoverageOutcome::Pass
    } else {
        CoverageOutcome::Violations(out)
    }
}
