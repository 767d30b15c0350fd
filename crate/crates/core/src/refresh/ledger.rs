//! Per-bank refresh debt accounting.
//!
//! Debt is `intervals elapsed - refreshes issued`: positive when refreshes
//! have been postponed, negative when pulled in. Its magnitude is bounded
//! by the credit limit (eight by default).

use thiserror::Error;

use crate::dram::{Cycle, Geometry, TimingParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    /// One obligation per bank, slots staggered `t_refi_pb` apart.
    PerBank,
    /// One rank-wide obligation per `t_refi`.
    AllBank,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("refresh integrity violated on slot {slot} at cycle {cycle}: debt {debt} outside the credit bound")]
    IntegrityViolation { slot: usize, cycle: Cycle, debt: i64 },
}

#[derive(Debug, Clone)]
pub struct RefreshLedger {
    granularity: Granularity,
    debt: Vec<i64>,
    next_due: Vec<Cycle>,
    pub round_robin_ptr: usize,
    credit_limit: u32,
    interval: Cycle,
    groups: usize,
    next_group: Vec<usize>,
    /// Last refresh cycle of every row group, per slot. Row groups start as
    /// freshly refreshed at cycle 0.
    last_refresh: Vec<Vec<Cycle>>,
    retention_slack: Cycle,
    deadline_guard: Cycle,
}

impl RefreshLedger {
    pub fn new(
        granularity: Granularity,
        geometry: &Geometry,
        params: &TimingParams,
        credit_limit: u32,
    ) -> Self {
        let banks = geometry.banks_per_rank as usize;
        let next_due: Vec<Cycle> = match granularity {
            Granularity::PerBank => (0..banks).map(|b| params.refresh_slot(b, banks)).collect(),
            Granularity::AllBank => vec![params.t_refi],
        };
        let slots = next_due.len();
        let groups = params.refreshes_per_window(geometry) as usize;
        RefreshLedger {
            granularity,
            debt: vec![0; slots],
            next_due,
            round_robin_ptr: 0,
            credit_limit,
            interval: params.t_refi,
            groups,
            next_group: vec![0; slots],
            last_refresh: vec![vec![0; groups]; slots],
            retention_slack: params.t_refw + credit_limit as Cycle * params.t_refi,
            // Worst-case wait of a forced refresh: an in-flight refresh, a
            // fresh activation and write recovery before the precharge.
            deadline_guard: params.t_rfc_ab
                + params.t_ras
                + params.cwl
                + params.t_bl
                + params.t_wr
                + params.t_rtp
                + params.t_rp
                + 64,
        }
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn slots(&self) -> usize {
        self.debt.len()
    }

    pub fn debt(&self, slot: usize) -> i64 {
        self.debt[slot]
    }

    pub fn next_due(&self, slot: usize) -> Cycle {
        self.next_due[slot]
    }

    pub fn credit_limit(&self) -> u32 {
        self.credit_limit
    }

    /// Debt at which a refresh becomes mandatory. A zero credit limit still
    /// lets each obligation exist until its own refresh issues.
    pub fn force_level(&self) -> i64 {
        self.credit_limit.max(1) as i64
    }

    /// Whether one more refresh may be issued to `slot` without exceeding
    /// the pull-in bound.
    pub fn can_refresh(&self, slot: usize) -> bool {
        self.debt[slot] > -(self.credit_limit as i64)
    }

    /// Latest cycle by which the slot's next row group must be refreshed.
    pub fn deadline(&self, slot: usize) -> Cycle {
        self.last_refresh[slot][self.next_group[slot]] + self.retention_slack
    }

    /// A refresh must be issued now: the debt bound is reached, or the next
    /// row group is close to exceeding its retention slack.
    pub fn is_forced(&self, slot: usize, cycle: Cycle) -> bool {
        self.debt[slot] >= self.force_level()
            || (self.debt[slot] > -(self.credit_limit as i64)
                && cycle + self.deadline_guard >= self.deadline(slot))
    }

    /// Accrues obligations for every slot whose nominal refresh slot has
    /// been reached.
    pub fn tick_intervals(&mut self, cycle: Cycle) -> Result<(), LedgerError> {
        for slot in 0..self.debt.len() {
            while self.next_due[slot] <= cycle {
                self.debt[slot] += 1;
                self.next_due[slot] += self.interval;
                if self.debt[slot] > self.force_level() {
                    return Err(LedgerError::IntegrityViolation {
                        slot,
                        cycle,
                        debt: self.debt[slot],
                    });
                }
            }
        }
        Ok(())
    }

    /// Settles one obligation of `slot`.
    pub fn record_refresh(&mut self, slot: usize, cycle: Cycle) -> Result<(), LedgerError> {
        if !self.can_refresh(slot) {
            return Err(LedgerError::IntegrityViolation {
                slot,
                cycle,
                debt: self.debt[slot] - 1,
            });
        }
        self.debt[slot] -= 1;
        let group = self.next_group[slot];
        self.last_refresh[slot][group] = cycle;
        self.next_group[slot] = (group + 1) % self.groups;
        self.round_robin_ptr = (slot + 1) % self.debt.len();
        Ok(())
    }
}
