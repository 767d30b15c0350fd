//! Post-hoc command-log auditor.
//!
//! Independent of [`crate::dram::device`]: it rebuilds row-buffer state
//! from scratch and checks every pair of commands that lie within the
//! longest constraint span of each other against a pairwise rule table.
//! Pairwise minimum-distance rules are monotone, so checking all earlier
//! commands in the window is equivalent to checking only the latest one.

use super::command::{Command, CommandKind};
use super::geometry::Geometry;
use super::params::{Cycle, TimingParams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Index of the offending (later) command in the log.
    pub index: usize,
    pub constraint: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuditOutcome {
    Pass,
    Violations(Vec<Violation>),
}

impl AuditOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, AuditOutcome::Pass)
    }

    pub fn violations(&self) -> &[Violation] {
        match self {
            AuditOutcome::Pass => &[],
            AuditOutcome::Violations(v) => v,
        }
    }
}

/// Per-command facts the pair rules need, filled by the state replay.
#[derive(Debug, Clone, Default)]
struct Fact {
    /// Subarray locked by a refresh command: one entry for a bank refresh,
    /// one per bank of the rank for a rank refresh.
    refresh_subarrays: Vec<u32>,
    /// ACT issued while a subarray refresh of the same bank was running.
    penalized: bool,
}

pub fn audit_command_log(log: &[Command], geometry: &Geometry, params: &TimingParams) -> AuditOutcome {
    let mut violations = Vec::new();
    let facts = replay_state(log, geometry, params, &mut violations);
    check_pairs(log, &facts, params, &mut violations);
    violations.sort_by(|a, b| a.index.cmp(&b.index).then(a.constraint.cmp(b.constraint)));
    violations.dedup();
    if violations.is_empty() {
        AuditOutcome::Pass
    } else {
        AuditOutcome::Violations(violations)
    }
}

fn replay_state(
    log: &[Command],
    geometry: &Geometry,
    params: &TimingParams,
    out: &mut Vec<Violation>,
) -> Vec<Fact> {
    let banks = geometry.banks_per_rank as usize;
    let ranks = geometry.ranks_per_channel as usize;
    let index = |c: &Command| (c.target.channel as usize * ranks + c.target.rank as usize) * banks;
    let mut open: Vec<Option<u32>> = vec![None; geometry.banks_total()];
    let mut pointer: Vec<u32> = vec![0; geometry.banks_total()];
    let rows = geometry.rows_per_bank();
    let per_sub = geometry.rows_per_subarray;
    let mut facts = Vec::with_capacity(log.len());

    for (i, c) in log.iter().enumerate() {
        let mut flag = |constraint| out.push(Violation { index: i, constraint });
        if i > 0 && c.cycle < log[i - 1].cycle {
            flag("order");
        }
        let base = index(c);
        let slot = base + c.target.bank as usize;
        let mut fact = Fact::default();
        match c.kind {
            CommandKind::Act => {
                if open[slot].is_some() {
                    flag("bank_open");
                }
                open[slot] = Some(c.target.row);
            }
            CommandKind::Rd | CommandKind::Wr => match open[slot] {
                Some(r) if r == c.target.row => {}
                Some(_) => flag("row_conflict"),
                None => flag("row_closed"),
            },
            CommandKind::Pre => {
                if open[slot].is_none() {
                    flag("row_closed");
                }
                open[slot] = None;
            }
            CommandKind::RefPb | CommandKind::RefSarp => {
                let sub = pointer[slot] / per_sub;
                if c.kind == CommandKind::RefPb && open[slot].is_some() {
                    flag("bank_open");
                }
                if c.kind == CommandKind::RefSarp && open[slot].is_some_and(|r| r / per_sub == sub) {
                    flag("bank_open");
                }
                fact.refresh_subarrays = vec![sub];
                pointer[slot] = (pointer[slot] + params.rows_per_refresh) % rows;
            }
            CommandKind::RefAb | CommandKind::RefSarpAb => {
                for b in base..base + banks {
                    let sub = pointer[b] / per_sub;
                    fact.refresh_subarrays.push(sub);
                    let blocked = match c.kind {
                        CommandKind::RefAb => open[b].is_some(),
                        _ => open[b].is_some_and(|r| r / per_sub == sub),
                    };
                    if blocked {
                        flag("bank_open");
                    }
                    pointer[b] = (pointer[b] + params.rows_per_refresh) % rows;
                }
            }
        }
        facts.push(fact);
    }

    // ACT penalty: any subarray refresh of the bank in flight at the ACT.
    if params.t_sarp_penalty > 0 {
        for i in 0..log.len() {
            if log[i].kind != CommandKind::Act {
                continue;
            }
            facts[i].penalized = log[..i].iter().any(|j| {
                j.kind.is_subarray_refresh()
                    && covers_bank(j, &log[i])
                    && j.cycle <= log[i].cycle
                    && log[i].cycle < j.cycle + j.kind.refresh_duration(params)
            });
        }
    }
    facts
}

fn same_channel(a: &Command, b: &Command) -> bool {
    a.target.channel == b.target.channel
}

fn same_rank(a: &Command, b: &Command) -> bool {
    same_channel(a, b) && a.target.rank == b.target.rank
}

/// Whether command `a` acts on the bank addressed by `b`.
fn covers_bank(a: &Command, b: &Command) -> bool {
    if !same_rank(a, b) {
        return false;
    }
    a.kind.is_rank_refresh() || b.kind.is_rank_refresh() || a.target.bank == b.target.bank
}

fn check_pairs(log: &[Command], facts: &[Fact], params: &TimingParams, out: &mut Vec<Violation>) {
    let horizon = params.max_constraint_span() + 1;
    for i in 0..log.len() {
        let later = &log[i];
        let mut seen_act_for_bank = false;
        for j in (0..i).rev() {
            let earlier = &log[j];
            if later.cycle >= earlier.cycle + horizon {
                break;
            }
            let gap = later.cycle.saturating_sub(earlier.cycle);
            let mut need = |min_gap: Cycle, constraint: &'static str| {
                if gap < min_gap {
                    out.push(Violation { index: i, constraint });
                }
            };
            if same_channel(earlier, later) {
                need(1, "cmd_bus");
                use CommandKind::*;
                match (earlier.kind, later.kind) {
                    (Rd | Wr, Rd | Wr) => need(params.t_ccd, "tCCD"),
                    _ => {}
                }
                match (earlier.kind, later.kind) {
                    (Wr, Rd) => need(params.cwl + params.t_bl + params.t_wtr, "tWTR"),
                    (Rd, Wr) => need(params.t_rtw, "tRTW"),
                    _ => {}
                }
            }
            if same_rank(earlier, later)
                && earlier.kind == CommandKind::Act
                && later.kind == CommandKind::Act
            {
                need(params.t_rrd, "tRRD");
            }
            if !covers_bank(earlier, later) {
                continue;
            }
            bank_pair_rules(earlier, later, &facts[j], params, &mut seen_act_for_bank, &mut need);
        }
    }
}

fn bank_pair_rules(
    earlier: &Command,
    later: &Command,
    earlier_fact: &Fact,
    params: &TimingParams,
    seen_act_for_bank: &mut bool,
    need: &mut impl FnMut(Cycle, &'static str),
) {
    use CommandKind::*;
    let refresh_name = |k: CommandKind| if k.is_rank_refresh() { "tRFCab" } else { "tRFCpb" };
    match (earlier.kind, later.kind) {
        (Act, Act) if earlier.target.bank == later.target.bank => need(params.t_rc, "tRC"),
        (Act, Pre) if earlier.target.bank == later.target.bank => need(params.t_ras, "tRAS"),
        (Act, Rd | Wr) if earlier.target.bank == later.target.bank && !*seen_act_for_bank => {
            let penalty = if earlier_fact.penalized { params.t_sarp_penalty } else { 0 };
            need(params.t_rcd + penalty, "tRCD");
        }
        (Act, RefPb | RefAb) => need(params.t_rc, "tRC"),
        (Pre, Act) if earlier.target.bank == later.target.bank => need(params.t_rp, "tRP"),
        (Pre, RefPb | RefAb | RefSarp | RefSarpAb) => need(params.t_rp, "tRP"),
        (Rd, Pre) if earlier.target.bank == later.target.bank => need(params.t_rtp, "tRTP"),
        (Wr, Pre) if earlier.target.bank == later.target.bank => {
            need(params.cwl + params.t_bl + params.t_wr, "tWR")
        }
        (RefPb | RefAb, Act) => need(earlier.kind.refresh_duration(params), refresh_name(earlier.kind)),
        (RefSarp, Act) if later.target.subarray == earlier_fact.refresh_subarrays[0] => {
            need(earlier.kind.refresh_duration(params), refresh_name(earlier.kind))
        }
        (RefSarpAb, Act) if later.target.subarray == earlier_fact.refresh_subarrays[later.target.bank as usize] => {
            need(earlier.kind.refresh_duration(params), refresh_name(earlier.kind))
        }
        (RefPb | RefAb | RefSarp | RefSarpAb, RefPb | RefAb | RefSarp | RefSarpAb) => {
            need(earlier.kind.refresh_duration(params), refresh_name(earlier.kind))
        }
        _ => {}
    }
    if earlier.kind == Act && earlier.target.bank == later.target.bank {
        *seen_act_for_bank = true;
    }
}
