//! Refresh policies and their decision functions.
//!
//! Decisions are pure functions of a ledger snapshot and per-bank views of
//! the request queues. The controller owns the ledger and turns an
//! `Issue` decision into precharge/refresh commands.

use crate::dram::{BankState, CommandKind, Cycle};

use super::ledger::{Granularity, RefreshLedger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PolicyKind {
    /// No refresh at all; the normalization baseline.
    Ideal,
    RefAb,
    RefPbRoundRobin,
    Darp,
    Sarp,
    Dsarp,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Ideal,
        PolicyKind::RefAb,
        PolicyKind::RefPbRoundRobin,
        PolicyKind::Darp,
        PolicyKind::Sarp,
        PolicyKind::Dsarp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Ideal => "ideal",
            PolicyKind::RefAb => "refab",
            PolicyKind::RefPbRoundRobin => "refpb",
            PolicyKind::Darp => "darp",
            PolicyKind::Sarp => "sarp",
            PolicyKind::Dsarp => "dsarp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "ideal" | "none" => Some(PolicyKind::Ideal),
            "refab" | "ab" => Some(PolicyKind::RefAb),
            "refpb" | "rr" | "refpbroundrobin" => Some(PolicyKind::RefPbRoundRobin),
            "darp" => Some(PolicyKind::Darp),
            "sarp" => Some(PolicyKind::Sarp),
            "dsarp" => Some(PolicyKind::Dsarp),
            _ => None,
        }
    }
}

/// Refresh granularity that SARP is layered on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SarpBase {
    #[default]
    PerBank,
    AllBank,
}

impl SarpBase {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "perbank" | "per-bank" | "pb" => Some(SarpBase::PerBank),
            "allbank" | "all-bank" | "ab" => Some(SarpBase::AllBank),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SarpBase::PerBank => "perbank",
            SarpBase::AllBank => "allbank",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Policy {
    pub kind: PolicyKind,
    pub sarp_base: SarpBase,
}

impl Policy {
    pub fn new(kind: PolicyKind) -> Self {
        Policy {
            kind,
            sarp_base: SarpBase::PerBank,
        }
    }

    /// Refresh accounting granularity; `None` for the ideal policy.
    pub fn granularity(&self) -> Option<Granularity> {
        match self.kind {
            PolicyKind::Ideal => None,
            PolicyKind::RefAb => Some(Granularity::AllBank),
            PolicyKind::Sarp if self.sarp_base == SarpBase::AllBank => Some(Granularity::AllBank),
            _ => Some(Granularity::PerBank),
        }
    }

    pub fn refresh_kind(&self) -> Option<CommandKind> {
        match self.kind {
            PolicyKind::Ideal => None,
            PolicyKind::RefAb => Some(CommandKind::RefAb),
            PolicyKind::RefPbRoundRobin | PolicyKind::Darp => Some(CommandKind::RefPb),
            PolicyKind::Sarp if self.sarp_base == SarpBase::AllBank => Some(CommandKind::RefSarpAb),
            PolicyKind::Sarp | PolicyKind::Dsarp => Some(CommandKind::RefSarp),
        }
    }

    pub fn uses_sarp(&self) -> bool {
        matches!(self.kind, PolicyKind::Sarp | PolicyKind::Dsarp)
    }

    /// Out-of-order and write-refresh decisions (DARP logic).
    pub fn uses_darp(&self) -> bool {
        matches!(self.kind, PolicyKind::Darp | PolicyKind::Dsarp)
    }
}

/// Why a refresh was issued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Reason {
    RoundRobin,
    IdleBankOOO,
    WriteDrainWRP,
    ForcedDebtLimit,
    PullIn,
}

impl Reason {
    pub const ALL: [Reason; 5] = [
        Reason::RoundRobin,
        Reason::IdleBankOOO,
        Reason::WriteDrainWRP,
        Reason::ForcedDebtLimit,
        Reason::PullIn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Reason::RoundRobin => "RoundRobin",
            Reason::IdleBankOOO => "IdleBankOOO",
            Reason::WriteDrainWRP => "WriteDrainWRP",
            Reason::ForcedDebtLimit => "ForcedDebtLimit",
            Reason::PullIn => "PullIn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Reason::ALL.into_iter().find(|r| r.name() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefreshAction {
    None,
    /// Refresh ledger slot `slot` (a bank, or the rank for all-bank
    /// accounting) with a command of `kind`.
    Issue { slot: usize, kind: CommandKind },
    /// Refresh owed by `slot` is deliberately delayed.
    Postpone { slot: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefreshDecision {
    pub action: RefreshAction,
    pub reason: Option<Reason>,
}

impl RefreshDecision {
    pub const NONE: RefreshDecision = RefreshDecision {
        action: RefreshAction::None,
        reason: None,
    };

    fn issue(slot: usize, kind: CommandKind, reason: Reason) -> Self {
        RefreshDecision {
            action: RefreshAction::Issue { slot, kind },
            reason: Some(reason),
        }
    }
}

/// Snapshot of one bank as seen by the refresh policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BankView {
    pub pending_reads: u32,
    pub pending_writes: u32,
    /// Cycle since which the bank's read queue has been empty.
    pub idle_since: Option<Cycle>,
    pub refreshing: bool,
}

impl BankView {
    pub fn pending_demand(&self) -> u32 {
        self.pending_reads + self.pending_writes
    }
}

/// In-order per-bank (or all-bank) refresh: the slot under the round-robin
/// pointer is refreshed as soon as it owes a refresh, busy or not.
pub fn decide_round_robin(ledger: &RefreshLedger, kind: CommandKind) -> RefreshDecision {
    let slot = ledger.round_robin_ptr;
    if ledger.debt(slot) > 0 {
        RefreshDecision::issue(slot, kind, Reason::RoundRobin)
    } else {
        RefreshDecision::NONE
    }
}

fn forced(ledger: &RefreshLedger, cycle: Cycle, kind: CommandKind) -> Option<RefreshDecision> {
    (0..ledger.slots())
        .filter(|&b| ledger.is_forced(b, cycle))
        .max_by_key(|&b| (ledger.debt(b), std::cmp::Reverse(b)))
        .map(|b| RefreshDecision::issue(b, kind, Reason::ForcedDebtLimit))
}

/// Out-of-order refresh while the channel serves reads. Prefers banks with
/// no pending reads or buffered writes; postpones otherwise until a bank
/// reaches its bound.
pub fn decide_darp_ooo(
    ledger: &RefreshLedger,
    banks: &[BankView],
    cycle: Cycle,
    idle_pullin_threshold: Option<Cycle>,
    kind: CommandKind,
) -> RefreshDecision {
    if let Some(d) = forced(ledger, cycle, kind) {
        return d;
    }
    let owing = || (0..ledger.slots()).filter(|&b| ledger.debt(b) > 0 && !banks[b].refreshing);
    if let Some(b) = owing()
        .filter(|&b| banks[b].pending_demand() == 0)
        .max_by_key(|&b| (ledger.debt(b), std::cmp::Reverse(b)))
    {
        return RefreshDecision::issue(b, kind, Reason::IdleBankOOO);
    }
    if let Some(b) = owing().max_by_key(|&b| (ledger.debt(b), std::cmp::Reverse(b))) {
        return RefreshDecision {
            action: RefreshAction::Postpone { slot: b },
            reason: None,
        };
    }
    let Some(threshold) = idle_pullin_threshold else {
        return RefreshDecision::NONE;
    };
    if (0..ledger.slots()).any(|b| ledger.debt(b) > 0) {
        return RefreshDecision::NONE;
    }
    (0..ledger.slots())
        .filter(|&b| ledger.can_refresh(b) && !banks[b].refreshing && banks[b].pending_demand() == 0)
        .filter_map(|b| banks[b].idle_since.map(|since| (since, b)))
        .filter(|&(since, _)| cycle >= since.saturating_add(threshold))
        .min()
        .map_or(RefreshDecision::NONE, |(_, b)| {
            RefreshDecision::issue(b, kind, Reason::PullIn)
        })
}

/// Write-refresh parallelization while the channel drains writes: refresh
/// the bank with the fewest pending demands so its refresh hides behind
/// writes to the other banks. At most one such refresh runs per rank.
pub fn decide_darp_wrp(
    ledger: &RefreshLedger,
    banks: &[BankView],
    cycle: Cycle,
    kind: CommandKind,
) -> RefreshDecision {
    if let Some(d) = forced(ledger, cycle, kind) {
        return d;
    }
    if banks.iter().any(|b| b.refreshing) {
        return RefreshDecision::NONE;
    }
    (0..ledger.slots())
        .filter(|&b| ledger.can_refresh(b))
        .min_by_key(|&b| (banks[b].pending_demand(), std::cmp::Reverse(ledger.debt(b)), b))
        .map_or(RefreshDecision::NONE, |b| {
            RefreshDecision::issue(b, kind, Reason::WriteDrainWRP)
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Admit,
    Block { until: Cycle },
}

/// Whether an access to `subarray` may proceed in a bank with a refresh in
/// flight. Only subarray-aware policies admit accesses to other subarrays.
pub fn sarp_admit(subarray: u32, bank: &BankState, policy: &Policy, cycle: Cycle) -> Admission {
    match bank.refresh_at(cycle) {
        None => Admission::Admit,
        Some(w) if policy.uses_sarp() && w.kind.is_subarray_refresh() && !w.blocks(subarray) => {
            Admission::Admit
        }
        Some(w) => Admission::Block { until: w.until },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dram::{Density, Geometry, RefreshWindow, TimingParams};

    fn ledger(banks: u32) -> RefreshLedger {
        let g = Geometry::new(1, 1, banks, 8, 64, 128, 64);
        let p = TimingParams::ddr3_1600(Density::Gb8, &g);
        RefreshLedger::new(Granularity::PerBank, &g, &p, 8)
    }

    fn idle(n: usize) -> Vec<BankView> {
        vec![
            BankView {
                idle_since: Some(0),
                ..BankView::default()
            };
            n
        ]
    }

    /// Ticks every slot once so all banks owe exactly one refresh.
    fn owe_one(l: &mut RefreshLedger) {
        l.tick_intervals(6240).unwrap();
    }

    #[test]
    fn round_robin_single_bank() {
        let mut l = ledger(1);
        for k in 1..5 {
            l.tick_intervals(k * 6240).unwrap();
            let d = decide_round_robin(&l, CommandKind::RefPb);
            assert_eq!(d.action, RefreshAction::Issue { slot: 0, kind: CommandKind::RefPb });
            l.record_refresh(0, k * 6240).unwrap();
        }
    }

    #[test]
    fn round_robin_cycles_through_banks() {
        let mut l = ledger(8);
        let mut order = Vec::new();
        for cycle in 0..3 * 6240 {
            l.tick_intervals(cycle).unwrap();
            if let RefreshAction::Issue { slot, .. } = decide_round_robin(&l, CommandKind::RefPb).action {
                order.push(slot);
                l.record_refresh(slot, cycle).unwrap();
            }
        }
        let expected: Vec<usize> = (0..order.len()).map(|i| i % 8).collect();
        assert_eq!(order, expected);
        assert!(order.len() >= 16);
    }

    #[test]
    fn round_robin_refreshes_busy_bank() {
        let mut l = ledger(8);
        owe_one(&mut l);
        for slot in 0..3 {
            l.record_refresh(slot, 6240).unwrap();
        }
        let d = decide_round_robin(&l, CommandKind::RefPb);
        assert_eq!(d.action, RefreshAction::Issue { slot: 3, kind: CommandKind::RefPb });
    }

    #[test]
    fn ooo_prefers_idle_bank() {
        let mut l = ledger(2);
        owe_one(&mut l);
        let mut banks = idle(2);
        banks[0].pending_reads = 3;
        banks[0].idle_since = None;
        let d = decide_darp_ooo(&l, &banks, 6240, Some(64), CommandKind::RefPb);
        assert_eq!(d.action, RefreshAction::Issue { slot: 1, kind: CommandKind::RefPb });
        assert_eq!(d.reason, Some(Reason::IdleBankOOO));
    }

    #[test]
    fn ooo_postpones_when_everyone_is_busy() {
        let mut l = ledger(8);
        owe_one(&mut l);
        let mut banks = idle(8);
        for b in &mut banks {
            b.pending_reads = 2;
            b.idle_since = None;
        }
        let d = decide_darp_ooo(&l, &banks, 6240, Some(64), CommandKind::RefPb);
        assert!(matches!(d.action, RefreshAction::Postpone { .. }));
    }

    #[test]
    fn ooo_forces_at_the_bound() {
        let mut l = ledger(8);
        // Bank 5 has seen eight slots; refresh everyone else to keep them
        // below the bound.
        let cycle = 7 * 6240 + 6 * 780;
        l.tick_intervals(cycle).unwrap();
        for b in 0..8 {
            if b != 5 {
                while l.debt(b) > 0 {
                    l.record_refresh(b, cycle).unwrap();
                }
            }
        }
        assert_eq!(l.debt(5), 8);
        let mut banks = idle(8);
        banks[5].pending_reads = 10;
        let d = decide_darp_ooo(&l, &banks, cycle, Some(64), CommandKind::RefPb);
        assert_eq!(d.action, RefreshAction::Issue { slot: 5, kind: CommandKind::RefPb });
        assert_eq!(d.reason, Some(Reason::ForcedDebtLimit));
    }

    #[test]
    fn ooo_pulls_in_longest_idle_bank() {
        let l = ledger(4);
        let mut banks = idle(4);
        banks[0].idle_since = Some(50);
        banks[1].idle_since = Some(10);
        banks[2].pending_reads = 1;
        banks[2].idle_since = None;
        banks[3].idle_since = Some(10);
        let d = decide_darp_ooo(&l, &banks, 100, Some(64), CommandKind::RefPb);
        assert_eq!(d.action, RefreshAction::Issue { slot: 1, kind: CommandKind::RefPb });
        assert_eq!(d.reason, Some(Reason::PullIn));
        assert_eq!(decide_darp_ooo(&l, &banks, 100, None, CommandKind::RefPb), RefreshDecision::NONE);
        assert_eq!(decide_darp_ooo(&l, &banks, 73, Some(64), CommandKind::RefPb), RefreshDecision::NONE);
    }

    #[test]
    fn wrp_picks_least_loaded_bank() {
        let mut l = ledger(3);
        owe_one(&mut l);
        let mut banks = idle(3);
        banks[0].pending_writes = 5;
        banks[1].pending_writes = 2;
        let d = decide_darp_wrp(&l, &banks, 6240, CommandKind::RefPb);
        assert_eq!(d.action, RefreshAction::Issue { slot: 2, kind: CommandKind::RefPb });
        assert_eq!(d.reason, Some(Reason::WriteDrainWRP));
    }

    #[test]
    fn wrp_stops_without_pull_in_credit() {
        let mut l = ledger(3);
        for b in 0..3 {
            for i in 0..8 {
                l.record_refresh(b, i).unwrap();
            }
        }
        assert_eq!(decide_darp_wrp(&l, &idle(3), 10, CommandKind::RefPb), RefreshDecision::NONE);
    }

    #[test]
    fn sarp_admission() {
        let mut bank = BankState::default();
        bank.refresh = Some(RefreshWindow {
            kind: CommandKind::RefSarp,
            start: 0,
            until: 90,
            subarrays: 1,
        });
        let sarp = Policy::new(PolicyKind::Sarp);
        let rr = Policy::new(PolicyKind::RefPbRoundRobin);
        assert_eq!(sarp_admit(1, &bank, &sarp, 10), Admission::Admit);
        assert_eq!(sarp_admit(0, &bank, &sarp, 10), Admission::Block { until: 90 });
        assert_eq!(sarp_admit(0, &bank, &sarp, 90), Admission::Admit);
        bank.refresh.as_mut().unwrap().kind = CommandKind::RefPb;
        assert_eq!(sarp_admit(1, &bank, &rr, 10), Admission::Block { until: 90 });
    }
}
