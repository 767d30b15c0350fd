//! Incremental device state and the live legality checker.
//!
//! Every command goes through [`Device::earliest_issue`], which folds the
//! last-event timestamps of the affected bank, rank and channel into the
//! earliest legal issue cycle. [`Device::apply`] re-checks that bound and
//! then records the command.

use thiserror::Error;

use super::command::{Command, CommandKind, Constraint};
use super::geometry::{DramAddress, Geometry};
use super::params::{Cycle, TimingParams};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TimingError {
    #[error("{kind:?} can never issue from the current state: {reason}")]
    IllegalTransition { kind: CommandKind, reason: &'static str },
    #[error("{kind:?} at cycle {cycle} violates {constraint} (earliest legal cycle {earliest})")]
    TimingViolation {
        kind: CommandKind,
        cycle: Cycle,
        earliest: Cycle,
        constraint: Constraint,
    },
}

impl TimingError {
    pub fn constraint_name(&self) -> &'static str {
        match self {
            TimingError::IllegalTransition { .. } => "illegal_transition",
            TimingError::TimingViolation { constraint, .. } => constraint.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BankPhase {
    Idle,
    Activating,
    RowOpen,
    Precharging,
    Refreshing,
}

/// A refresh occupying (part of) a bank over `[start, until)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefreshWindow {
    pub kind: CommandKind,
    pub start: Cycle,
    pub until: Cycle,
    /// Bit `s` set when subarray `s` is being refreshed.
    pub subarrays: u64,
}

impl RefreshWindow {
    pub fn active_at(&self, cycle: Cycle) -> bool {
        self.start <= cycle && cycle < self.until
    }

    /// Whether an access to `subarray` must wait for this refresh.
    pub fn blocks(&self, subarray: u32) -> bool {
        !self.kind.is_subarray_refresh() || self.subarrays & (1u64 << subarray) != 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BankState {
    pub open_row: Option<u32>,
    /// Round-robin row pointer for the next refresh of this bank.
    pub next_refresh_row: u32,
    pub last_act: Option<Cycle>,
    /// The last ACT overlapped a subarray refresh and pays the access penalty.
    pub act_penalized: bool,
    pub last_pre: Option<Cycle>,
    pub last_rd: Option<Cycle>,
    pub last_wr: Option<Cycle>,
    /// Most recent refresh; inert once `until` has passed.
    pub refresh: Option<RefreshWindow>,
}

impl BankState {
    pub fn refresh_at(&self, cycle: Cycle) -> Option<&RefreshWindow> {
        self.refresh.as_ref().filter(|w| w.active_at(cycle))
    }

    pub fn refreshing_subarrays(&self, cycle: Cycle) -> u64 {
        self.refresh_at(cycle).map_or(0, |w| w.subarrays)
    }

    /// Cycle at which the bank's refresh (if any) completes.
    pub fn busy_until(&self) -> Cycle {
        self.refresh.map_or(0, |w| w.until)
    }

    pub fn phase(&self, cycle: Cycle, params: &TimingParams) -> BankPhase {
        if let Some(w) = self.refresh_at(cycle) {
            if !w.kind.is_subarray_refresh() {
                return BankPhase::Refreshing;
            }
        }
        if self.open_row.is_some() {
            if self.last_act.is_some_and(|a| cycle < a + params.t_rcd) {
                return BankPhase::Activating;
            }
            return BankPhase::RowOpen;
        }
        if self.last_pre.is_some_and(|p| cycle < p + params.t_rp) {
            return BankPhase::Precharging;
        }
        if self.refresh_at(cycle).is_some() {
            return BankPhase::Refreshing;
        }
        BankPhase::Idle
    }
}

#[derive(Debug, Clone, Default)]
pub struct RankState {
    pub banks: Vec<BankState>,
    pub last_act: Option<Cycle>,
}

#[derive(Debug, Clone, Default)]
pub struct ChannelState {
    pub ranks: Vec<RankState>,
    pub last_cmd: Option<Cycle>,
    pub last_col: Option<Cycle>,
    pub last_rd: Option<Cycle>,
    pub last_wr: Option<Cycle>,
}

/// Full state of every channel, rank, bank and subarray.
#[derive(Debug, Clone)]
pub struct Device {
    pub channels: Vec<ChannelState>,
    rows_per_bank: u32,
    rows_per_subarray: u32,
}

/// Running maximum of readiness bounds, remembering which constraint binds.
#[derive(Debug, Clone, Copy)]
struct Bound {
    cycle: Cycle,
    binding: Option<Constraint>,
}

impl Bound {
    fn raise(&mut self, ready: Cycle, constraint: Constraint) {
        if ready > self.cycle {
            self.cycle = ready;
            self.binding = Some(constraint);
        }
    }

    fn after(&mut self, last: Option<Cycle>, delta: Cycle, constraint: Constraint) {
        if let Some(last) = last {
            self.raise(last + delta, constraint);
        }
    }
}

/// Earliest cycle at which `cmd` may issue, together with the binding
/// constraint (`None` when the command could issue at `cmd.cycle`).
pub fn earliest_issue_cycle(
    cmd: &Command,
    device: &Device,
    params: &TimingParams,
) -> Result<(Cycle, Option<Constraint>), TimingError> {
    device.earliest_issue(cmd.kind, &cmd.target, cmd.cycle, params)
}

/// Applies `cmd` to `device`; returns the data-completion cycle for RD/WR.
pub fn apply_command(
    cmd: &Command,
    device: &mut Device,
    params: &TimingParams,
) -> Result<Option<Cycle>, TimingError> {
    device.apply(cmd, params)
}

impl Device {
    pub fn new(geometry: &Geometry) -> Self {
        let rank = RankState {
            banks: vec![BankState::default(); geometry.banks_per_rank as usize],
            last_act: None,
        };
        let channel = ChannelState {
            ranks: vec![rank; geometry.ranks_per_channel as usize],
            ..ChannelState::default()
        };
        Device {
            channels: vec![channel; geometry.channels as usize],
            rows_per_bank: geometry.rows_per_bank(),
            rows_per_subarray: geometry.rows_per_subarray,
        }
    }

    pub fn bank(&self, channel: u32, rank: u32, bank: u32) -> &BankState {
        &self.channels[channel as usize].ranks[rank as usize].banks[bank as usize]
    }

    pub fn rank(&self, channel: u32, rank: u32) -> &RankState {
        &self.channels[channel as usize].ranks[rank as usize]
    }

    /// Subarray that the bank's next refresh will lock.
    pub fn next_refresh_subarray(&self, channel: u32, rank: u32, bank: u32) -> u32 {
        self.bank(channel, rank, bank).next_refresh_row / self.rows_per_subarray
    }

    /// Smallest cycle `>= now` at which issuing `kind` to `target` breaks no
    /// timing constraint. Pure.
    pub fn earliest_issue(
        &self,
        kind: CommandKind,
        target: &DramAddress,
        now: Cycle,
        params: &TimingParams,
    ) -> Result<(Cycle, Option<Constraint>), TimingError> {
        let channel = &self.channels[target.channel as usize];
        let rank = &channel.ranks[target.rank as usize];
        let bank = &rank.banks[target.bank as usize];
        let mut bound = Bound {
            cycle: now,
            binding: None,
        };
        bound.after(channel.last_cmd, 1, Constraint::CmdBus);
        let illegal = |reason| Err(TimingError::IllegalTransition { kind, reason });

        match kind {
            CommandKind::Act => {
                if bank.open_row.is_some() {
                    return illegal("bank already has an open row");
                }
                bound.after(bank.last_pre, params.t_rp, Constraint::TRp);
                bound.after(bank.last_act, params.t_rc, Constraint::TRc);
                bound.after(rank.last_act, params.t_rrd, Constraint::TRrd);
                if let Some(w) = &bank.refresh {
                    if w.blocks(target.subarray) {
                        bound.raise(w.until, Constraint::for_refresh(w.kind));
                    }
                }
            }
            CommandKind::Rd | CommandKind::Wr => {
                match bank.open_row {
                    Some(row) if row == target.row => {}
                    Some(_) => return illegal("a different row is open"),
                    None => return illegal("no row is open"),
                }
                let penalty = if bank.act_penalized { params.t_sarp_penalty } else { 0 };
                bound.after(bank.last_act, params.t_rcd + penalty, Constraint::TRcd);
                bound.after(channel.last_col, params.t_ccd, Constraint::TCcd);
                if kind == CommandKind::Rd {
                    bound.after(
                        channel.last_wr,
                        params.cwl + params.t_bl + params.t_wtr,
                        Constraint::TWtr,
                    );
                } else {
                    bound.after(channel.last_rd, params.t_rtw, Constraint::TRtw);
                }
            }
            CommandKind::Pre => {
                if bank.open_row.is_none() {
                    return illegal("no row is open");
                }
                bound.after(bank.last_act, params.t_ras, Constraint::TRas);
                bound.after(bank.last_rd, params.t_rtp, Constraint::TRtp);
                bound.after(
                    bank.last_wr,
                    params.cwl + params.t_bl + params.t_wr,
                    Constraint::TWr,
                );
            }
            CommandKind::RefPb => {
                if bank.open_row.is_some() {
                    return illegal("bank must be precharged before refresh");
                }
                self.refresh_bank_bounds(bank, params, true, &mut bound);
            }
            CommandKind::RefSarp => {
                let subarray = bank.next_refresh_row / self.rows_per_subarray;
                if bank.open_row.is_some_and(|r| r / self.rows_per_subarray == subarray) {
                    return illegal("open row lies in the refreshing subarray");
                }
                self.refresh_bank_bounds(bank, params, false, &mut bound);
            }
            CommandKind::RefAb => {
                for bank in &rank.banks {
                    if bank.open_row.is_some() {
                        return illegal("every bank must be precharged before refresh");
                    }
                    self.refresh_bank_bounds(bank, params, true, &mut bound);
                }
            }
            CommandKind::RefSarpAb => {
                for bank in &rank.banks {
                    let subarray = bank.next_refresh_row / self.rows_per_subarray;
                    if bank.open_row.is_some_and(|r| r / self.rows_per_subarray == subarray) {
                        return illegal("open row lies in the refreshing subarray");
                    }
                    self.refresh_bank_bounds(bank, params, false, &mut bound);
                }
            }
        }
        Ok((bound.cycle, bound.binding))
    }

    fn refresh_bank_bounds(
        &self,
        bank: &BankState,
        params: &TimingParams,
        whole_bank: bool,
        bound: &mut Bound,
    ) {
        bound.after(bank.last_pre, params.t_rp, Constraint::TRp);
        if whole_bank {
            bound.after(bank.last_act, params.t_rc, Constraint::TRc);
        }
        if let Some(w) = &bank.refresh {
            bound.raise(w.until, Constraint::for_refresh(w.kind));
        }
    }

    /// Checks `cmd` against [`Device::earliest_issue`] and records it.
    pub fn apply(&mut self, cmd: &Command, params: &TimingParams) -> Result<Option<Cycle>, TimingError> {
        let (earliest, binding) = self.earliest_issue(cmd.kind, &cmd.target, cmd.cycle, params)?;
        if earliest > cmd.cycle {
            return Err(TimingError::TimingViolation {
                kind: cmd.kind,
                cycle: cmd.cycle,
                earliest,
                constraint: binding.unwrap_or(Constraint::CmdBus),
            });
        }
        self.apply_unchecked(cmd, params);
        Ok(match cmd.kind {
            CommandKind::Rd => Some(cmd.cycle + params.read_latency()),
            CommandKind::Wr => Some(cmd.cycle + params.write_latency()),
            _ => None,
        })
    }

    fn apply_unchecked(&mut self, cmd: &Command, params: &TimingParams) {
        let t = cmd.cycle;
        let rows_per_bank = self.rows_per_bank;
        let rows_per_subarray = self.rows_per_subarray;
        let channel = &mut self.channels[cmd.target.channel as usize];
        channel.last_cmd = Some(t);
        let rank = &mut channel.ranks[cmd.target.rank as usize];
        let advance = |bank: &mut BankState| {
            let subarray = bank.next_refresh_row / rows_per_subarray;
            bank.refresh = Some(RefreshWindow {
                kind: cmd.kind,
                start: t,
                until: t + cmd.kind.refresh_duration(params),
                subarrays: 1u64 << subarray,
            });
            bank.next_refresh_row = (bank.next_refresh_row + params.rows_per_refresh) % rows_per_bank;
        };
        match cmd.kind {
            CommandKind::Act => {
                rank.last_act = Some(t);
                let bank = &mut rank.banks[cmd.target.bank as usize];
                bank.act_penalized = params.t_sarp_penalty > 0
                    && bank
                        .refresh
                        .is_some_and(|w| w.kind.is_subarray_refresh() && w.active_at(t));
                bank.open_row = Some(cmd.target.row);
                bank.last_act = Some(t);
            }
            CommandKind::Rd => {
                rank.banks[cmd.target.bank as usize].last_rd = Some(t);
                channel.last_rd = Some(t);
                channel.last_col = Some(t);
            }
            CommandKind::Wr => {
                rank.banks[cmd.target.bank as usize].last_wr = Some(t);
                channel.last_wr = Some(t);
                channel.last_col = Some(t);
            }
            CommandKind::Pre => {
                let bank = &mut rank.banks[cmd.target.bank as usize];
                bank.open_row = None;
                bank.last_pre = Some(t);
            }
            CommandKind::RefPb | CommandKind::RefSarp => {
                advance(&mut rank.banks[cmd.target.bank as usize]);
            }
            CommandKind::RefAb | CommandKind::RefSarpAb => {
                rank.banks.iter_mut().for_each(advance);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dram::params::Density;

    fn setup() -> (Geometry, TimingParams, Device) {
        let geometry = Geometry::new(1, 1, 8, 8, 64, 128, 64);
        let mut params = TimingParams::ddr3_1600(Density::Gb8, &geometry);
        params.t_rfc_pb = 90;
        let device = Device::new(&geometry);
        (geometry, params, device)
    }

    fn cmd(kind: CommandKind, addr: DramAddress, cycle: Cycle) -> Command {
        Command::new(kind, addr, cycle)
    }

    #[test]
    fn act_on_fresh_bank_is_unconstrained() {
        let (g, p, d) = setup();
        let a = g.address(0, 0, 0, 5, 0);
        assert_eq!(earliest_issue_cycle(&cmd(CommandKind::Act, a, 0), &d, &p).unwrap(), (0, None));
    }

    #[test]
    fn read_waits_for_rcd() {
        let (g, p, mut d) = setup();
        let a = g.address(0, 0, 0, 5, 0);
        d.apply(&cmd(CommandKind::Act, a, 0), &p).unwrap();
        let (earliest, binding) = d.earliest_issue(CommandKind::Rd, &a, 1, &p).unwrap();
        assert_eq!(earliest, 11);
        assert_eq!(binding, Some(Constraint::TRcd));
        let err = d.apply(&cmd(CommandKind::Rd, a, 2), &p).unwrap_err();
        assert_eq!(err.constraint_name(), "tRCD");
        assert_eq!(d.apply(&cmd(CommandKind::Rd, a, 11), &p).unwrap(), Some(11 + 11 + 4));
    }

    #[test]
    fn read_after_write_waits_for_turnaround() {
        let (g, p, mut d) = setup();
        let a = g.address(0, 0, 0, 5, 0);
        let b = g.address(0, 0, 1, 7, 0);
        d.apply(&cmd(CommandKind::Act, a, 0), &p).unwrap();
        d.apply(&cmd(CommandKind::Act, b, 5), &p).unwrap();
        // WR at 88: data burst ends at 88 + CWL + BL = 100.
        d.apply(&cmd(CommandKind::Wr, a, 88), &p).unwrap();
        let (earliest, binding) = d.earliest_issue(CommandKind::Rd, &b, 89, &p).unwrap();
        assert_eq!(earliest, 100 + p.t_wtr);
        assert_eq!(binding, Some(Constraint::TWtr));
    }

    #[test]
    fn column_command_without_open_row_is_illegal() {
        let (g, p, d) = setup();
        let a = g.address(0, 0, 0, 5, 0);
        assert!(matches!(
            d.earliest_issue(CommandKind::Rd, &a, 0, &p),
            Err(TimingError::IllegalTransition { .. })
        ));
    }

    #[test]
    fn per_bank_refresh_leaves_other_banks_free() {
        let (g, p, mut d) = setup();
        let bank0 = g.address(0, 0, 0, 0, 0);
        d.apply(&cmd(CommandKind::RefPb, bank0, 0), &p).unwrap();
        assert_eq!(d.bank(0, 0, 0).busy_until(), 90);
        for b in 1..8 {
            assert_eq!(d.bank(0, 0, b).busy_until(), 0);
            let a = g.address(0, 0, b, 3, 0);
            assert_eq!(d.earliest_issue(CommandKind::Act, &a, 1, &p).unwrap().0, 1 + (b as u64 - 1) * p.t_rrd);
            d.apply(&cmd(CommandKind::Act, a, 1 + (b as u64 - 1) * p.t_rrd), &p).unwrap();
        }
        let (earliest, binding) = d.earliest_issue(CommandKind::Act, &g.address(0, 0, 0, 100, 0), 50, &p).unwrap();
        assert_eq!((earliest, binding), (90, Some(Constraint::TRfcPb)));
        assert_eq!(d.bank(0, 0, 0).next_refresh_row, 8);
    }

    #[test]
    fn all_bank_refresh_blocks_rank() {
        let (g, p, mut d) = setup();
        d.apply(&cmd(CommandKind::RefAb, g.address(0, 0, 0, 0, 0), 0), &p).unwrap();
        for b in 0..8 {
            assert_eq!(d.bank(0, 0, b).busy_until(), p.t_rfc_ab);
            assert_eq!(d.bank(0, 0, b).phase(10, &p), BankPhase::Refreshing);
            let (earliest, _) = d.earliest_issue(CommandKind::Act, &g.address(0, 0, b, 200, 0), 1, &p).unwrap();
            assert_eq!(earliest, p.t_rfc_ab);
        }
    }

    #[test]
    fn subarray_refresh_admits_other_subarrays() {
        let (g, p, mut d) = setup();
        // Rows 0..8 live in subarray 0.
        d.apply(&cmd(CommandKind::RefSarp, g.address(0, 0, 0, 0, 0), 0), &p).unwrap();
        assert_eq!(d.bank(0, 0, 0).refreshing_subarrays(5), 1);
        let other = g.address(0, 0, 0, 64, 0);
        assert_eq!(other.subarray, 1);
        d.apply(&cmd(CommandKind::Act, other, 5), &p).unwrap();
        let done = d.apply(&cmd(CommandKind::Rd, other, 16), &p).unwrap().unwrap();
        assert!(done < 90);
        assert_eq!(d.bank(0, 0, 0).phase(20, &p), BankPhase::RowOpen);
        d.apply(&cmd(CommandKind::Pre, other, 40), &p).unwrap();
        let same = g.address(0, 0, 0, 9, 0);
        let (earliest, binding) = d.earliest_issue(CommandKind::Act, &same, 60, &p).unwrap();
        assert_eq!((earliest, binding), (90, Some(Constraint::TRfcPb)));
    }

    #[test]
    fn subarray_refresh_with_open_row_elsewhere_is_legal() {
        let (g, p, mut d) = setup();
        let other = g.address(0, 0, 0, 64, 0);
        d.apply(&cmd(CommandKind::Act, other, 0), &p).unwrap();
        assert!(d.earliest_issue(CommandKind::RefPb, &other, 20, &p).is_err());
        assert_eq!(d.earliest_issue(CommandKind::RefSarp, &other, 20, &p).unwrap().0, 20);
    }

    #[test]
    fn sarp_penalty_stretches_rcd() {
        let (g, mut p, mut d) = setup();
        p.t_sarp_penalty = 3;
        d.apply(&cmd(CommandKind::RefSarp, g.address(0, 0, 0, 0, 0), 0), &p).unwrap();
        let other = g.address(0, 0, 0, 64, 0);
        d.apply(&cmd(CommandKind::Act, other, 5), &p).unwrap();
        assert_eq!(d.earliest_issue(CommandKind::Rd, &other, 6, &p).unwrap().0, 5 + 11 + 3);
    }

    #[test]
    fn apply_is_deterministic() {
        let (g, p, d0) = setup();
        let cmds = [
            cmd(CommandKind::Act, g.address(0, 0, 2, 3, 0), 0),
            cmd(CommandKind::Wr, g.address(0, 0, 2, 3, 1), 11),
            cmd(CommandKind::Pre, g.address(0, 0, 2, 3, 0), 40),
        ];
        let mut a = d0.clone();
        let mut b = d0;
        for c in &cmds {
            assert_eq!(a.apply(c, &p), b.apply(c, &p));
        }
        assert_eq!(a.bank(0, 0, 2), b.bank(0, 0, 2));
    }
}
