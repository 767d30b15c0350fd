//! FR-FCFS command scheduling with refresh arbitration.

use thiserror::Error;

use crate::dram::{
    Command, CommandKind, Cycle, Device, DramAddress, Geometry, TimingError, TimingParams,
};
use crate::records::LogRecord;
use crate::refresh::{
    decide_darp_ooo, decide_darp_wrp, decide_round_robin, sarp_admit, Admission, BankView,
    LedgerError, Policy, Reason, RefreshAction, RefreshLedger,
};
use crate::workload::AccessKind;
use crate::ConfigError;

use super::request::MemRequest;
use super::write_buffer::{Mode, ModeChange, WriteBuffer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllerConfig {
    /// Per-bank read queue capacity.
    pub read_queue_capacity: usize,
    pub write_capacity: usize,
    pub high_watermark: usize,
    pub low_watermark: usize,
    pub credit_limit: u32,
    /// Idle cycles after which DARP may pull a refresh in; `None` disables
    /// pull-in. A pulled-in refresh locks the bank for tRFCpb, so a short
    /// idle stretch is a poor predictor that it will pay off. The default
    /// is one per-bank refresh interval.
    pub idle_pullin_threshold: Option<Cycle>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            read_queue_capacity: 32,
            write_capacity: 64,
            high_watermark: 48,
            low_watermark: 16,
            credit_limit: 8,
            idle_pullin_threshold: Some(780),
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.read_queue_capacity == 0 {
            return Err(ConfigError::invalid("read_queue", "must be positive"));
        }
        WriteBuffer::new(self.write_capacity, self.high_watermark, self.low_watermark).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EnqueueError {
    #[error("queue full")]
    Backpressure,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error(transparent)]
    Integrity(#[from] LedgerError),
    #[error("scheduler issued an illegal command: {0}")]
    Timing(#[from] TimingError),
}

/// Where the request served by a demand command lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestRef {
    Read { bank_slot: usize, index: usize },
    Write { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Demand(RequestRef),
    /// Precharge or refresh on behalf of the rank's pending refresh.
    Refresh { rank: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scheduled {
    pub cmd: Command,
    pub origin: Origin,
}

/// A refresh decision that stays in force until its command issues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingRefresh {
    pub slot: usize,
    pub kind: CommandKind,
    pub reason: Reason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ControllerCounters {
    pub commands_by_kind: [u64; 8],
    pub refresh_by_reason: [u64; 5],
    /// Per bank (dense over the whole device): cycles a queued read waited
    /// on a refresh of its bank or subarray outside writeback mode.
    pub blocked_cycles: Vec<u64>,
    /// Cycles of refresh activity (one per in-flight refresh command).
    pub refresh_cycles: u64,
    /// Refresh activity that coincided with writeback mode.
    pub overlap_cycles: u64,
    pub writeback_cycles: u64,
    pub reads_in_writeback: u64,
}

#[derive(Debug, Clone)]
struct RankCtl {
    ledger: Option<RefreshLedger>,
    pending: Option<PendingRefresh>,
}

#[derive(Debug, Clone)]
struct ChannelCtl {
    reads: Vec<Vec<MemRequest>>,
    read_count: usize,
    writes: WriteBuffer,
    writes_per_bank: Vec<u32>,
    idle_since: Vec<Option<Cycle>>,
    ranks: Vec<RankCtl>,
    /// End cycles of in-flight refresh commands.
    active_refresh: Vec<Cycle>,
    /// No demand command can issue before this cycle unless state changes.
    demand_wake: Cycle,
}

#[derive(Debug, Clone)]
pub struct Controller {
    geometry: Geometry,
    params: TimingParams,
    policy: Policy,
    config: ControllerConfig,
    pub device: Device,
    channels: Vec<ChannelCtl>,
    log: Vec<LogRecord>,
    pub counters: ControllerCounters,
    views: Vec<BankView>,
}

impl Controller {
    pub fn new(
        geometry: &Geometry,
        params: &TimingParams,
        policy: Policy,
        config: &ControllerConfig,
    ) -> Result<Self, ConfigError> {
        geometry.validate()?;
        params.validate(geometry)?;
        config.validate()?;
        if geometry.banks_per_channel() > 64 {
            return Err(ConfigError::invalid("banks_per_rank", "at most 64 banks per channel"));
        }
        let per_channel = geometry.banks_per_channel();
        let rank = RankCtl {
            ledger: policy
                .granularity()
                .map(|g| RefreshLedger::new(g, geometry, params, config.credit_limit)),
            pending: None,
        };
        let channel = ChannelCtl {
            reads: vec![Vec::new(); per_channel],
            read_count: 0,
            writes: WriteBuffer::new(config.write_capacity, config.high_watermark, config.low_watermark)?,
            writes_per_bank: vec![0; per_channel],
            idle_since: vec![Some(0); per_channel],
            ranks: vec![rank; geometry.ranks_per_channel as usize],
            active_refresh: Vec::new(),
            demand_wake: 0,
        };
        Ok(Controller {
            geometry: geometry.clone(),
            params: params.clone(),
            policy,
            config: config.clone(),
            device: Device::new(geometry),
            channels: vec![channel; geometry.channels as usize],
            log: Vec::new(),
            counters: ControllerCounters {
                blocked_cycles: vec![0; geometry.banks_total()],
                ..ControllerCounters::default()
            },
            views: vec![BankView::default(); geometry.banks_per_rank as usize],
        })
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn into_log(self) -> (Vec<LogRecord>, ControllerCounters) {
        (self.log, self.counters)
    }

    pub fn mode(&self, channel: u32) -> Mode {
        self.channels[channel as usize].writes.mode()
    }

    pub fn write_occupancy(&self, channel: u32) -> usize {
        self.channels[channel as usize].writes.occupancy()
    }

    pub fn queued_reads(&self, channel: u32) -> usize {
        self.channels[channel as usize].read_count
    }

    pub fn ledger(&self, channel: u32, rank: u32) -> Option<&RefreshLedger> {
        self.channels[channel as usize].ranks[rank as usize].ledger.as_ref()
    }

    pub fn pending_refresh(&self, channel: u32, rank: u32) -> Option<PendingRefresh> {
        self.channels[channel as usize].ranks[rank as usize].pending
    }

    /// No request is queued anywhere.
    pub fn is_drained(&self) -> bool {
        self.channels
            .iter()
            .all(|c| c.read_count == 0 && c.writes.occupancy() == 0)
    }

    fn dense_bank(&self, addr: &DramAddress) -> usize {
        addr.channel as usize * self.geometry.banks_per_channel() + self.geometry.bank_slot(addr)
    }

    fn log_mode(&mut self, channel: u32, cycle: Cycle, change: ModeChange) {
        self.log.push(LogRecord::Writeback {
            cycle,
            channel,
            start: change.to == Mode::WritebackMode,
            reason: change.reason,
        });
        self.channels[channel as usize].demand_wake = 0;
    }

    pub fn enqueue(&mut self, request: MemRequest) -> Result<(), EnqueueError> {
        let ch = request.address.channel as usize;
        let slot = self.geometry.bank_slot(&request.address);
        let read_cap = self.config.read_queue_capacity;
        let c = &mut self.channels[ch];
        match request.kind {
            AccessKind::Read => {
                if c.reads[slot].len() >= read_cap {
                    return Err(EnqueueError::Backpressure);
                }
                c.reads[slot].push(request);
                c.read_count += 1;
                c.idle_since[slot] = None;
                c.demand_wake = 0;
            }
            AccessKind::Write => {
                if c.writes.is_full() {
                    return Err(EnqueueError::Backpressure);
                }
                c.writes_per_bank[slot] += 1;
                c.demand_wake = 0;
                if let Some(change) = c.writes.push(request) {
                    self.log_mode(ch as u32, request.arrival, change);
                }
            }
        }
        Ok(())
    }

    /// Whether the rank's pending refresh holds demand off `addr`.
    fn suppressed(&self, c: &ChannelCtl, addr: &DramAddress) -> bool {
        let Some(p) = c.ranks[addr.rank as usize].pending else {
            return false;
        };
        let refreshing = |bank: u32| self.device.next_refresh_subarray(addr.channel, addr.rank, bank);
        match p.kind {
            CommandKind::RefAb => true,
            CommandKind::RefPb => addr.bank as usize == p.slot,
            CommandKind::RefSarp => addr.bank as usize == p.slot && addr.subarray == refreshing(addr.bank),
            CommandKind::RefSarpAb => addr.subarray == refreshing(addr.bank),
            _ => false,
        }
    }

    /// Next command for the rank's pending refresh: a precharge of a
    /// conflicting open row, then the refresh itself.
    fn refresh_command(&self, channel: u32, rank: u32, p: &PendingRefresh, cycle: Cycle) -> Option<Command> {
        let banks = if p.kind.is_rank_refresh() {
            0..self.geometry.banks_per_rank
        } else {
            p.slot as u32..p.slot as u32 + 1
        };
        let mut waiting = false;
        for b in banks {
            let bank = self.device.bank(channel, rank, b);
            let Some(row) = bank.open_row else { continue };
            let conflicts = !p.kind.is_subarray_refresh()
                || self.geometry.subarray_of(row) == self.device.next_refresh_subarray(channel, rank, b);
            if !conflicts {
                continue;
            }
            waiting = true;
            let addr = self.geometry.address(channel, rank, b, row, 0);
            if let Ok((earliest, _)) = self.device.earliest_issue(CommandKind::Pre, &addr, cycle, &self.params) {
                if earliest <= cycle {
                    return Some(Command::new(CommandKind::Pre, addr, cycle));
                }
            }
        }
        if waiting {
            return None;
        }
        let bank = if p.kind.is_rank_refresh() { 0 } else { p.slot as u32 };
        let row = self.device.bank(channel, rank, bank).next_refresh_row;
        let target = self.geometry.address(channel, rank, bank, row, 0);
        match self.device.earliest_issue(p.kind, &target, cycle, &self.params) {
            Ok((earliest, _)) if earliest <= cycle => Some(Command::new(p.kind, target, cycle)),
            _ => None,
        }
    }

    /// FR-FCFS over the active stream. Returns the chosen command and the
    /// earliest cycle any blocked candidate could become ready.
    fn select_demand(&self, channel: u32, cycle: Cycle) -> (Option<Scheduled>, Cycle) {
        let c = &self.channels[channel as usize];
        let writeback = c.writes.mode() == Mode::WritebackMode;
        let banks_per_rank = self.geometry.banks_per_rank;

        let open_row = |addr: &DramAddress| self.device.bank(addr.channel, addr.rank, addr.bank).open_row;
        let mut hits: u64 = 0;
        let mut mark = |req: &MemRequest| {
            if open_row(&req.address) == Some(req.address.row) && !self.suppressed(c, &req.address) {
                hits |= 1u64 << self.geometry.bank_slot(&req.address);
            }
        };
        if writeback {
            c.writes.entries().iter().for_each(&mut mark);
        } else {
            c.reads.iter().flatten().for_each(&mut mark);
        }

        let mut best_col: Option<(u64, Scheduled)> = None;
        let mut best_row: Option<(u64, Scheduled)> = None;
        let mut wake = Cycle::MAX;
        let mut consider = |req: &MemRequest, rref: RequestRef| {
            let addr = req.address;
            if self.suppressed(c, &addr) {
                return;
            }
            let (kind, target) = match open_row(&addr) {
                Some(row) if row == addr.row => (
                    if req.is_read() { CommandKind::Rd } else { CommandKind::Wr },
                    addr,
                ),
                Some(row) => {
                    let slot = addr.rank * banks_per_rank + addr.bank;
                    if hits & (1u64 << slot) != 0 {
                        return;
                    }
                    (CommandKind::Pre, self.geometry.address(addr.channel, addr.rank, addr.bank, row, 0))
                }
                None => (CommandKind::Act, addr),
            };
            // Once anything is issuable the wake cycle no longer matters.
            if best_col.is_some() && !kind.is_column() {
                return;
            }
            let best = if kind.is_column() { &mut best_col } else { &mut best_row };
            if best.as_ref().is_some_and(|(id, _)| *id < req.id) {
                return;
            }
            let Ok((earliest, _)) = self.device.earliest_issue(kind, &target, cycle, &self.params) else {
                return;
            };
            if earliest > cycle {
                wake = wake.min(earliest);
                return;
            }
            if best.as_ref().map_or(true, |(id, _)| req.id < *id) {
                *best = Some((
                    req.id,
                    Scheduled {
                        cmd: Command::new(kind, target, cycle),
                        origin: Origin::Demand(rref),
                    },
                ));
            }
        };
        if writeback {
            for (index, req) in c.writes.entries().iter().enumerate() {
                consider(req, RequestRef::Write { index });
            }
        } else {
            for (bank_slot, queue) in c.reads.iter().enumerate() {
                for (index, req) in queue.iter().enumerate() {
                    consider(req, RequestRef::Read { bank_slot, index });
                }
            }
        }
        (best_col.or(best_row).map(|(_, s)| s), wake)
    }

    /// The command that would issue on `channel` at `cycle`. Pure.
    pub fn select_next_command(&self, channel: u32, cycle: Cycle) -> Option<Scheduled> {
        let c = &self.channels[channel as usize];
        for (rank, r) in c.ranks.iter().enumerate() {
            if let Some(p) = &r.pending {
                if let Some(cmd) = self.refresh_command(channel, rank as u32, p, cycle) {
                    return Some(Scheduled {
                        cmd,
                        origin: Origin::Refresh { rank: rank as u32 },
                    });
                }
            }
        }
        self.select_demand(channel, cycle).0
    }

    fn bank_views(&mut self, channel: u32, rank: u32, cycle: Cycle) {
        let c = &self.channels[channel as usize];
        let base = (rank * self.geometry.banks_per_rank) as usize;
        for (b, view) in self.views.iter_mut().enumerate() {
            let slot = base + b;
            *view = BankView {
                pending_reads: c.reads[slot].len() as u32,
                pending_writes: c.writes_per_bank[slot],
                idle_since: c.idle_since[slot],
                refreshing: self.device.bank(channel, rank, b as u32).refresh_at(cycle).is_some(),
            };
        }
    }

    fn decide_refreshes(&mut self, channel: u32, cycle: Cycle) -> Result<(), StepError> {
        let Some(kind) = self.policy.refresh_kind() else {
            return Ok(());
        };
        for rank in 0..self.geometry.ranks_per_channel {
            let r = &mut self.channels[channel as usize].ranks[rank as usize];
            let Some(ledger) = r.ledger.as_mut() else { continue };
            ledger.tick_intervals(cycle)?;
            if r.pending.is_some() {
                continue;
            }
            let decision = if self.policy.uses_darp() {
                self.bank_views(channel, rank, cycle);
                let c = &self.channels[channel as usize];
                let ledger = c.ranks[rank as usize].ledger.as_ref().unwrap();
                if c.writes.mode() == Mode::WritebackMode {
                    decide_darp_wrp(ledger, &self.views, cycle, kind)
                } else {
                    decide_darp_ooo(ledger, &self.views, cycle, self.config.idle_pullin_threshold, kind)
                }
            } else {
                decide_round_robin(ledger, kind)
            };
            if let (RefreshAction::Issue { slot, kind }, Some(reason)) = (decision.action, decision.reason) {
                let c = &mut self.channels[channel as usize];
                c.ranks[rank as usize].pending = Some(PendingRefresh { slot, kind, reason });
                c.demand_wake = 0;
            }
        }
        Ok(())
    }

    fn issue(&mut self, channel: u32, s: Scheduled, cycle: Cycle) -> Result<Option<MemRequest>, StepError> {
        let done = self.device.apply(&s.cmd, &self.params)?;
        self.counters.commands_by_kind[s.cmd.kind.index()] += 1;
        let ch = channel as usize;
        self.channels[ch].demand_wake = 0;
        match s.origin {
            Origin::Refresh { rank } => {
                let mut reason = None;
                if s.cmd.kind.is_refresh() {
                    let c = &mut self.channels[ch];
                    let r = &mut c.ranks[rank as usize];
                    let p = r.pending.take().expect("refresh without a pending decision");
                    r.ledger
                        .as_mut()
                        .expect("refresh without a ledger")
                        .record_refresh(p.slot, cycle)?;
                    c.active_refresh.push(cycle + s.cmd.kind.refresh_duration(&self.params));
                    self.counters.refresh_by_reason[p.reason.index()] += 1;
                    reason = Some(p.reason);
                }
                self.log.push(LogRecord::Command { cmd: s.cmd, reason });
                Ok(None)
            }
            Origin::Demand(rref) => {
                self.log.push(LogRecord::Command { cmd: s.cmd, reason: None });
                let c = &mut self.channels[ch];
                let req = match rref {
                    RequestRef::Read { bank_slot, index } => &mut c.reads[bank_slot][index],
                    RequestRef::Write { index } => c.writes.entry_mut(index),
                };
                req.first_issue.get_or_insert(cycle);
                let Some(completion) = done else {
                    return Ok(None);
                };
                let mut req = match rref {
                    RequestRef::Read { bank_slot, index } => {
                        if c.writes.mode() == Mode::WritebackMode {
                            self.counters.reads_in_writeback += 1;
                        }
                        let req = c.reads[bank_slot].remove(index);
                        c.read_count -= 1;
                        if c.reads[bank_slot].is_empty() {
                            c.idle_since[bank_slot] = Some(cycle);
                        }
                        req
                    }
                    RequestRef::Write { index } => {
                        let req = c.writes.remove(index);
                        c.writes_per_bank[self.geometry.bank_slot(&req.address)] -= 1;
                        req
                    }
                };
                req.completion = Some(completion);
                Ok(Some(req))
            }
        }
    }

    fn tally(&mut self, channel: u32, cycle: Cycle) {
        let ch = channel as usize;
        let writeback = self.channels[ch].writes.mode() == Mode::WritebackMode;
        let c = &mut self.channels[ch];
        c.active_refresh.retain(|&until| until > cycle);
        let active = c.active_refresh.len() as u64;
        self.counters.refresh_cycles += active;
        if writeback {
            self.counters.writeback_cycles += 1;
            self.counters.overlap_cycles += active;
            return;
        }
        if active == 0 {
            return;
        }
        let c = &self.channels[ch];
        for queue in &c.reads {
            for req in queue {
                let a = &req.address;
                let bank = self.device.bank(a.channel, a.rank, a.bank);
                if let Admission::Block { .. } = sarp_admit(a.subarray, bank, &self.policy, cycle) {
                    let dense = self.dense_bank(a);
                    self.counters.blocked_cycles[dense] += 1;
                }
            }
        }
    }

    /// Advances one cycle: mode hysteresis, refresh bookkeeping and at most
    /// one command per channel. `traces_done` allows the final write flush.
    /// Returns requests whose data transfer was scheduled this cycle.
    pub fn step(&mut self, cycle: Cycle, traces_done: bool) -> Result<Vec<MemRequest>, StepError> {
        let mut issued = Vec::new();
        for channel in 0..self.geometry.channels {
            let ch = channel as usize;
            let flush = traces_done && self.channels[ch].read_count == 0;
            if let Some(change) = self.channels[ch].writes.evaluate(flush) {
                self.log_mode(channel, cycle, change);
            }
            self.decide_refreshes(channel, cycle)?;
            let mut chosen = None;
            for (rank, r) in self.channels[ch].ranks.iter().enumerate() {
                if let Some(p) = &r.pending {
                    if let Some(cmd) = self.refresh_command(channel, rank as u32, p, cycle) {
                        chosen = Some(Scheduled {
                            cmd,
                            origin: Origin::Refresh { rank: rank as u32 },
                        });
                        break;
                    }
                }
            }
            if chosen.is_none() && cycle >= self.channels[ch].demand_wake {
                let (s, wake) = self.select_demand(channel, cycle);
                if s.is_none() {
                    self.channels[ch].demand_wake = wake;
                }
                chosen = s;
            }
            if let Some(s) = chosen {
                if let Some(req) = self.issue(channel, s, cycle)? {
                    issued.push(req);
                }
            }
            self.tally(channel, cycle);
        }
        Ok(issued)
    }
}
