//! Closed-loop core model.
//!
//! A core spends `think_gap` cycles computing, then spends one cycle
//! emitting its next access. Reads hold an outstanding slot until their
//! data returns; writes are fire-and-forget.

use crate::dram::Cycle;

use super::trace::{AccessKind, TraceEntry};

#[derive(Debug, Clone)]
pub struct CoreModel {
    pub core_id: usize,
    pub max_outstanding_reads: usize,
    trace: Vec<TraceEntry>,
    cursor: usize,
    ready_at: Cycle,
    outstanding: usize,
    last_arrival: Option<Cycle>,
    last_read_done: Option<Cycle>,
    instructions: u64,
}

impl CoreModel {
    pub fn new(core_id: usize, max_outstanding_reads: usize, trace: Vec<TraceEntry>) -> Self {
        let ready_at = trace.first().map_or(0, |e| e.think_gap);
        let instructions = trace.iter().map(|e| e.think_gap + 1).sum();
        CoreModel {
            core_id,
            max_outstanding_reads: max_outstanding_reads.max(1),
            trace,
            cursor: 0,
            ready_at,
            outstanding: 0,
            last_arrival: None,
            last_read_done: None,
            instructions,
        }
    }

    /// The access the core would emit at `cycle`, if any. Stalls while the
    /// next access is a read and every outstanding slot is taken.
    pub fn core_step(&self, cycle: Cycle) -> Option<TraceEntry> {
        let entry = *self.trace.get(self.cursor)?;
        if cycle < self.ready_at {
            return None;
        }
        if entry.kind == AccessKind::Read && self.outstanding >= self.max_outstanding_reads {
            return None;
        }
        Some(entry)
    }

    /// Earliest cycle the core could emit, ignoring outstanding slots.
    pub fn ready_at(&self) -> Option<Cycle> {
        (self.cursor < self.trace.len()).then_some(self.ready_at)
    }

    /// The access returned by [`CoreModel::core_step`] was accepted.
    pub fn emitted(&mut self, cycle: Cycle) {
        let entry = self.trace[self.cursor];
        if entry.kind == AccessKind::Read {
            self.outstanding += 1;
            assert!(self.outstanding <= self.max_outstanding_reads);
        }
        self.cursor += 1;
        self.last_arrival = Some(cycle);
        if let Some(next) = self.trace.get(self.cursor) {
            self.ready_at = cycle + 1 + next.think_gap;
        }
    }

    pub fn read_completed(&mut self, cycle: Cycle) {
        debug_assert!(self.outstanding > 0);
        self.outstanding -= 1;
        self.last_read_done = Some(self.last_read_done.map_or(cycle, |c| c.max(cycle)));
    }

    pub fn outstanding_reads(&self) -> usize {
        self.outstanding
    }

    pub fn trace_exhausted(&self) -> bool {
        self.cursor >= self.trace.len()
    }

    pub fn finished(&self) -> bool {
        self.trace_exhausted() && self.outstanding == 0
    }

    /// Think gaps plus one instruction per access.
    pub fn instructions(&self) -> u64 {
        self.instructions
    }

    pub fn cycles_to_finish(&self) -> Cycle {
        match (self.last_arrival, self.last_read_done) {
            (None, None) => 0,
            (a, r) => a.unwrap_or(0).max(r.unwrap_or(0)) + 1,
        }
    }
}
