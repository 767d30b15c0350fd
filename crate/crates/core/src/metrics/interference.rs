//! Refresh interference recomputed from the logs alone.

use crate::dram::{Cycle, Geometry, TimingParams};
use crate::records::{writeback_windows, CompletionRecord, LogRecord};
use crate::workload::AccessKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interference {
    /// Dense over every bank of the device.
    pub blocked_per_bank: Vec<u64>,
    pub refresh_cycles: u64,
    pub overlap_cycles: u64,
}

impl Interference {
    pub fn blocked_total(&self) -> u64 {
        self.blocked_per_bank.iter().sum()
    }

    pub fn overlap_ratio(&self) -> f64 {
        if self.refresh_cycles == 0 {
            0.0
        } else {
            self.overlap_cycles as f64 / self.refresh_cycles as f64
        }
    }
}

fn overlap(a: (Cycle, Cycle), b: (Cycle, Cycle)) -> u64 {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    hi.saturating_sub(lo)
}

/// Cycles of `span` covered by the sorted, disjoint `windows`.
fn covered(span: (Cycle, Cycle), windows: &[(Cycle, Cycle)]) -> u64 {
    let first = windows.partition_point(|w| w.1 <= span.0);
    windows[first..]
        .iter()
        .take_while(|w| w.0 < span.1)
        .map(|&w| overlap(span, w))
        .sum()
}

#[derive(Debug, Clone, Copy)]
struct RefreshSpan {
    start: Cycle,
    end: Cycle,
    /// `None` locks the whole bank.
    subarray: Option<u32>,
}

/// Blocked-read cycles per bank and refresh/writeback overlap.
///
/// A read counts as blocked over `[arrival, RD issue)` wherever a refresh
/// locks its bank or subarray, outside writeback windows. The RD issue
/// cycle is recovered as `completion - CL - tBL`.
pub fn refresh_interference(
    log: &[LogRecord],
    completions: &[CompletionRecord],
    geometry: &Geometry,
    params: &TimingParams,
    end_cycle: Cycle,
) -> Interference {
    let windows = writeback_windows(log, geometry.channels, end_cycle);
    let per_channel = geometry.banks_per_channel();
    let mut spans: Vec<Vec<RefreshSpan>> = vec![Vec::new(); geometry.banks_total()];
    let mut refresh_cycles = 0;
    let mut overlap_cycles = 0;
    for r in log {
        let LogRecord::Command { cmd, .. } = r else { continue };
        if !cmd.kind.is_refresh() {
            continue;
        }
        let start = cmd.cycle.min(end_cycle);
        let end = (cmd.cycle + cmd.kind.refresh_duration(params)).min(end_cycle);
        let t = &cmd.target;
        refresh_cycles += end - start;
        overlap_cycles += covered((start, end), &windows[t.channel as usize]);
        let subarray = cmd.kind.is_subarray_refresh().then_some(t.subarray);
        let banks = if cmd.kind.is_rank_refresh() {
            0..geometry.banks_per_rank
        } else {
            t.bank..t.bank + 1
        };
        for b in banks {
            let dense = t.channel as usize * per_channel + (t.rank * geometry.banks_per_rank + b) as usize;
            spans[dense].push(RefreshSpan { start, end, subarray });
        }
    }

    let mut blocked_per_bank = vec![0u64; geometry.banks_total()];
    let read_latency = params.cl + params.t_bl;
    for c in completions.iter().filter(|c| c.kind == AccessKind::Read) {
        let a = &c.address;
        let dense = a.channel as usize * per_channel + geometry.bank_slot(a);
        let waiting = (c.arrival, c.completion.saturating_sub(read_latency));
        let bank_spans = &spans[dense];
        let first = bank_spans.partition_point(|s| s.end <= waiting.0);
        for s in bank_spans[first..].iter().take_while(|s| s.start < waiting.1) {
            if s.subarray.is_some_and(|sa| sa != a.subarray) {
                continue;
            }
            let lo = s.start.max(waiting.0);
            let hi = s.end.min(waiting.1);
            if hi <= lo {
                continue;
            }
            blocked_per_bank[dense] += (hi - lo) - covered((lo, hi), &windows[a.channel as usize]);
        }
    }
    Interference {
        blocked_per_bank,
        refresh_cycles,
        overlap_cycles,
    }
}
