use crate::dram::{CommandKind, Cycle};
use crate::records::LogRecord;
use crate::refresh::PolicyKind;
use crate::sim::RunOutput;
use crate::workload::AccessKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreStats {
    pub core: usize,
    /// Think gaps plus one per access.
    pub instructions: u64,
    pub cycles_to_finish: Cycle,
    pub reads: u64,
    pub writes: u64,
    pub read_latency_sum: u64,
}

impl CoreStats {
    /// Instructions per cycle; zero for a core that never ran.
    pub fn ipc(&self) -> f64 {
        if self.cycles_to_finish == 0 {
            0.0
        } else {
            self.instructions as f64 / self.cycles_to_finish as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub policy: PolicyKind,
    pub density_gb: u32,
    pub seed: u64,
    pub cores: Vec<CoreStats>,
    pub reads: u64,
    pub read_latency_sum: u64,
    pub commands_by_kind: [u64; 8],
    pub refresh_by_reason: [u64; 5],
    /// Refresh commands by kind issued while any core was still running.
    pub active_refreshes_by_kind: [u64; 8],
    pub blocked_cycles: Vec<u64>,
    pub refresh_cycles: u64,
    pub overlap_cycles: u64,
    pub end_cycle: Cycle,
}

impl RunStats {
    pub fn from_run(policy: PolicyKind, density_gb: u32, seed: u64, out: &RunOutput) -> Self {
        let mut cores: Vec<CoreStats> = out
            .cores
            .iter()
            .enumerate()
            .map(|(core, c)| CoreStats {
                core,
                instructions: c.instructions,
                cycles_to_finish: c.cycles_to_finish,
                reads: 0,
                writes: 0,
                read_latency_sum: 0,
            })
            .collect();
        for c in &out.completions {
            let s = &mut cores[c.core];
            match c.kind {
                AccessKind::Read => {
                    s.reads += 1;
                    s.read_latency_sum += c.completion - c.arrival;
                }
                AccessKind::Write => s.writes += 1,
            }
        }
        let active_end = cores.iter().map(|c| c.cycles_to_finish).max().unwrap_or(0);
        let mut active_refreshes_by_kind = [0u64; 8];
        for r in &out.log {
            if let LogRecord::Command { cmd, .. } = r {
                if cmd.kind.is_refresh() && cmd.cycle < active_end {
                    active_refreshes_by_kind[cmd.kind.index()] += 1;
                }
            }
        }
        RunStats {
            policy,
            density_gb,
            seed,
            reads: cores.iter().map(|c| c.reads).sum(),
            read_latency_sum: cores.iter().map(|c| c.read_latency_sum).sum(),
            cores,
            commands_by_kind: out.counters.commands_by_kind,
            refresh_by_reason: out.counters.refresh_by_reason,
            active_refreshes_by_kind,
            blocked_cycles: out.counters.blocked_cycles.clone(),
            refresh_cycles: out.counters.refresh_cycles,
            overlap_cycles: out.counters.overlap_cycles,
            end_cycle: out.end_cycle,
        }
    }

    pub fn mean_read_latency(&self) -> f64 {
        if self.reads == 0 {
            0.0
        } else {
            self.read_latency_sum as f64 / self.reads as f64
        }
    }

    pub fn refresh_blocked_cycles(&self) -> u64 {
        self.blocked_cycles.iter().sum()
    }

    pub fn overlap_ratio(&self) -> f64 {
        if self.refresh_cycles == 0 {
            0.0
        } else {
            self.overlap_cycles as f64 / self.refresh_cycles as f64
        }
    }

    pub fn commands(&self, kind: CommandKind) -> u64 {
        self.commands_by_kind[kind.index()]
    }

    /// Latest finishing core.
    pub fn active_cycles(&self) -> Cycle {
        self.cores.iter().map(|c| c.cycles_to_finish).max().unwrap_or(0)
    }
}
