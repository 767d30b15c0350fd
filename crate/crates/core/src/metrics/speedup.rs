use thiserror::Error;

use super::stats::{CoreStats, RunStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("shared run has {shared} cores but {alone} alone runs were given")]
pub struct ConfigMismatch {
    pub shared: usize,
    pub alone: usize,
}

/// Which runs provide the per-core alone IPC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AloneBaseline {
    /// Each core alone under the no-refresh policy, shared by all policies.
    #[default]
    Ideal,
    /// Each core alone under the policy being measured.
    SamePolicy,
}

impl AloneBaseline {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ideal" => Some(AloneBaseline::Ideal),
            "same" | "same-policy" => Some(AloneBaseline::SamePolicy),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AloneBaseline::Ideal => "ideal",
            AloneBaseline::SamePolicy => "same",
        }
    }
}

/// Sum over cores of shared IPC over alone IPC. A core with zero alone IPC
/// contributes nothing.
pub fn weighted_speedup(shared: &RunStats, alone: &[CoreStats]) -> Result<f64, ConfigMismatch> {
    if shared.cores.len() != alone.len() {
        return Err(ConfigMismatch {
            shared: shared.cores.len(),
            alone: alone.len(),
        });
    }
    Ok(shared
        .cores
        .iter()
        .zip(alone)
        .map(|(s, a)| {
            let base = a.ipc();
            if base == 0.0 {
                0.0
            } else {
                s.ipc() / base
            }
        })
        .sum())
}

/// `1 - ws / reference`; zero when the reference is zero.
pub fn degradation(ws: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        0.0
    } else {
        1.0 - ws / reference
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refresh::PolicyKind;

    fn core(core: usize, instructions: u64, cycles: u64) -> CoreStats {
        CoreStats {
            core,
            instructions,
            cycles_to_finish: cycles,
            reads: 0,
            writes: 0,
            read_latency_sum: 0,
        }
    }

    fn run(cores: Vec<CoreStats>) -> RunStats {
        RunStats {
            policy: PolicyKind::Ideal,
            density_gb: 8,
            seed: 0,
            cores,
            reads: 0,
            read_latency_sum: 0,
            commands_by_kind: [0; 8],
            refresh_by_reason: [0; 5],
            active_refreshes_by_kind: [0; 8],
            blocked_cycles: Vec::new(),
            refresh_cycles: 0,
            overlap_cycles: 0,
            end_cycle: 0,
        }
    }

    #[test]
    fn self_comparison_is_core_count() {
        let r = run(vec![core(0, 100, 250), core(1, 80, 90), core(2, 5, 7)]);
        let ws = weighted_speedup(&r, &r.cores).unwrap();
        assert!((ws - 3.0).abs() < 1e-12);
        assert_eq!(degradation(ws, ws), 0.0);
    }

    #[test]
    fn two_core_hand_arithmetic() {
        // Shared IPCs 1000/4000 and 600/1200; alone 1000/2000 and 600/1000.
        let shared = run(vec![core(0, 1000, 4000), core(1, 600, 1200)]);
        let alone = vec![core(0, 1000, 2000), core(1, 600, 1000)];
        let ws = weighted_speedup(&shared, &alone).unwrap();
        assert!((ws - (0.5 + 5.0 / 6.0)).abs() < 1e-12);
        assert!((degradation(ws, 2.0) - (1.0 - ws / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn mismatched_core_counts() {
        let shared = run(vec![core(0, 1, 1)]);
        assert_eq!(
            weighted_speedup(&shared, &[]).unwrap_err(),
            ConfigMismatch { shared: 1, alone: 0 }
        );
    }
}
