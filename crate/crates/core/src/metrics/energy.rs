//! Normalized energy proxy.

use crate::dram::{CommandKind, Density, TimingParams};
use crate::ConfigError;

use super::stats::RunStats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub act: f64,
    pub rd_wr: f64,
    pub pre: f64,
    pub ref_pb: f64,
    pub ref_ab: f64,
    /// Per bank per cycle.
    pub background: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            act: 2.0,
            rd_wr: 1.5,
            pre: 1.0,
            ref_pb: 10.0,
            ref_ab: 60.0,
            background: 0.001,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("energy.act", self.act),
            ("energy.rdwr", self.rd_wr),
            ("energy.pre", self.pre),
            ("energy.refpb", self.ref_pb),
            ("energy.refab", self.ref_ab),
            ("energy.background", self.background),
        ];
        for (field, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(field, "must be a finite nonnegative number"));
            }
        }
        Ok(())
    }
}

/// Energy of a run in weight units. Refresh weights are given at 8 Gb and
/// scale with the refresh latency; background energy accrues over the
/// cycles any core was running.
pub fn run_energy(stats: &RunStats, weights: &EnergyParams, params: &TimingParams, banks: usize) -> f64 {
    let pb_scale = params.t_rfc_pb as f64 / Density::Gb8.t_rfc_pb() as f64;
    let ab_scale = params.t_rfc_ab as f64 / Density::Gb8.t_rfc_ab() as f64;
    let refreshes = |kind: CommandKind| stats.active_refreshes_by_kind[kind.index()] as f64;
    let demand = weights.act * stats.commands(CommandKind::Act) as f64
        + weights.rd_wr * (stats.commands(CommandKind::Rd) + stats.commands(CommandKind::Wr)) as f64
        + weights.pre * stats.commands(CommandKind::Pre) as f64;
    let refresh = weights.ref_pb * pb_scale * (refreshes(CommandKind::RefPb) + refreshes(CommandKind::RefSarp))
        + weights.ref_ab * ab_scale * (refreshes(CommandKind::RefAb) + refreshes(CommandKind::RefSarpAb));
    let background = weights.background * banks as f64 * stats.active_cycles() as f64;
    demand + refresh + background
}

/// Refresh share of [`run_energy`].
pub fn refresh_energy(stats: &RunStats, weights: &EnergyParams, params: &TimingParams) -> f64 {
    let without = EnergyParams {
        act: 0.0,
        rd_wr: 0.0,
        pre: 0.0,
        background: 0.0,
        ..*weights
    };
    run_energy(stats, &without, params, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dram::Geometry;
    use crate::metrics::stats::CoreStats;
    use crate::refresh::PolicyKind;

    fn stats(pb: u64, ab: u64) -> RunStats {
        let mut active = [0; 8];
        active[CommandKind::RefPb.index()] = pb;
        active[CommandKind::RefAb.index()] = ab;
        RunStats {
            policy: PolicyKind::RefAb,
            density_gb: 8,
            seed: 0,
            cores: vec![CoreStats {
                core: 0,
                instructions: 10,
                cycles_to_finish: 1000,
                reads: 0,
                writes: 0,
                read_latency_sum: 0,
            }],
            reads: 0,
            read_latency_sum: 0,
            commands_by_kind: [3, 2, 1, 4, 0, 0, 0, 0],
            refresh_by_reason: [0; 5],
            active_refreshes_by_kind: active,
            blocked_cycles: Vec::new(),
            refresh_cycles: 0,
            overlap_cycles: 0,
            end_cycle: 1000,
        }
    }

    #[test]
    fn hand_computed_total() {
        let g = Geometry::default();
        let p = TimingParams::ddr3_1600(Density::Gb8, &g);
        let e = run_energy(&stats(2, 1), &EnergyParams::default(), &p, 8);
        let expected = 3.0 * 2.0 + 1.5 * 3.0 + 4.0 * 1.0 + 2.0 * 10.0 + 60.0 + 0.001 * 8.0 * 1000.0;
        assert!((e - expected).abs() < 1e-9);
    }

    #[test]
    fn refresh_energy_grows_with_density() {
        let g = Geometry::default();
        let s = stats(5, 5);
        let w = EnergyParams::default();
        let e: Vec<f64> = Density::ALL
            .iter()
            .map(|&d| refresh_energy(&s, &w, &TimingParams::ddr3_1600(d, &g)))
            .collect();
        assert!(e[0] < e[1] && e[1] < e[2]);
    }

    #[test]
    fn negative_weights_rejected() {
        let w = EnergyParams { pre: -1.0, ..EnergyParams::default() };
        assert_eq!(w.validate().unwrap_err().field, "energy.pre");
    }
}
