//! DRAM timing parameters, expressed in controller cycles.

use super::geometry::Geometry;
use crate::ConfigError;

/// Controller clock cycle index.
pub type Cycle = u64;

/// Device density. Higher densities refresh more rows per command, so the
/// refresh latency grows while the refresh interval stays fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Density {
    Gb8,
    Gb16,
    Gb32,
}

impl Density {
    pub const ALL: [Density; 3] = [Density::Gb8, Density::Gb16, Density::Gb32];

    pub fn gb(self) -> u32 {
        match self {
            Density::Gb8 => 8,
            Density::Gb16 => 16,
            Density::Gb32 => 32,
        }
    }

    pub fn from_gb(gb: u32) -> Option<Self> {
        match gb {
            8 => Some(Density::Gb8),
            16 => Some(Density::Gb16),
            32 => Some(Density::Gb32),
            _ => None,
        }
    }

    /// All-bank refresh latency (350/560/895 ns at 1.25 ns per cycle).
    pub fn t_rfc_ab(self) -> Cycle {
        match self {
            Density::Gb8 => 280,
            Density::Gb16 => 448,
            Density::Gb32 => 716,
        }
    }

    /// Per-bank refresh latency, `round(0.35 * tRFCab)`.
    pub fn t_rfc_pb(self) -> Cycle {
        (self.t_rfc_ab() * 35 + 50) / 100
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimingParams {
    pub clock_period_ps: u64,
    pub t_rcd: Cycle,
    pub t_rp: Cycle,
    pub t_ras: Cycle,
    pub t_rc: Cycle,
    pub cl: Cycle,
    pub cwl: Cycle,
    /// Data burst length on the bus.
    pub t_bl: Cycle,
    pub t_ccd: Cycle,
    pub t_rrd: Cycle,
    pub t_wtr: Cycle,
    pub t_rtw: Cycle,
    pub t_wr: Cycle,
    pub t_rtp: Cycle,
    pub t_rfc_ab: Cycle,
    pub t_rfc_pb: Cycle,
    /// Rank-level refresh interval. Every bank owes one refresh per `t_refi`.
    pub t_refi: Cycle,
    /// Spacing between consecutive per-bank refresh slots of a rank.
    pub t_refi_pb: Cycle,
    /// Retention window.
    pub t_refw: Cycle,
    pub rows_per_refresh: u32,
    /// Extra activation latency for an access that overlaps a subarray
    /// refresh in the same bank. Zero models conflict-free periphery.
    pub t_sarp_penalty: Cycle,
}

impl TimingParams {
    /// DDR3-1600-like defaults for the given density and geometry.
    pub fn ddr3_1600(density: Density, geometry: &Geometry) -> Self {
        let mut params = TimingParams {
            clock_period_ps: 1250,
            t_rcd: 11,
            t_rp: 11,
            t_ras: 28,
            t_rc: 39,
            cl: 11,
            cwl: 8,
            t_bl: 4,
            t_ccd: 4,
            t_rrd: 5,
            t_wtr: 6,
            t_rtw: 8,
            t_wr: 12,
            t_rtp: 6,
            t_rfc_ab: density.t_rfc_ab(),
            t_rfc_pb: density.t_rfc_pb(),
            t_refi: 6240,
            t_refi_pb: 0,
            t_refw: 0,
            rows_per_refresh: 8,
            t_sarp_penalty: 0,
        };
        params.derive_refresh_pacing(geometry);
        params
    }

    /// Recomputes `t_refi_pb` and `t_refw` from `t_refi` and the geometry.
    pub fn derive_refresh_pacing(&mut self, geometry: &Geometry) {
        self.t_refi_pb = self.t_refi / geometry.banks_per_rank as Cycle;
        self.t_refw = self.t_refi * self.refreshes_per_window(geometry);
    }

    /// Refresh commands each bank needs per retention window.
    pub fn refreshes_per_window(&self, geometry: &Geometry) -> Cycle {
        (geometry.rows_per_bank() / self.rows_per_refresh.max(1)) as Cycle
    }

    /// Cycle offset of bank `bank`'s refresh slot within each `t_refi`
    /// window. The integer-division remainder lands in the last slot.
    pub fn refresh_slot(&self, bank: usize, banks_per_rank: usize) -> Cycle {
        if bank + 1 == banks_per_rank {
            self.t_refi
        } else {
            (bank as Cycle + 1) * self.t_refi_pb
        }
    }

    pub fn read_latency(&self) -> Cycle {
        self.cl + self.t_bl
    }

    pub fn write_latency(&self) -> Cycle {
        self.cwl + self.t_bl
    }

    /// Largest distance over which one command can constrain another.
    pub fn max_constraint_span(&self) -> Cycle {
        [
            self.t_rfc_ab,
            self.t_rfc_pb,
            self.t_rc,
            self.t_ras,
            self.t_rcd + self.t_sarp_penalty,
            self.t_rp,
            self.t_ccd,
            self.t_rrd,
            self.t_rtw,
            self.t_rtp,
            self.cwl + self.t_bl + self.t_wr,
            self.cwl + self.t_bl + self.t_wtr,
        ]
        .into_iter()
        .max()
        .unwrap_or(1)
    }

    pub fn validate(&self, geometry: &Geometry) -> Result<(), ConfigError> {
        let positive = [
            ("clock_period_ps", self.clock_period_ps),
            ("t_rcd", self.t_rcd),
            ("t_rp", self.t_rp),
            ("t_ras", self.t_ras),
            ("t_rc", self.t_rc),
            ("cl", self.cl),
            ("cwl", self.cwl),
            ("t_bl", self.t_bl),
            ("t_ccd", self.t_ccd),
            ("t_rrd", self.t_rrd),
            ("t_wtr", self.t_wtr),
            ("t_rtw", self.t_rtw),
            ("t_wr", self.t_wr),
            ("t_rtp", self.t_rtp),
            ("t_rfc_ab", self.t_rfc_ab),
            ("t_rfc_pb", self.t_rfc_pb),
            ("t_refi", self.t_refi),
            ("t_refi_pb", self.t_refi_pb),
            ("t_refw", self.t_refw),
            ("rows_per_refresh", self.rows_per_refresh as u64),
        ];
        for (field, value) in positive {
            if value == 0 {
                return Err(ConfigError::invalid(field, "must be strictly positive"));
            }
        }
        if self.t_rfc_pb >= self.t_rfc_ab {
            return Err(ConfigError::invalid(
                "t_rfc_pb",
                "per-bank refresh latency must be below the all-bank latency",
            ));
        }
        if self.t_rc > self.t_ras + self.t_rp {
            return Err(ConfigError::invalid("t_rc", "must not exceed t_ras + t_rp"));
        }
        if self.t_ccd < self.t_bl {
            return Err(ConfigError::invalid("t_ccd", "must cover one data burst"));
        }
        let banks = geometry.banks_per_rank as Cycle;
        if self.t_refi_pb != self.t_refi / banks {
            return Err(ConfigError::invalid("t_refi_pb", "must equal t_refi / banks_per_rank"));
        }
        if geometry.rows_per_subarray % self.rows_per_refresh != 0 {
            return Err(ConfigError::invalid(
                "rows_per_refresh",
                "must divide rows_per_subarray",
            ));
        }
        let expected_refw = self.t_refi * self.refreshes_per_window(geometry);
        if self.t_refw.abs_diff(expected_refw) > 1 {
            return Err(ConfigError::invalid(
                "t_refw",
                "must equal t_refi * rows_per_bank / rows_per_refresh",
            ));
        }
        Ok(())
    }
}
