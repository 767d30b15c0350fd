//! Run statistics and the comparison quantities derived from them.

pub mod energy;
pub mod interference;
pub mod report;
pub mod speedup;
pub mod stats;

pub use energy::{refresh_energy, run_energy, EnergyParams};
pub use interference::{refresh_interference, Interference};
pub use report::{csv, emit_report, sort_rows, svg, write_report, ReportFormat, StatsRow, CSV_HEADER};
pub use speedup::{degradation, weighted_speedup, AloneBaseline, ConfigMismatch};
pub use stats::{CoreStats, RunStats};
