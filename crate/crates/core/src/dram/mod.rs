//! DRAM device model: timing parameters, geometry, per-bank state and the
//! legality checkers.

pub mod audit;
pub mod command;
pub mod device;
pub mod geometry;
pub mod params;

pub use audit::{audit_command_log, AuditOutcome, Violation};
pub use command::{Command, CommandKind, Constraint};
pub use device::{apply_command, earliest_issue_cycle, BankPhase, BankState, Device, RefreshWindow, TimingError};
pub use geometry::{AddressError, DramAddress, Geometry, Level};
pub use params::{Cycle, Density, TimingParams};
