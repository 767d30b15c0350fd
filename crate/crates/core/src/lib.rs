//! Trace-driven DRAM memory-subsystem simulator for comparing refresh
//! scheduling policies: all-bank refresh, round-robin per-bank refresh,
//! out-of-order per-bank refresh with write-refresh parallelization
//! (DARP), subarray-level access/refresh overlap (SARP), and their
//! combination (DSARP).
//!
//! The crate is organized bottom-up:
//!
//! * [`dram`]: timing parameters, geometry, device state and the two
//!   independent legality checkers (incremental and post-hoc).
//! * [`refresh`]: refresh obligations, the policy decision functions and
//!   the retention-coverage auditor.
//! * [`controller`]: request queues, write buffer, FR-FCFS scheduling.
//! * [`workload`]: trace parsing, synthetic generation and the core model.
//! * [`sim`]: the cycle loop tying cores to the controller.
//! * [`metrics`]: weighted speedup, interference, energy, reports.
//! * [`config`] / [`experiment`]: run configuration, runs, sweeps, audits.

pub mod config;
pub mod controller;
pub mod dram;
pub mod experiment;
pub mod metrics;
pub mod records;
pub mod refresh;
pub mod sim;
pub mod workload;

use thiserror::Error;

/// A configuration value failed validation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}
