//! Refresh obligations, refresh policies and the coverage auditor.

pub mod coverage;
pub mod ledger;
pub mod policy;

pub use coverage::{audit_refresh_coverage, CoverageOutcome, CoverageSpec, CoverageViolation};
pub use ledger::{Granularity, LedgerError, RefreshLedger};
pub use policy::{
    decide_darp_ooo, decide_darp_wrp, decide_round_robin, sarp_admit, Admission, BankView, Policy,
    PolicyKind, Reason, RefreshAction, RefreshDecision, SarpBase,
};
