//! Traces, synthetic workloads and the core model.

pub mod core;
pub mod gen;
pub mod rng;
pub mod trace;

pub use self::core::CoreModel;
pub use gen::{generate_trace, BankSpread, Burst, GenParams};
pub use rng::{core_seed, SplitMix64, XorShift64Star};
pub use trace::{core_trace_path, format_trace, parse_trace, AccessKind, TraceEntry, TraceError};
