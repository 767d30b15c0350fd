//! Memory controller: request queues, write buffer and FR-FCFS scheduling.

pub mod request;
pub mod scheduler;
pub mod write_buffer;

pub use request::MemRequest;
pub use scheduler::{
    Controller, ControllerConfig, ControllerCounters, EnqueueError, Origin, PendingRefresh, RequestRef,
    Scheduled, StepError,
};
pub use write_buffer::{Mode, ModeChange, WriteBuffer};
