//! Write buffer with watermark-driven writeback mode.

use crate::records::ModeReason;
use crate::ConfigError;

use super::request::MemRequest;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    ReadMode,
    WritebackMode,
}

/// A mode transition and what triggered it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeChange {
    pub to: Mode,
    pub reason: ModeReason,
}

#[derive(Debug, Clone)]
pub struct WriteBuffer {
    entries: Vec<MemRequest>,
    pub capacity: usize,
    pub high_watermark: usize,
    pub low_watermark: usize,
    mode: Mode,
    flushing: bool,
}

impl WriteBuffer {
    pub fn new(capacity: usize, high_watermark: usize, low_watermark: usize) -> Result<Self, ConfigError> {
        if low_watermark >= high_watermark {
            return Err(ConfigError::invalid(
                "low_watermark",
                format!("must be below high_watermark ({low_watermark} >= {high_watermark})"),
            ));
        }
        if high_watermark > capacity {
            return Err(ConfigError::invalid(
                "high_watermark",
                format!("must not exceed write capacity ({high_watermark} > {capacity})"),
            ));
        }
        Ok(WriteBuffer {
            entries: Vec::with_capacity(capacity),
            capacity,
            high_watermark,
            low_watermark,
            mode: Mode::ReadMode,
            flushing: false,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn occupancy(&self) -> usize {
        self.entries.len()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    pub fn entries(&self) -> &[MemRequest] {
        &self.entries
    }

    pub(crate) fn entry_mut(&mut self, index: usize) -> &mut MemRequest {
        &mut self.entries[index]
    }

    /// Appends a write; the caller checks [`WriteBuffer::is_full`] first.
    pub fn push(&mut self, request: MemRequest) -> Option<ModeChange> {
        debug_assert!(!self.is_full());
        self.entries.push(request);
        self.evaluate(false)
    }

    pub fn remove(&mut self, index: usize) -> MemRequest {
        self.entries.remove(index)
    }

    /// Applies watermark hysteresis. `flush` asks for the end-of-run drain,
    /// which runs until the buffer is empty.
    pub fn evaluate(&mut self, flush: bool) -> Option<ModeChange> {
        let occupancy = self.entries.len();
        match self.mode {
            Mode::ReadMode => {
                let reason = if occupancy >= self.high_watermark {
                    ModeReason::Watermark
                } else if flush && occupancy > 0 {
                    ModeReason::Flush
                } else {
                    return None;
                };
                self.mode = Mode::WritebackMode;
                self.flushing = reason == ModeReason::Flush;
                Some(ModeChange {
                    to: Mode::WritebackMode,
                    reason,
                })
            }
            Mode::WritebackMode => {
                if flush {
                    self.flushing = true;
                }
                let done = if self.flushing {
                    occupancy == 0
                } else {
                    occupancy <= self.low_watermark
                };
                if !done {
                    return None;
                }
                let reason = if self.flushing {
                    ModeReason::Flush
                } else {
                    ModeReason::Watermark
                };
                self.mode = Mode::ReadMode;
                self.flushing = false;
                Some(ModeChange {
                    to: Mode::ReadMode,
                    reason,
                })
            }
        }
    }
}
