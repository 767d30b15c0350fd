//! Command and completion logs and their CSV forms.
//!
//! The command log holds every issued DRAM command plus marker rows
//! (`WBSTART`/`WBEND`) recording writeback-mode transitions, so that
//! writeback windows can be recovered from the log alone.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dram::{Command, CommandKind, Cycle, DramAddress};
use crate::refresh::Reason;
use crate::workload::AccessKind;

pub const COMMAND_LOG_HEADER: &str = "cycle,kind,channel,rank,bank,subarray,row,column,reason";
pub const COMPLETION_LOG_HEADER: &str =
    "id,core,kind,arrival,first_issue,completion,channel,rank,bank,subarray,row,column";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeReason {
    Watermark,
    Flush,
}

impl ModeReason {
    pub fn name(self) -> &'static str {
        match self {
            ModeReason::Watermark => "watermark",
            ModeReason::Flush => "flush",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "watermark" => Some(ModeReason::Watermark),
            "flush" => Some(ModeReason::Flush),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogRecord {
    Command { cmd: Command, reason: Option<Reason> },
    /// The channel entered (`start`) or left writeback mode at `cycle`.
    Writeback {
        cycle: Cycle,
        channel: u32,
        start: bool,
        reason: ModeReason,
    },
}

impl LogRecord {
    pub fn cycle(&self) -> Cycle {
        match self {
            LogRecord::Command { cmd, .. } => cmd.cycle,
            LogRecord::Writeback { cycle, .. } => *cycle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

fn malformed(line: usize, message: impl Into<String>) -> LogParseError {
    LogParseError::Malformed {
        line,
        message: message.into(),
    }
}

pub fn command_log_csv(records: &[LogRecord]) -> String {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(COMMAND_LOG_HEADER);
    out.push('\n');
    for r in records {
        match r {
            LogRecord::Command { cmd, reason } => {
                let t = &cmd.target;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    cmd.cycle,
                    cmd.kind.name(),
                    t.channel,
                    t.rank,
                    t.bank,
                    t.subarray,
                    t.row,
                    t.column,
                    reason.map_or("", |r| r.name())
                );
            }
            LogRecord::Writeback {
                cycle,
                channel,
                start,
                reason,
            } => {
                let kind = if *start { "WBSTART" } else { "WBEND" };
                let _ = writeln!(out, "{cycle},{kind},{channel},0,0,0,0,0,{}", reason.name());
            }
        }
    }
    out
}

fn field<T: std::str::FromStr>(fields: &[&str], i: usize, line: usize, name: &str) -> Result<T, LogParseError> {
    fields
        .get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| malformed(line, format!("bad {name}")))
}

pub fn parse_command_log(text: &str) -> Result<Vec<LogRecord>, LogParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw == COMMAND_LOG_HEADER || raw.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 9 {
            return Err(malformed(line, format!("expected 9 fields, found {}", f.len())));
        }
        let cycle: Cycle = field(&f, 0, line, "cycle")?;
        let channel: u32 = field(&f, 2, line, "channel")?;
        match f[1] {
            "WBSTART" | "WBEND" => {
                let reason = ModeReason::parse(f[8]).ok_or_else(|| malformed(line, "bad mode reason"))?;
                out.push(LogRecord::Writeback {
                    cycle,
                    channel,
                    start: f[1] == "WBSTART",
                    reason,
                });
            }
            kind => {
                let kind = CommandKind::parse(kind).ok_or_else(|| malformed(line, format!("bad kind {kind:?}")))?;
                let target = DramAddress {
                    channel,
                    rank: field(&f, 3, line, "rank")?,
                    bank: field(&f, 4, line, "bank")?,
                    subarray: field(&f, 5, line, "subarray")?,
                    row: field(&f, 6, line, "row")?,
                    column: field(&f, 7, line, "column")?,
                };
                let reason = match f[8] {
                    "" => None,
                    s => Some(Reason::parse(s).ok_or_else(|| malformed(line, format!("bad reason {s:?}")))?),
                };
                out.push(LogRecord::Command {
                    cmd: Command::new(kind, target, cycle),
                    reason,
                });
            }
        }
    }
    Ok(out)
}

/// The DRAM commands of a log, in order.
pub fn commands(records: &[LogRecord]) -> Vec<Command> {
    records
        .iter()
        .filter_map(|r| match r {
            LogRecord::Command { cmd, .. } => Some(*cmd),
            LogRecord::Writeback { .. } => None,
        })
        .collect()
}

/// Writeback windows `[start, end)` per channel. A window still open at
/// the end of the log is closed at `end_cycle`.
pub fn writeback_windows(records: &[LogRecord], channels: u32, end_cycle: Cycle) -> Vec<Vec<(Cycle, Cycle)>> {
    let mut open: Vec<Option<Cycle>> = vec![None; channels as usize];
    let mut out = vec![Vec::new(); channels as usize];
    for r in records {
        if let LogRecord::Writeback { cycle, channel, start, .. } = *r {
            let ch = channel as usize;
            if ch >= open.len() {
                continue;
            }
            match (start, open[ch]) {
                (true, None) => open[ch] = Some(cycle),
                (false, Some(s)) => {
                    if cycle > s {
                        out[ch].push((s, cycle));
                    }
                    open[ch] = None;
                }
                _ => {}
            }
        }
    }
    for (ch, s) in open.into_iter().enumerate() {
        if let Some(s) = s {
            if end_cycle > s {
                out[ch].push((s, end_cycle));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompletionRecord {
    pub id: u64,
    pub core: usize,
    pub kind: AccessKind,
    pub arrival: Cycle,
    /// First command issued on the request's behalf.
    pub first_issue: Cycle,
    pub completion: Cycle,
    pub address: DramAddress,
}

pub fn completion_log_csv(records: &[CompletionRecord]) -> String {
    let mut out = String::with_capacity(40 * (records.len() + 1));
    out.push_str(COMPLETION_LOG_HEADER);
    out.push('\n');
    for r in records {
        let a = &r.address;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.id,
            r.core,
            r.kind.letter(),
            r.arrival,
            r.first_issue,
            r.completion,
            a.channel,
            a.rank,
            a.bank,
            a.subarray,
            a.row,
            a.column
        );
    }
    out
}

pub fn parse_completion_log(text: &str) -> Result<Vec<CompletionRecord>, LogParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw == COMPLETION_LOG_HEADER {
            continue;
        }
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 12 {
            return Err(malformed(line, format!("expected 12 fields, found {}", f.len())));
        }
        out.push(CompletionRecord {
            id: field(&f, 0, line, "id")?,
            core: field(&f, 1, line, "core")?,
            kind: AccessKind::from_letter(f[2]).ok_or_else(|| malformed(line, "bad kind"))?,
            arrival: field(&f, 3, line, "arrival")?,
            first_issue: field(&f, 4, line, "first_issue")?,
            completion: field(&f, 5, line, "completion")?,
            address: DramAddress {
                channel: field(&f, 6, line, "channel")?,
                rank: field(&f, 7, line, "rank")?,
                bank: field(&f, 8, line, "bank")?,
                subarray: field(&f, 9, line, "subarray")?,
                row: field(&f, 10, line, "row")?,
                column: field(&f, 11, line, "column")?,
            },
        });
    }
    Ok(out)
}
