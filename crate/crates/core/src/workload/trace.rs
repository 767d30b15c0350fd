//! Trace text format: one access per line, `<gap> <R|W> <0xaddr>`, with
//! `#` starting a comment.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Read,
    Write,
}

impl AccessKind {
    pub fn letter(self) -> char {
        match self {
            AccessKind::Read => 'R',
            AccessKind::Write => 'W',
        }
    }

    pub fn from_letter(s: &str) -> Option<Self> {
        match s {
            "R" | "r" => Some(AccessKind::Read),
            "W" | "w" => Some(AccessKind::Write),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    /// Non-memory instructions retired before this access.
    pub think_gap: u64,
    pub kind: AccessKind,
    pub address: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn parse_err(line: usize, message: impl Into<String>) -> TraceError {
    TraceError::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceEntry>, TraceError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(line, format!("expected 3 fields, found {}", fields.len())));
        }
        let think_gap = fields[0]
            .parse::<u64>()
            .map_err(|_| parse_err(line, format!("bad gap {:?}", fields[0])))?;
        let kind = AccessKind::from_letter(fields[1])
            .ok_or_else(|| parse_err(line, format!("bad access kind {:?}", fields[1])))?;
        let hex = fields[2]
            .strip_prefix("0x")
            .or_else(|| fields[2].strip_prefix("0X"))
            .ok_or_else(|| parse_err(line, format!("address {:?} lacks 0x prefix", fields[2])))?;
        let address = u64::from_str_radix(hex, 16)
            .map_err(|_| parse_err(line, format!("bad address {:?}", fields[2])))?;
        entries.push(TraceEntry {
            think_gap,
            kind,
            address,
        });
    }
    Ok(entries)
}

pub fn format_trace(entries: &[TraceEntry]) -> String {
    let mut out = String::with_capacity(entries.len() * 16);
    for e in entries {
        let _ = writeln!(out, "{} {} {:#x}", e.think_gap, e.kind.letter(), e.address);
    }
    out
}

/// `<prefix>.core<k>.trace`
pub fn core_trace_path(prefix: &Path, core: usize) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(format!(".core{core}.trace"));
    PathBuf::from(name)
}
