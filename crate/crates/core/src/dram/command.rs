use super::geometry::DramAddress;
use super::params::{Cycle, TimingParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CommandKind {
    Act,
    Rd,
    Wr,
    Pre,
    /// Rank-wide refresh; every bank is unavailable for `t_rfc_ab`.
    RefAb,
    /// Single-bank refresh; the bank is unavailable for `t_rfc_pb`.
    RefPb,
    /// Per-bank refresh confined to one subarray; the rest of the bank
    /// stays accessible.
    RefSarp,
    /// Rank-wide refresh confined to one subarray per bank.
    RefSarpAb,
}

impl CommandKind {
    pub const ALL: [CommandKind; 8] = [
        CommandKind::Act,
        CommandKind::Rd,
        CommandKind::Wr,
        CommandKind::Pre,
        CommandKind::RefAb,
        CommandKind::RefPb,
        CommandKind::RefSarp,
        CommandKind::RefSarpAb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Act => "ACT",
            CommandKind::Rd => "RD",
            CommandKind::Wr => "WR",
            CommandKind::Pre => "PRE",
            CommandKind::RefAb => "REFab",
            CommandKind::RefPb => "REFpb",
            CommandKind::RefSarp => "REFsarp",
            CommandKind::RefSarpAb => "REFsarpab",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        CommandKind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_refresh(self) -> bool {
        matches!(
            self,
            CommandKind::RefAb | CommandKind::RefPb | CommandKind::RefSarp | CommandKind::RefSarpAb
        )
    }

    pub fn is_column(self) -> bool {
        matches!(self, CommandKind::Rd | CommandKind::Wr)
    }

    /// Refresh that touches every bank of the rank.
    pub fn is_rank_refresh(self) -> bool {
        matches!(self, CommandKind::RefAb | CommandKind::RefSarpAb)
    }

    /// Refresh that only locks the refreshed subarray.
    pub fn is_subarray_refresh(self) -> bool {
        matches!(self, CommandKind::RefSarp | CommandKind::RefSarpAb)
    }

    /// Busy time of a refresh command; zero for other kinds.
    pub fn refresh_duration(self, params: &TimingParams) -> Cycle {
        match self {
            CommandKind::RefAb | CommandKind::RefSarpAb => params.t_rfc_ab,
            CommandKind::RefPb | CommandKind::RefSarp => params.t_rfc_pb,
            _ => 0,
        }
    }
}

/// One DRAM command. Coordinates below the command's granularity are
/// informational (refresh commands carry the first refreshed row).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Command {
    pub kind: CommandKind,
    pub target: DramAddress,
    pub cycle: Cycle,
}

impl Command {
    pub fn new(kind: CommandKind, target: DramAddress, cycle: Cycle) -> Self {
        Command { kind, target, cycle }
    }
}

/// Named timing constraints. `CmdBus` is the one-command-per-cycle rule of
/// the channel command bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    CmdBus,
    TRcd,
    TRp,
    TRas,
    TRc,
    TRrd,
    TCcd,
    TWtr,
    TRtw,
    TWr,
    TRtp,
    TRfcAb,
    TRfcPb,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::CmdBus => "cmd_bus",
            Constraint::TRcd => "tRCD",
            Constraint::TRp => "tRP",
            Constraint::TRas => "tRAS",
            Constraint::TRc => "tRC",
            Constraint::TRrd => "tRRD",
            Constraint::TCcd => "tCCD",
            Constraint::TWtr => "tWTR",
            Constraint::TRtw => "tRTW",
            Constraint::TWr => "tWR",
            Constraint::TRtp => "tRTP",
            Constraint::TRfcAb => "tRFCab",
            Constraint::TRfcPb => "tRFCpb",
        }
    }

    /// Constraint that keeps accesses out of an in-flight refresh.
    pub fn for_refresh(kind: CommandKind) -> Self {
        if kind.is_rank_refresh() {
            Constraint::TRfcAb
        } else {
            Constraint::TRfcPb
        }
    }
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
