use crate::dram::{Cycle, DramAddress};
use crate::workload::AccessKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemRequest {
    /// Unique, increasing in arrival order.
    pub id: u64,
    pub core: usize,
    pub kind: AccessKind,
    pub address: DramAddress,
    pub arrival: Cycle,
    pub first_issue: Option<Cycle>,
    pub completion: Option<Cycle>,
}

impl MemRequest {
    pub fn new(id: u64, core: usize, kind: AccessKind, address: DramAddress, arrival: Cycle) -> Self {
        MemRequest {
            id,
            core,
            kind,
            address,
            arrival,
            first_issue: None,
            completion: None,
        }
    }

    pub fn is_read(&self) -> bool {
        self.kind == AccessKind::Read
    }
}
