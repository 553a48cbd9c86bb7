use crate::packet::NodeId;

/// Fixed slot rotation for scheduled access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdmaSchedule {
    /// A, B, R: the relay broadcasts one XOR per pair.
    ThreeStep,
    /// A, R, B, R: plain store-and-forward.
    FourStep,
}

impl TdmaSchedule {
    pub fn cycle(self) -> &'static [NodeId] {
        match self {
            TdmaSchedule::ThreeStep => &[NodeId::SourceA, NodeId::SourceB, NodeId::Relay],
            TdmaSchedule::FourStep => &[NodeId::SourceA, NodeId::Relay, NodeId::SourceB, NodeId::Relay],
        }
    }
}

/// Owner of slot `slot_index`.
pub fn tdma_next(schedule: TdmaSchedule, slot_index: u64) -> NodeId {
    let cycle = schedule.cycle();
    cycle[(slot_index % cycle.len() as u64) as usize]
}
