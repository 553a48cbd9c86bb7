use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::packet::{NodeId, Packet};

/// Simulation time in microseconds.
pub type Micros = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    TxEnd {
        collided: bool,
    },
    RxDeliver {
        from: NodeId,
    },
    AppArrival,
    BackoffExpire,
    TxStart,
    SlotBoundary {
        slot: u64,
    },
    /// A source's wait on its generation window ran out.
    WindowTimeout,
}

impl EventKind {
    /// Rank used to order simultaneous events.
    fn rank(self) -> u8 {
        match self {
            EventKind::TxEnd { .. } => 0,
            EventKind::RxDeliver { .. } => 1,
            EventKind::AppArrival => 2,
            EventKind::BackoffExpire => 3,
            EventKind::TxStart => 4,
            EventKind::SlotBoundary { .. } => 5,
            EventKind::WindowTimeout => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimEvent {
    pub time: Micros,
    pub kind: EventKind,
    pub node: NodeId,
    pub packet: Option<Packet>,
}

impl SimEvent {
    pub fn new(time: Micros, kind: EventKind, node: NodeId) -> Self {
        SimEvent { time, kind, node, packet: None }
    }

    pub fn with_packet(mut self, packet: Packet) -> Self {
        self.packet = Some(packet);
        self
    }
}

struct Queued {
    event: SimEvent,
    seq: u64,
}

impl Queued {
    fn key(&self) -> (Micros, u8, usize, u64) {
        (self.event.time, self.event.kind.rank(), self.event.node.index(), self.seq)
    }
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (time, kind, node, insertion order)
        other.key().cmp(&self.key())
    }
}

/// Future event list ordered by time, then kind, then node, then insertion.
#[derive(Default)]
pub struct EventQueue {
    heap: BinaryHeap<Queued>,
    seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: SimEvent) {
        self.seq += 1;
        self.heap.push(Queued { event, seq: self.seq });
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        self.heap.pop().map(|q| q.event)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_by_time_then_kind_then_node() {
        let mut q = EventQueue::new();
        q.push(SimEvent::new(5, EventKind::TxStart, NodeId::SourceA));
        q.push(SimEvent::new(5, EventKind::BackoffExpire, NodeId::Relay));
        q.push(SimEvent::new(5, EventKind::BackoffExpire, NodeId::SourceB));
        q.push(SimEvent::new(3, EventKind::SlotBoundary { slot: 0 }, NodeId::Relay));
        q.push(SimEvent::new(5, EventKind::TxEnd { collided: false }, NodeId::Relay));
        let order: Vec<_> = std::iter::from_fn(|| q.pop()).map(|e| (e.time, e.kind.rank(), e.node)).collect();
        assert_eq!(
            order,
            vec![
                (3, 5, NodeId::Relay),
                (5, 0, NodeId::Relay),
                (5, 3, NodeId::SourceB),
                (5, 3, NodeId::Relay),
                (5, 4, NodeId::SourceA),
            ]
        );
    }
}
