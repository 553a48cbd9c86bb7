use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::packet::{xor_combine, Address, GenerationId, NodeId, Packet, PacketFormat};

/// Bounded arrival-ordered queue holding at most one packet per generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationQueue {
    capacity: usize,
    entries: VecDeque<Packet>,
}

impl GenerationQueue {
    pub fn new(capacity: usize) -> Self {
        GenerationQueue { capacity, entries: VecDeque::with_capacity(capacity) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.entries.iter()
    }

    pub fn generations(&self) -> Vec<GenerationId> {
        self.entries.iter().map(|p| p.generation).collect()
    }

    pub fn get(&self, generation: GenerationId) -> Option<&Packet> {
        self.entries.iter().find(|p| p.generation == generation)
    }

    pub fn take(&mut self, generation: GenerationId) -> Option<Packet> {
        let pos = self.entries.iter().position(|p| p.generation == generation)?;
        self.entries.remove(pos)
    }

    fn pop_oldest(&mut self) -> Option<Packet> {
        self.entries.pop_front()
    }

    fn push_newest(&mut self, pkt: Packet) {
        self.entries.push_back(pkt);
    }
}

/// The same-generation counterpart of a packet, if queued.
pub fn find_proper(queue: &GenerationQueue, generation: GenerationId) -> Option<&Packet> {
    queue.get(generation)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelayAction {
    /// Two same-generation packets were XORed and queued for broadcast.
    BroadcastCoded {
        packet: Packet,
        from_a: Packet,
        from_b: Packet,
        /// A same-generation leftover deleted from the arrival side's queue.
        residue: Option<Packet>,
    },
    /// Stored while waiting for a counterpart. `replaced` is a previous
    /// same-generation entry that the arrival overwrote.
    Enqueued { replaced: Option<Packet> },
    /// The arrival side's queue was full: its oldest packet was handed to the
    /// sending buffer uncoded and the arrival took its place.
    EvictAndBroadcastUncoded { evicted: Packet },
    /// Network coding disabled: the packet is forwarded as-is.
    Forwarded,
}

/// One relay transition. `overwritten` is set when pushing to the sending
/// buffer displaced its oldest packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelayStep {
    pub action: RelayAction,
    pub overwritten: Option<Packet>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelayState {
    format: PacketFormat,
    queue_a: GenerationQueue,
    queue_b: GenerationQueue,
    send_capacity: usize,
    sending: VecDeque<Packet>,
}

impl RelayState {
    pub fn new(format: PacketFormat, queue_size: usize, send_capacity: usize) -> Result<Self> {
        if queue_size == 0 || send_capacity == 0 {
            return Err(Error::Config("relay queue sizes must be positive".into()));
        }
        Ok(RelayState {
            format,
            queue_a: GenerationQueue::new(queue_size),
            queue_b: GenerationQueue::new(queue_size),
            send_capacity,
            sending: VecDeque::with_capacity(send_capacity),
        })
    }

    pub fn queue(&self, side: NodeId) -> &GenerationQueue {
        match side {
            NodeId::SourceA => &self.queue_a,
            NodeId::SourceB => &self.queue_b,
            NodeId::Relay => panic!("the relay has no queue for itself"),
        }
    }

    fn queues_mut(&mut self, arrival: NodeId) -> (&mut GenerationQueue, &mut GenerationQueue) {
        match arrival {
            NodeId::SourceA => (&mut self.queue_a, &mut self.queue_b),
            _ => (&mut self.queue_b, &mut self.queue_a),
        }
    }

    pub fn sending_len(&self) -> usize {
        self.sending.len()
    }

    pub fn sending_capacity(&self) -> usize {
        self.send_capacity
    }

    pub fn sending_is_full(&self) -> bool {
        self.sending.len() >= self.send_capacity
    }

    pub fn sending(&self) -> impl Iterator<Item = &Packet> {
        self.sending.iter()
    }

    /// Next packet for the MAC, oldest first.
    pub fn pop_outgoing(&mut self) -> Option<Packet> {
        self.sending.pop_front()
    }

    fn push_outgoing(&mut self, pkt: Packet) -> Option<Packet> {
        let overwritten = if self.sending.len() >= self.send_capacity { self.sending.pop_front() } else { None };
        self.sending.push_back(pkt);
        overwritten
    }

    fn check_source(&self, pkt: &Packet) -> Result<()> {
        if !pkt.src.is_source() {
            return Err(Error::Config(format!("relay received a packet from {}", pkt.src)));
        }
        if pkt.body.len() != self.format.body_len {
            return Err(Error::LengthMismatch { left: pkt.body.len(), right: self.format.body_len });
        }
        Ok(())
    }

    /// Generation-matching network coding on arrival of a source packet.
    pub fn relay_on_receive(&mut self, pkt: Packet) -> Result<RelayStep> {
        self.check_source(&pkt)?;
        let generation = pkt.generation;
        let arrival = pkt.src;
        let (own, opposite) = self.queues_mut(arrival);

        if let Some(proper) = opposite.take(generation) {
            debug_assert!(opposite.get(generation).is_none());
            let residue = own.take(generation);
            let body = xor_combine(&pkt.body, &proper.body)?;
            let coded = Packet { src: NodeId::Relay, dst: Address::Broadcast, generation, body };
            let (from_a, from_b) = if arrival == NodeId::SourceA { (pkt, proper) } else { (proper, pkt) };
            let overwritten = self.push_outgoing(coded.clone());
            return Ok(RelayStep {
                action: RelayAction::BroadcastCoded { packet: coded, from_a, from_b, residue },
                overwritten,
            });
        }

        if let Some(replaced) = own.take(generation) {
            own.push_newest(pkt);
            return Ok(RelayStep { action: RelayAction::Enqueued { replaced: Some(replaced) }, overwritten: None });
        }

        if !own.is_full() {
            own.push_newest(pkt);
            return Ok(RelayStep { action: RelayAction::Enqueued { replaced: None }, overwritten: None });
        }

        let mut evicted = own.pop_oldest().expect("full queue is non-empty");
        own.push_newest(pkt);
        evicted.dst = Address::Broadcast;
        let overwritten = self.push_outgoing(evicted.clone());
        Ok(RelayStep { action: RelayAction::EvictAndBroadcastUncoded { evicted }, overwritten })
    }

    /// Store-and-forward path used when network coding is off.
    pub fn forward_uncoded(&mut self, pkt: Packet) -> Result<RelayStep> {
        self.check_source(&pkt)?;
        let overwritten = self.push_outgoing(pkt);
        Ok(RelayStep { action: RelayAction::Forwarded, overwritten })
    }
}
