use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packet::{body_crc_ok, xor_combine, Address, GenerationId, GenerationSpace, NodeId, Packet, PacketFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// A same-generation copy existed but the unmasked body failed the CRC.
    CrcAfterDecode,
    /// No same-generation copy and the raw body failed the CRC.
    Crc,
    /// The relay echoed one of our own uncoded packets back to us.
    OwnPacket,
    /// Body length differs from the configured format.
    Length,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeliverResult {
    Decoded(Vec<u8>),
    PassThrough(Vec<u8>),
    Dropped(DropReason),
}

impl DeliverResult {
    pub fn payload(&self) -> Option<&[u8]> {
        match self {
            DeliverResult::Decoded(p) | DeliverResult::PassThrough(p) => Some(p),
            DeliverResult::Dropped(_) => None,
        }
    }
}

/// Source/sink side of the shim: a generation counter and a bounded FIFO of
/// transmitted packets shared by the sending and receiving paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndpointState {
    node: NodeId,
    format: PacketFormat,
    space: GenerationSpace,
    capacity: usize,
    buffer: VecDeque<Packet>,
    counter: GenerationId,
}

impl EndpointState {
    pub fn new(node: NodeId, format: PacketFormat, capacity: usize) -> Result<Self> {
        Self::with_space(node, format, capacity, GenerationSpace::default())
    }

    pub fn with_space(node: NodeId, format: PacketFormat, capacity: usize, space: GenerationSpace) -> Result<Self> {
        if !node.is_source() {
            return Err(Error::Config("endpoint state belongs to a source node".into()));
        }
        if capacity == 0 {
            return Err(Error::Config("endpoint buffer size must be positive".into()));
        }
        Ok(EndpointState {
            node,
            format,
            space,
            capacity,
            buffer: VecDeque::with_capacity(capacity),
            counter: GenerationId(0),
        })
    }

    /// Starts the counter at an arbitrary value, e.g. just below the wrap.
    pub fn with_counter(mut self, counter: GenerationId) -> Self {
        self.counter = counter;
        self
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn counter(&self) -> GenerationId {
        self.counter
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    /// Generations currently held, oldest first.
    pub fn generations(&self) -> Vec<GenerationId> {
        self.buffer.iter().map(|p| p.generation).collect()
    }

    pub fn stored(&self, generation: GenerationId) -> Option<&Packet> {
        self.buffer.iter().find(|p| p.generation == generation)
    }

    /// Frames `payload` with the current generation, keeps a copy and
    /// advances the counter. A full buffer drops its oldest entry.
    pub fn source_on_transmit(&mut self, payload: &[u8]) -> Result<Packet> {
        let peer = self.node.peer().expect("source has a peer");
        let pkt = self.format.frame(self.node, Address::Node(peer), self.counter, payload)?;
        // after a counter wrap the old copy of this generation is stale
        self.buffer.retain(|p| p.generation != pkt.generation);
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(pkt.clone());
        self.counter = self.space.next(self.counter);
        Ok(pkt)
    }

    /// Moves the counter past `generation` if that generation is ahead of
    /// it, so a source that fell behind its peer resumes in step. Returns
    /// whether the counter moved.
    pub fn catch_up(&mut self, generation: GenerationId) -> bool {
        let ahead = self.space.distance(self.counter, generation);
        if ahead >= self.space.modulus() / 2 {
            return false;
        }
        self.counter = self.space.next(generation);
        true
    }

    /// Hands `generation` back after the MAC saw the packet carrying it
    /// collide, so the next packet reuses it. Only the most recent
    /// generation can be returned.
    pub fn reclaim(&mut self, generation: GenerationId) -> bool {
        if self.space.next(generation) != self.counter {
            return false;
        }
        self.counter = generation;
        true
    }

    /// Handles a packet broadcast by the relay.
    pub fn sink_on_receive(&self, pkt: &Packet) -> DeliverResult {
        if pkt.body.len() != self.format.body_len {
            return DeliverResult::Dropped(DropReason::Length);
        }
        if pkt.src == self.node {
            return DeliverResult::Dropped(DropReason::OwnPacket);
        }
        match self.stored(pkt.generation) {
            Some(own) => {
                let body = xor_combine(&own.body, &pkt.body).expect("lengths checked");
                if body_crc_ok(&body) {
                    DeliverResult::Decoded(body[..self.format.payload_len()].to_vec())
                } else {
                    DeliverResult::Dropped(DropReason::CrcAfterDecode)
                }
            }
            None if pkt.crc_ok() => DeliverResult::PassThrough(pkt.payload().to_vec()),
            None => DeliverResult::Dropped(DropReason::Crc),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fmt() -> PacketFormat {
        PacketFormat::new(16).unwrap()
    }

    fn payload(tag: u8) -> Vec<u8> {
        vec![tag; 12]
    }

    #[test]
    fn catch_up_only_moves_forward() {
        let mut a = EndpointState::new(NodeId::SourceA, fmt(), 4).unwrap();
        a.source_on_transmit(&payload(1)).unwrap();
        assert!(!a.catch_up(GenerationId(0)));
        assert_eq!(a.counter(), GenerationId(1));
        assert!(a.catch_up(GenerationId(1)));
        assert_eq!(a.counter(), GenerationId(2));
        assert!(a.catch_up(GenerationId(9)));
        assert_eq!(a.counter(), GenerationId(10));
        assert!(!a.catch_up(GenerationId(u32::MAX)));

        let space = GenerationSpace::new(3).unwrap();
        let mut b = EndpointState::with_space(NodeId::SourceB, fmt(), 4, space).unwrap().with_counter(GenerationId(6));
        assert!(b.catch_up(GenerationId(0)));
        assert_eq!(b.counter(), GenerationId(1));
        assert!(!b.catch_up(GenerationId(5)));
    }

    #[test]
    fn counter_starts_at_zero_and_increments() {
        let mut a = EndpointState::new(NodeId::SourceA, fmt(), 4).unwrap();
        assert_eq!(a.source_on_transmit(&payload(1)).unwrap().generation, GenerationId(0));
        assert_eq!(a.source_on_transmit(&payload(2)).unwrap().generation, GenerationId(1));
        assert_eq!(a.counter(), GenerationId(2));
    }

    #[test]
    fn full_buffer_overwrites_oldest() {
        let mut a = EndpointState::new(NodeId::SourceA, fmt(), 2).unwrap();
        for t in 0..3 {
            a.source_on_transmit(&payload(t)).unwrap();
        }
        assert_eq!(a.generations(), vec![GenerationId(1), GenerationId(2)]);
    }

    #[test]
    fn counter_wraps_at_32_bits() {
        let mut a = EndpointState::new(NodeId::SourceA, fmt(), 2).unwrap().with_counter(GenerationId(u32::MAX));
        assert_eq!(a.source_on_transmit(&payload(0)).unwrap().generation, GenerationId(u32::MAX));
        assert_eq!(a.source_on_transmit(&payload(1)).unwrap().generation, GenerationId(0));
    }

    #[test]
    fn narrow_counter_keeps_one_entry_per_generation() {
        let space = GenerationSpace::new(1).unwrap();
        let mut a = EndpointState::with_space(NodeId::SourceA, fmt(), 4, space).unwrap();
        for t in 0..5 {
            a.source_on_transmit(&payload(t)).unwrap();
        }
        assert_eq!(a.len(), 2);
        assert_eq!(a.stored(GenerationId(0)).unwrap().payload(), &payload(4)[..]);
    }

    #[test]
    fn decodes_coded_broadcast() {
        let mut a = EndpointState::new(NodeId::SourceA, fmt(), 8).unwrap().with_counter(GenerationId(7));
        let mut b = EndpointState::new(NodeId::SourceB, fmt(), 8).unwrap().with_counter(GenerationId(7));
        let u = a.source_on_transmit(&payload(0xAA)).unwrap();
        let v = b.source_on_transmit(&payload(0x55)).unwrap();
        let coded = Packet {
            src: NodeId::Relay,
            dst: Address::Broadcast,
            generation: GenerationId(7),
            body: xor_combine(&u.body, &v.body).unwrap(),
        };
        assert_eq!(a.sink_on_receive(&coded), DeliverResult::Decoded(payload(0x55)));
        assert_eq!(b.sink_on_receive(&coded), DeliverResult::Decoded(payload(0xAA)));
    }

    #[test]
    fn uncoded_forward_passes_through() {
        let a = EndpointState::new(NodeId::SourceA, fmt(), 8).unwrap();
        let mut b = EndpointState::new(NodeId::SourceB, fmt(), 8).unwrap();
        let v = b.source_on_transmit(&payload(3)).unwrap();
        assert_eq!(a.sink_on_receive(&v), DeliverResult::PassThrough(payload(3)));
    }

    #[test]
    fn coded_body_without_copy_is_dropped() {
        let a = EndpointState::new(NodeId::SourceA, fmt(), 8).unwrap();
        let f = fmt();
        let u = f.frame(NodeId::SourceA, Address::Broadcast, GenerationId(5), &payload(1)).unwrap();
        let v = f.frame(NodeId::SourceB, Address::Broadcast, GenerationId(5), &payload(2)).unwrap();
        let coded = Packet {
            src: NodeId::Relay,
            dst: Address::Broadcast,
            generation: GenerationId(5),
            body: xor_combine(&u.body, &v.body).unwrap(),
        };
        assert_eq!(a.sink_on_receive(&coded), DeliverResult::Dropped(DropReason::Crc));
    }

    #[test]
    fn uncoded_packet_colliding_with_own_generation_is_dropped() {
        let mut a = EndpointState::new(NodeId::SourceA, fmt(), 8).unwrap();
        let mut b = EndpointState::new(NodeId::SourceB, fmt(), 8).unwrap();
        a.source_on_transmit(&payload(1)).unwrap();
        let v = b.source_on_transmit(&payload(2)).unwrap();
        assert_eq!(a.sink_on_receive(&v), DeliverResult::Dropped(DropReason::CrcAfterDecode));
    }

    #[test]
    fn own_echo_and_bad_length_are_dropped() {
        let mut a = EndpointState::new(NodeId::SourceA, fmt(), 8).unwrap();
        let u = a.source_on_transmit(&payload(1)).unwrap();
        assert_eq!(a.sink_on_receive(&u), DeliverResult::Dropped(DropReason::OwnPacket));
        let short = Packet { body: vec![0; 3], ..u };
        assert_eq!(a.sink_on_receive(&short), DeliverResult::Dropped(DropReason::Length));
    }

    #[test]
    fn relay_cannot_hold_endpoint_state() {
        assert!(EndpointState::new(NodeId::Relay, fmt(), 4).is_err());
        assert!(EndpointState::new(NodeId::SourceA, fmt(), 0).is_err());
    }
}
