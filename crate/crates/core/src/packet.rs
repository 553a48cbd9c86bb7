//! Packet framing shared by every layer.
//!
//! A packet body is `payload || crc32(payload)` with the CRC stored
//! big-endian in the last four bytes. The relay XORs whole bodies; the
//! header (addresses and generation) always travels in the clear.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bytes taken by the CRC field at the end of every body.
pub const CRC_LEN: usize = 4;

/// Bytes taken by the header in the trace wire layout.
pub const WIRE_HEADER_LEN: usize = 6;

/// Default body length (payload plus CRC).
pub const DEFAULT_BODY_LEN: usize = 1024;

const BROADCAST_CODE: u8 = 0xFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeId {
    #[serde(rename = "A")]
    SourceA,
    #[serde(rename = "B")]
    SourceB,
    #[serde(rename = "R")]
    Relay,
}

impl NodeId {
    pub const ALL: [NodeId; 3] = [NodeId::SourceA, NodeId::SourceB, NodeId::Relay];

    /// The other endpoint. The relay has no peer.
    pub fn peer(self) -> Option<NodeId> {
        match self {
            NodeId::SourceA => Some(NodeId::SourceB),
            NodeId::SourceB => Some(NodeId::SourceA),
            NodeId::Relay => None,
        }
    }

    pub fn is_source(self) -> bool {
        self != NodeId::Relay
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn code(self) -> u8 {
        self as u8
    }

    fn from_code(code: u8) -> Option<NodeId> {
        match code {
            0 => Some(NodeId::SourceA),
            1 => Some(NodeId::SourceB),
            2 => Some(NodeId::Relay),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            NodeId::SourceA => "A",
            NodeId::SourceB => "B",
            NodeId::Relay => "R",
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Address {
    Node(NodeId),
    Broadcast,
}

impl Address {
    fn code(self) -> u8 {
        match self {
            Address::Node(n) => n.code(),
            Address::Broadcast => BROADCAST_CODE,
        }
    }

    fn from_code(code: u8) -> Option<Address> {
        if code == BROADCAST_CODE {
            Some(Address::Broadcast)
        } else {
            NodeId::from_code(code).map(Address::Node)
        }
    }
}

impl From<NodeId> for Address {
    fn from(n: NodeId) -> Self {
        Address::Node(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GenerationId(pub u32);

impl GenerationId {
    pub fn value(self) -> u32 {
        self.0
    }
}

impl fmt::Display for GenerationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Successor modulo 2^32.
pub fn next_generation(g: GenerationId) -> GenerationId {
    GenerationId(g.0.wrapping_add(1))
}

/// Counter register of configurable width, 1 to 32 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationSpace {
    bits: u8,
}

impl Default for GenerationSpace {
    fn default() -> Self {
        GenerationSpace { bits: 32 }
    }
}

impl GenerationSpace {
    pub fn new(bits: u8) -> Result<Self> {
        if bits == 0 || bits > 32 {
            return Err(Error::Config(format!("generation counter width {bits} not in 1..=32")));
        }
        Ok(GenerationSpace { bits })
    }

    pub fn bits(self) -> u8 {
        self.bits
    }

    /// Number of distinct generation values, 2^bits.
    pub fn modulus(self) -> u64 {
        1u64 << self.bits
    }

    pub fn next(self, g: GenerationId) -> GenerationId {
        GenerationId(((u64::from(g.0) + 1) % self.modulus()) as u32)
    }

    pub fn contains(self, g: GenerationId) -> bool {
        u64::from(g.0) < self.modulus()
    }

    /// Steps needed to count from `from` up to `to`, modulo the space.
    pub fn distance(self, from: GenerationId, to: GenerationId) -> u64 {
        let m = self.modulus();
        (u64::from(to.0) + m - u64::from(from.0) % m) % m
    }
}

/// Bitwise XOR of two equal-length bodies.
pub fn xor_combine(a: &[u8], b: &[u8]) -> Result<Vec<u8>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x ^ y).collect())
}

/// CRC-32/IEEE (reflected 0x04C11DB7, init and xorout 0xFFFFFFFF).
pub fn compute_crc(payload: &[u8]) -> u32 {
    crc32fast::hash(payload)
}

/// True when the trailing four bytes are the CRC of the rest.
pub fn body_crc_ok(body: &[u8]) -> bool {
    if body.len() < CRC_LEN {
        return false;
    }
    let (payload, crc) = body.split_at(body.len() - CRC_LEN);
    compute_crc(payload).to_be_bytes() == crc
}

/// Fixed body length shared by all packets of one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketFormat {
    pub body_len: usize,
}

impl Default for PacketFormat {
    fn default() -> Self {
        PacketFormat { body_len: DEFAULT_BODY_LEN }
    }
}

impl PacketFormat {
    pub fn new(body_len: usize) -> Result<Self> {
        if body_len <= CRC_LEN {
            return Err(Error::Config(format!("body length {body_len} leaves no room for payload and CRC")));
        }
        Ok(PacketFormat { body_len })
    }

    pub fn payload_len(&self) -> usize {
        self.body_len - CRC_LEN
    }

    pub fn frame(&self, src: NodeId, dst: Address, generation: GenerationId, payload: &[u8]) -> Result<Packet> {
        if payload.len() != self.payload_len() {
            return Err(Error::PayloadLength { expected: self.payload_len(), actual: payload.len() });
        }
        let mut body = Vec::with_capacity(self.body_len);
        body.extend_from_slice(payload);
        body.extend_from_slice(&compute_crc(payload).to_be_bytes());
        Ok(Packet { src, dst, generation, body })
    }

    pub fn parse(&self, pkt: &Packet) -> Result<ParsedPacket> {
        if pkt.body.len() != self.body_len {
            return Err(Error::LengthMismatch { left: pkt.body.len(), right: self.body_len });
        }
        Ok(ParsedPacket {
            src: pkt.src,
            dst: pkt.dst,
            generation: pkt.generation,
            payload: pkt.payload().to_vec(),
            crc: pkt.crc_field(),
            crc_ok: pkt.crc_ok(),
        })
    }

    /// Decodes the trace layout `src | dst | generation (BE) | body`.
    pub fn from_wire(&self, bytes: &[u8]) -> Result<Packet> {
        if bytes.len() != WIRE_HEADER_LEN + self.body_len {
            return Err(Error::Wire(format!(
                "expected {} bytes, got {}",
                WIRE_HEADER_LEN + self.body_len,
                bytes.len()
            )));
        }
        let src =
            NodeId::from_code(bytes[0]).ok_or_else(|| Error::Wire(format!("bad source code {:#04x}", bytes[0])))?;
        let dst = Address::from_code(bytes[1])
            .ok_or_else(|| Error::Wire(format!("bad destination code {:#04x}", bytes[1])))?;
        let generation = GenerationId(u32::from_be_bytes(bytes[2..6].try_into().unwrap()));
        Ok(Packet { src, dst, generation, body: bytes[WIRE_HEADER_LEN..].to_vec() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPacket {
    pub src: NodeId,
    pub dst: Address,
    pub generation: GenerationId,
    pub payload: Vec<u8>,
    pub crc: u32,
    pub crc_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Packet {
    pub src: NodeId,
    pub dst: Address,
    pub generation: GenerationId,
    pub body: Vec<u8>,
}

impl Packet {
    pub fn payload(&self) -> &[u8] {
        &self.body[..self.body.len().saturating_sub(CRC_LEN)]
    }

    pub fn crc_field(&self) -> u32 {
        let n = self.body.len();
        if n < CRC_LEN {
            return 0;
        }
        u32::from_be_bytes(self.body[n - CRC_LEN..].try_into().unwrap())
    }

    pub fn crc_ok(&self) -> bool {
        body_crc_ok(&self.body)
    }

    pub fn to_wire(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(WIRE_HEADER_LEN + self.body.len());
        out.push(self.src.code());
        out.push(self.dst.code());
        out.extend_from_slice(&self.generation.0.to_be_bytes());
        out.extend_from_slice(&self.body);
        out
    }
}
