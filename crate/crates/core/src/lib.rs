//! Wireless network coding for the two-way relay channel.
//!
//! Two endpoints `A` and `B` exchange packets through a single relay `R`.
//! The crate is split by layer:
//!
//! * [`packet`]: framing, CRC, XOR combining and generation counters.
//! * [`ncmac`]: the network-coding shim that sits between MAC and link layer
//!   at the endpoints and at the relay.
//! * [`macsim`]: a discrete-event simulator of the three-node topology under
//!   CSMA/CA or TDMA channel access.
//! * [`phy`]: an OFDM baseband physical layer with decode-and-forward joint
//!   modulation at the relay and subset-partition demapping at the sinks.
//! * [`scenario`]: the scenario file schema shared by both simulators.

pub mod error;
pub mod macsim;
pub mod ncmac;
pub mod packet;
pub mod phy;
pub mod scenario;

pub use error::{Error, Result};
pub use packet::{Address, GenerationId, GenerationSpace, NodeId, Packet, PacketFormat};
