//! Network-coding shim between the MAC and the link layer.
//!
//! Sources stamp every outgoing packet with a generation number and keep a
//! copy in a bounded buffer. The relay keeps one queue per source and XORs
//! two packets only when their generation numbers agree; a sink undoes the
//! XOR with its stored copy and screens the result with the CRC.

mod endpoint;
mod relay;
pub mod trace;

pub use endpoint::{DeliverResult, DropReason, EndpointState};
pub use relay::{find_proper, GenerationQueue, RelayAction, RelayState, RelayStep};
pub use trace::{ShimAction, TraceRecord};

/// Default size for every queue and buffer in the shim.
pub const DEFAULT_QUEUE_SIZE: usize = 16;
