//! Discrete-event simulator of the three-node relay topology.
//!
//! Sources `A` and `B` and the relay `R` share one collision domain and
//! access it either with the CSMA/CA distributed coordination function or
//! with a fixed TDMA cycle. Frames are not acknowledged and losses are final.

pub mod dcf;
pub mod engine;
pub mod event;
pub mod link;
pub mod metrics;
pub mod tdma;

pub use dcf::{dcf_step, DcfParams, DcfPhase, DcfState, Medium};
pub use engine::{simulate, DropCause, Fate, MacTrace, PacketRecord, TxRecord};
pub use event::{EventKind, EventQueue, Micros, SimEvent};
pub use link::{link_deliver, LinkModel, LinkOutcome};
pub use metrics::{collect_metrics, MacMetrics, NodeMetrics};
pub use tdma::{tdma_next, TdmaSchedule};

use crate::error::Result;
use crate::scenario::Scenario;

/// Simulates `sc` and reduces the trace to steady-state metrics.
pub fn run_scenario(sc: &Scenario) -> Result<MacMetrics> {
    let trace = simulate(sc)?;
    collect_metrics(&trace, trace.warmup_us)
}
