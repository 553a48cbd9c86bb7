//! Randomized end-to-end schedules for the network-coding shim.
//!
//! Two endpoints and a relay are driven directly, without the MAC. Each step
//! picks one of: a source sends (the frame may be lost on the way, and a lost
//! frame may have its generation reclaimed), or the relay broadcasts its
//! oldest outgoing packet (each sink may miss it). Every payload a sink
//! accepts is checked against what the opposite source really sent.

#![allow(dead_code)]

use rand::Rng;
use wnc::ncmac::{DeliverResult, EndpointState, RelayAction, RelayState};
use wnc::packet::GenerationSpace;
use wnc::{NodeId, Packet, PacketFormat};

pub const BODY_LEN: usize = 24;

#[derive(Debug, Clone, Copy)]
pub struct ScheduleParams {
    pub steps: usize,
    pub queue_size: usize,
    pub buffer_size: usize,
    pub send_size: usize,
    pub generation_bits: u8,
    pub loss_up: f64,
    pub loss_down: f64,
    pub reclaim: f64,
    pub catch_up: bool,
}

impl ScheduleParams {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        ScheduleParams {
            steps: rng.gen_range(10..80),
            queue_size: rng.gen_range(1..6),
            buffer_size: rng.gen_range(1..8),
            send_size: rng.gen_range(1..5),
            generation_bits: 32,
            loss_up: rng.gen_range(0.0..0.5),
            loss_down: rng.gen_range(0.0..0.5),
            reclaim: rng.gen_range(0.0..1.0),
            catch_up: rng.gen_bool(0.5),
        }
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleReport {
    pub decoded: u64,
    pub passed_through: u64,
    pub dropped: u64,
    pub evictions: u64,
    /// Accepted payloads that differ from the truth.
    pub mismatches: u64,
}

impl ScheduleReport {
    pub fn add(&mut self, o: &ScheduleReport) {
        self.decoded += o.decoded;
        self.passed_through += o.passed_through;
        self.dropped += o.dropped;
        self.evictions += o.evictions;
        self.mismatches += o.mismatches;
    }
}

/// What each sink should recover from a relay broadcast.
struct Outgoing {
    packet: Packet,
    /// Expected payload at sink A and at sink B; `None` when the sink is the
    /// packet's own source.
    truth: [Option<Vec<u8>>; 2],
}

fn side(n: NodeId) -> usize {
    match n {
        NodeId::SourceA => 0,
        _ => 1,
    }
}

pub fn run_schedule<R: Rng>(rng: &mut R, p: &ScheduleParams) -> ScheduleReport {
    let fmt = PacketFormat::new(BODY_LEN).unwrap();
    let space = GenerationSpace::new(p.generation_bits).unwrap();
    let mut ends = [
        EndpointState::with_space(NodeId::SourceA, fmt, p.buffer_size, space).unwrap(),
        EndpointState::with_space(NodeId::SourceB, fmt, p.buffer_size, space).unwrap(),
    ];
    let mut relay = RelayState::new(fmt, p.queue_size, p.send_size).unwrap();
    // mirrors the relay's sending buffer with the truth attached
    let mut pending: std::collections::VecDeque<Outgoing> = Default::default();
    let mut report = ScheduleReport::default();

    for _ in 0..p.steps {
        let pick = rng.gen_range(0..3);
        if pick < 2 {
            let src = [NodeId::SourceA, NodeId::SourceB][pick];
            let mut payload = vec![0u8; fmt.payload_len()];
            rng.fill(&mut payload[..]);
            let pkt = ends[pick].source_on_transmit(&payload).unwrap();
            if rng.gen_bool(p.loss_up) {
                if rng.gen_bool(p.reclaim) {
                    ends[pick].reclaim(pkt.generation);
                }
                continue;
            }
            let step = relay.relay_on_receive(pkt).unwrap();
            if step.overwritten.is_some() {
                pending.pop_front();
            }
            match step.action {
                RelayAction::BroadcastCoded { packet, from_a, from_b, .. } => pending.push_back(Outgoing {
                    packet,
                    truth: [Some(from_b.payload().to_vec()), Some(from_a.payload().to_vec())],
                }),
                RelayAction::EvictAndBroadcastUncoded { evicted } => {
                    report.evictions += 1;
                    let mut truth = [None, None];
                    truth[1 - side(src)] = Some(evicted.payload().to_vec());
                    pending.push_back(Outgoing { packet: evicted, truth });
                }
                RelayAction::Enqueued { .. } | RelayAction::Forwarded => {}
            }
            assert_eq!(pending.len(), relay.sending_len());
        } else if let Some(out) = pending.pop_front() {
            let sent = relay.pop_outgoing().expect("mirror in step with relay");
            assert_eq!(sent, out.packet);
            for (s, end) in ends.iter_mut().enumerate() {
                if rng.gen_bool(p.loss_down) {
                    continue;
                }
                if p.catch_up {
                    end.catch_up(sent.generation);
                }
                let got = end.sink_on_receive(&sent);
                match &got {
                    DeliverResult::Decoded(_) => report.decoded += 1,
                    DeliverResult::PassThrough(_) => report.passed_through += 1,
                    DeliverResult::Dropped(_) => report.dropped += 1,
                }
                if let Some(payload) = got.payload() {
                    if out.truth[s].as_deref() != Some(payload) {
                        report.mismatches += 1;
                    }
                }
            }
        }
    }
    report
}
