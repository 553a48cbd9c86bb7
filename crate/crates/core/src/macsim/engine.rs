use std::collections::{BTreeMap, VecDeque};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use super::dcf::{dcf_step, DcfParams, DcfState, Medium};
use super::event::{EventKind, EventQueue, Micros, SimEvent};
use super::link::{link_deliver, LinkModel, LinkOutcome};
use super::tdma::{tdma_next, TdmaSchedule};
use crate::error::{Error, Result};
use crate::ncmac::{DeliverResult, DropReason, EndpointState, RelayAction, RelayState, ShimAction, TraceRecord};
use crate::packet::{compute_crc, Address, GenerationId, GenerationSpace, NodeId, Packet, PacketFormat};
use crate::scenario::{MacKind, Scenario, TdmaMode, TrafficModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DropCause {
    /// Overwritten in a relay queue by a same-generation arrival.
    QueueRewrite,
    /// Same-generation leftover deleted after a coded broadcast.
    Residue,
    /// Displaced from the relay's full sending buffer.
    SendingOverflow,
    /// Rejected by the sink's CRC screening.
    SinkReject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fate {
    Pending,
    Delivered { at_us: Micros },
    ChannelLost,
    Dropped(DropCause),
}

/// Life of one source packet on its way to the opposite sink.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PacketRecord {
    pub src: NodeId,
    pub generation: GenerationId,
    pub origin_us: Micros,
    pub tx_us: Micros,
    pub payload_crc: u32,
    pub fate: Fate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TxRecord {
    pub node: NodeId,
    pub start_us: Micros,
    pub collided: bool,
    /// Intended receivers and whether each got the frame.
    pub receivers: Vec<(NodeId, bool)>,
}

/// Everything a run produced; input to [`super::collect_metrics`].
#[derive(Debug, Clone, Serialize)]
pub struct MacTrace {
    pub duration_us: Micros,
    pub warmup_us: Micros,
    pub airtime_us: Micros,
    pub records: Vec<PacketRecord>,
    pub transmissions: Vec<TxRecord>,
    pub shim: Vec<TraceRecord>,
    pub misdecodes: u64,
}

struct Frame {
    origin_us: Micros,
    packet: Option<Packet>,
}

struct NodeCtx {
    dcf: DcfState,
    hol: Option<Frame>,
    deferred: bool,
    backlog: VecDeque<Micros>,
    /// Oldest generation not yet heard back from the relay.
    heard_next: GenerationId,
    /// Pending window timeout while the window is full.
    stalled_until: Option<Micros>,
}

struct OnAir {
    node: NodeId,
    packet: Packet,
    collided: bool,
}

struct Sim<'a> {
    sc: &'a Scenario,
    format: PacketFormat,
    params: DcfParams,
    csma: bool,
    schedule: TdmaSchedule,
    nc: bool,
    catch_up: bool,
    wake_b_first: bool,
    space: GenerationSpace,
    window: u64,
    window_timeout: Micros,
    airtime: Micros,
    slot_len: Micros,
    end_us: Micros,
    queue: EventQueue,
    nodes: [NodeCtx; 3],
    on_air: Vec<OnAir>,
    idle_since: Micros,
    relay: RelayState,
    endpoints: [EndpointState; 2],
    link: LinkModel,
    rng_mac: ChaCha8Rng,
    rng_link: ChaCha8Rng,
    rng_payload: ChaCha8Rng,
    rng_traffic: ChaCha8Rng,
    arrivals: Option<Exp<f64>>,
    ledger: BTreeMap<(NodeId, GenerationId), usize>,
    records: Vec<PacketRecord>,
    txs: Vec<TxRecord>,
    shim: Vec<TraceRecord>,
    trace: bool,
    misdecodes: u64,
}

fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

/// Runs the event loop for `sc` and returns the raw trace.
pub fn simulate(sc: &Scenario) -> Result<MacTrace> {
    sc.validate()?;
    let mut sim = Sim::new(sc)?;
    sim.run()?;
    Ok(sim.finish())
}

impl<'a> Sim<'a> {
    fn new(sc: &'a Scenario) -> Result<Self> {
        let format = PacketFormat::new(sc.traffic.body_len)?;
        let params = DcfParams {
            slot_us: sc.mac.slot_us,
            sifs_us: sc.mac.sifs_us,
            difs_us: sc.mac.difs_us,
            cw_min: sc.mac.cw_min,
            cw_max: sc.mac.cw_max,
        };
        let schedule = match (sc.mac.tdma, sc.nc.enabled) {
            (TdmaMode::ThreeStep, _) | (TdmaMode::Auto, true) => TdmaSchedule::ThreeStep,
            (TdmaMode::FourStep, _) | (TdmaMode::Auto, false) => TdmaSchedule::FourStep,
        };
        let space = GenerationSpace::new(sc.nc.generation_bits)?;
        let buffer = sc.nc.endpoint_buffer();
        let endpoints = [
            EndpointState::with_space(NodeId::SourceA, format, buffer, space)?,
            EndpointState::with_space(NodeId::SourceB, format, buffer, space)?,
        ];
        let airtime = sc.airtime_us();
        let end_us = (sc.sim.duration_s * 1e6).round() as Micros;
        if end_us == 0 {
            return Err(Error::Config("simulation duration rounds to zero".into()));
        }
        let arrivals = match sc.traffic.model {
            TrafficModel::Saturated => None,
            TrafficModel::Poisson => {
                Some(Exp::new(sc.traffic.rate_pps / 1e6).map_err(|e| Error::Config(format!("traffic.rate_pps: {e}")))?)
            }
        };
        let window = if sc.nc.enabled { sc.nc.source_window() as u64 } else { 0 };
        let window_timeout = sc.nc.window_timeout_us.unwrap_or(5 * airtime);
        let node = || NodeCtx {
            dcf: DcfState::new(&params),
            hol: None,
            deferred: false,
            backlog: VecDeque::new(),
            heard_next: GenerationId(0),
            stalled_until: None,
        };
        let seed = sc.sim.seed;
        Ok(Sim {
            sc,
            format,
            params,
            csma: sc.mac.kind == MacKind::Csma,
            schedule,
            nc: sc.nc.enabled,
            catch_up: sc.nc.catch_up,
            wake_b_first: false,
            space,
            window,
            window_timeout,
            airtime,
            slot_len: airtime + sc.mac.tdma_guard_us,
            end_us,
            queue: EventQueue::new(),
            nodes: [node(), node(), node()],
            on_air: Vec::new(),
            idle_since: 0,
            relay: RelayState::new(format, sc.nc.queue_size, sc.nc.sending_buffer())?,
            endpoints,
            link: LinkModel::from_section(&sc.links, sc.traffic.body_len),
            rng_mac: stream(seed, 1),
            rng_link: stream(seed, 2),
            rng_payload: stream(seed, 3),
            rng_traffic: stream(seed, 4),
            arrivals,
            ledger: BTreeMap::new(),
            records: Vec::new(),
            txs: Vec::new(),
            shim: Vec::new(),
            trace: sc.sim.trace,
            misdecodes: 0,
        })
    }

    fn medium(&self) -> Medium {
        Medium { busy: !self.on_air.is_empty(), idle_since: self.idle_since }
    }

    fn log(&mut self, t_us: Micros, node: NodeId, action: ShimAction, generation: GenerationId) {
        if self.trace {
            self.shim.push(TraceRecord { t_us, node, action, generation });
        }
    }

    fn run(&mut self) -> Result<()> {
        for src in [NodeId::SourceA, NodeId::SourceB] {
            match self.arrivals {
                None => self.refill(src, 0),
                Some(exp) => {
                    let at = exp.sample(&mut self.rng_traffic).ceil() as Micros;
                    self.queue.push(SimEvent::new(at, EventKind::AppArrival, src));
                }
            }
        }
        if !self.csma {
            self.queue.push(SimEvent::new(0, EventKind::SlotBoundary { slot: 0 }, NodeId::Relay));
        }

        while let Some(ev) = self.queue.pop() {
            if ev.time > self.end_us {
                break;
            }
            match ev.kind {
                EventKind::AppArrival => self.on_arrival(ev),
                EventKind::BackoffExpire => self.dcf_dispatch(ev.node, &ev),
                EventKind::TxStart => self.on_tx_start(ev)?,
                EventKind::TxEnd { .. } => self.on_tx_end(ev)?,
                EventKind::RxDeliver { from } => self.on_rx(ev.node, from, ev.time, ev.packet)?,
                EventKind::SlotBoundary { slot } => self.on_slot(slot, ev.time),
                EventKind::WindowTimeout => self.on_window_timeout(ev.node, ev.time),
            }
        }
        Ok(())
    }

    fn finish(self) -> MacTrace {
        MacTrace {
            duration_us: self.end_us,
            warmup_us: (self.sc.sim.warmup_fraction * self.end_us as f64).round() as Micros,
            airtime_us: self.airtime,
            records: self.records,
            transmissions: self.txs,
            shim: self.shim,
            misdecodes: self.misdecodes,
        }
    }

    fn dcf_dispatch(&mut self, node: NodeId, ev: &SimEvent) {
        let medium = self.medium();
        let i = node.index();
        let (next, out) = dcf_step(&self.params, node, self.nodes[i].dcf, ev, medium, &mut self.rng_mac);
        self.nodes[i].dcf = next;
        for e in out {
            self.queue.push(e);
        }
    }

    /// Carrier-sense notification of `ev` to every node but its owner.
    fn dcf_observe(&mut self, ev: &SimEvent) {
        if !self.csma {
            return;
        }
        for node in NodeId::ALL {
            if node != ev.node {
                self.dcf_dispatch(node, ev);
            }
        }
    }

    fn frame_ready(&mut self, node: NodeId, now: Micros) {
        if self.csma {
            self.dcf_dispatch(node, &SimEvent::new(now, EventKind::AppArrival, node));
        }
    }

    /// Loads the next head-of-line frame for `node` if it has none.
    fn refill(&mut self, node: NodeId, now: Micros) {
        let i = node.index();
        if self.nodes[i].hol.is_some() {
            return;
        }
        if node == NodeId::Relay {
            if let Some(packet) = self.relay.pop_outgoing() {
                self.nodes[i].hol = Some(Frame { origin_us: now, packet: Some(packet) });
                self.frame_ready(node, now);
                self.wake_deferred(now);
            }
            return;
        }
        if self.sc.traffic.backpressure && self.relay_credit(node) == 0 {
            self.nodes[i].deferred = true;
            return;
        }
        if self.window_full(node) {
            if self.nodes[i].stalled_until.is_none() {
                let at = now + self.window_timeout;
                self.nodes[i].stalled_until = Some(at);
                self.queue.push(SimEvent::new(at, EventKind::WindowTimeout, node));
            }
            return;
        }
        let origin = match self.arrivals {
            None => Some(now),
            Some(_) => self.nodes[i].backlog.pop_front(),
        };
        if let Some(origin_us) = origin {
            self.nodes[i].deferred = false;
            self.nodes[i].hol = Some(Frame { origin_us, packet: None });
            self.frame_ready(node, now);
        }
    }

    /// Free relay sending slots. Without coding every source frame ends up
    /// in the sending buffer, so a frame already loaded at the other source
    /// claims a slot too.
    fn relay_credit(&self, node: NodeId) -> usize {
        let claimed = NodeId::ALL
            .iter()
            .filter(|&&n| !self.nc && n.is_source() && n != node && self.nodes[n.index()].hol.is_some())
            .count();
        self.relay.sending_capacity().saturating_sub(self.relay.sending_len() + claimed)
    }

    fn window_full(&self, node: NodeId) -> bool {
        if self.window == 0 {
            return false;
        }
        let i = node.index();
        self.space.distance(self.nodes[i].heard_next, self.endpoints[i].counter()) >= self.window
    }

    fn on_window_timeout(&mut self, node: NodeId, now: Micros) {
        let i = node.index();
        if self.nodes[i].stalled_until != Some(now) {
            return;
        }
        self.nodes[i].stalled_until = None;
        self.nodes[i].heard_next = self.space.next(self.nodes[i].heard_next);
        self.refill(node, now);
    }

    /// Moves `node`'s window past `g` if `g` is outstanding, or up to the
    /// counter if `g` is ahead of it.
    fn heard(&mut self, node: NodeId, g: GenerationId, now: Micros) {
        let i = node.index();
        let counter = self.endpoints[i].counter();
        let ctx = &self.nodes[i];
        let outstanding = self.space.distance(ctx.heard_next, counter);
        let offset = self.space.distance(ctx.heard_next, g);
        if offset < outstanding {
            self.nodes[i].heard_next = self.space.next(g);
        } else if offset < self.space.modulus() / 2 {
            self.nodes[i].heard_next = counter;
        } else {
            return;
        }
        if self.nodes[i].stalled_until.take().is_some() {
            self.refill(node, now);
        }
    }

    /// Retries sources held back by backpressure. The source that got the
    /// last free slot goes second next time.
    fn wake_deferred(&mut self, now: Micros) {
        let order =
            if self.wake_b_first { [NodeId::SourceB, NodeId::SourceA] } else { [NodeId::SourceA, NodeId::SourceB] };
        for src in order {
            if self.nodes[src.index()].deferred {
                self.nodes[src.index()].deferred = false;
                self.refill(src, now);
                if self.nodes[src.index()].hol.is_some() {
                    self.wake_b_first = src == NodeId::SourceA;
                }
            }
        }
    }

    fn on_arrival(&mut self, ev: SimEvent) {
        let exp = self.arrivals.expect("arrival events only exist for Poisson traffic");
        let i = ev.node.index();
        self.nodes[i].backlog.push_back(ev.time);
        let next = ev.time + exp.sample(&mut self.rng_traffic).ceil().max(1.0) as Micros;
        self.queue.push(SimEvent::new(next, EventKind::AppArrival, ev.node));
        if !self.nodes[i].deferred {
            self.refill(ev.node, ev.time);
        }
    }

    fn on_slot(&mut self, slot: u64, now: Micros) {
        let owner = tdma_next(self.schedule, slot);
        if owner == NodeId::Relay {
            self.refill(owner, now);
        }
        if self.nodes[owner.index()].hol.is_some() && self.on_air.is_empty() {
            self.queue.push(SimEvent::new(now, EventKind::TxStart, owner));
        }
        let next = now + self.slot_len;
        if next <= self.end_us {
            self.queue.push(SimEvent::new(next, EventKind::SlotBoundary { slot: slot + 1 }, NodeId::Relay));
        }
    }

    fn new_payload(&mut self) -> Vec<u8> {
        let mut payload = vec![0u8; self.format.payload_len()];
        self.rng_payload.fill_bytes(&mut payload);
        payload
    }

    fn on_tx_start(&mut self, ev: SimEvent) -> Result<()> {
        let node = ev.node;
        let now = ev.time;
        let i = node.index();
        if self.nodes[i].hol.is_none() {
            return Ok(());
        }
        if node.is_source() && self.nodes[i].hol.as_ref().unwrap().packet.is_none() {
            let payload = self.new_payload();
            let pkt = self.endpoints[i].source_on_transmit(&payload)?;
            let origin_us = self.nodes[i].hol.as_ref().unwrap().origin_us;
            let record = PacketRecord {
                src: node,
                generation: pkt.generation,
                origin_us,
                tx_us: now,
                payload_crc: compute_crc(&payload),
                fate: Fate::Pending,
            };
            if let Some(&old) = self.ledger.get(&(node, pkt.generation)) {
                if self.records[old].fate == Fate::Pending {
                    self.records[old].fate = Fate::ChannelLost;
                }
            }
            self.ledger.insert((node, pkt.generation), self.records.len());
            self.records.push(record);
            self.log(now, node, ShimAction::Transmit, pkt.generation);
            self.nodes[i].hol.as_mut().unwrap().packet = Some(pkt);
        }
        let packet = self.nodes[i].hol.as_ref().unwrap().packet.clone().unwrap();
        let collided = !self.on_air.is_empty();
        for other in &mut self.on_air {
            other.collided = true;
        }
        self.on_air.push(OnAir { node, packet, collided });
        self.dcf_observe(&ev);
        self.queue.push(SimEvent::new(now + self.airtime, EventKind::TxEnd { collided: false }, node));
        Ok(())
    }

    fn on_tx_end(&mut self, ev: SimEvent) -> Result<()> {
        let node = ev.node;
        let now = ev.time;
        let pos = self.on_air.iter().position(|a| a.node == node).expect("transmission end without a start");
        let OnAir { packet, collided, .. } = self.on_air.remove(pos);
        if self.on_air.is_empty() {
            self.idle_since = now;
        }
        let ev = SimEvent::new(now, EventKind::TxEnd { collided }, node);
        if self.csma {
            self.dcf_dispatch(node, &ev);
        }
        self.dcf_observe(&ev);

        let mut receivers = Vec::new();
        for (rx, content) in self.deliveries(node, &packet) {
            let ok = !collided && link_deliver(node, rx, &self.link, &mut self.rng_link) == LinkOutcome::Delivered;
            receivers.push((rx, ok));
            if ok {
                self.queue
                    .push(SimEvent::new(now, EventKind::RxDeliver { from: node }, rx).with_packet(packet.clone()));
            } else {
                for key in content {
                    self.log(now, rx, ShimAction::ChannelLoss, key.1);
                    self.settle(key, Fate::ChannelLost);
                }
            }
        }
        self.txs.push(TxRecord { node, start_us: now - self.airtime, collided, receivers });
        if collided && self.nc && node.is_source() && self.sc.nc.reclaim_on_collision {
            self.endpoints[node.index()].reclaim(packet.generation);
        }

        self.nodes[node.index()].hol = None;
        self.refill(node, now);
        Ok(())
    }

    /// Intended receivers of `packet` sent by `node`, each with the source
    /// packets it would learn.
    fn deliveries(&self, node: NodeId, packet: &Packet) -> Vec<(NodeId, Vec<(NodeId, GenerationId)>)> {
        let g = packet.generation;
        if node.is_source() {
            return vec![(NodeId::Relay, vec![(node, g)])];
        }
        match (packet.src.peer(), packet.dst) {
            (None, _) => {
                vec![(NodeId::SourceA, vec![(NodeId::SourceB, g)]), (NodeId::SourceB, vec![(NodeId::SourceA, g)])]
            }
            (Some(dst), Address::Broadcast) => vec![(packet.src, vec![]), (dst, vec![(packet.src, g)])],
            (Some(dst), Address::Node(_)) => vec![(dst, vec![(packet.src, g)])],
        }
    }

    fn settle(&mut self, key: (NodeId, GenerationId), fate: Fate) {
        if let Some(&idx) = self.ledger.get(&key) {
            let rec = &mut self.records[idx];
            if rec.fate == Fate::Pending {
                rec.fate = fate;
            }
        }
    }

    fn drop_contents(&mut self, pkt: &Packet, cause: DropCause, now: Micros) {
        self.log(now, NodeId::Relay, ShimAction::SendOverwrite, pkt.generation);
        match pkt.src {
            NodeId::Relay => {
                self.settle((NodeId::SourceA, pkt.generation), Fate::Dropped(cause));
                self.settle((NodeId::SourceB, pkt.generation), Fate::Dropped(cause));
            }
            src => self.settle((src, pkt.generation), Fate::Dropped(cause)),
        }
    }

    fn on_rx(&mut self, node: NodeId, from: NodeId, now: Micros, packet: Option<Packet>) -> Result<()> {
        let pkt = packet.expect("deliveries carry a packet");
        if node == NodeId::Relay {
            debug_assert!(from.is_source());
            let g = pkt.generation;
            let src = pkt.src;
            let step = if self.nc { self.relay.relay_on_receive(pkt)? } else { self.relay.forward_uncoded(pkt)? };
            match step.action {
                RelayAction::BroadcastCoded { residue, .. } => {
                    self.log(now, node, ShimAction::BroadcastCoded, g);
                    if let Some(r) = residue {
                        self.settle((r.src, r.generation), Fate::Dropped(DropCause::Residue));
                    }
                }
                RelayAction::Enqueued { replaced } => {
                    self.log(now, node, ShimAction::Enqueued, g);
                    if let Some(r) = replaced {
                        self.log(now, node, ShimAction::Rewritten, g);
                        self.settle((r.src, r.generation), Fate::Dropped(DropCause::QueueRewrite));
                    }
                    let _ = src;
                }
                RelayAction::EvictAndBroadcastUncoded { evicted } => {
                    self.log(now, node, ShimAction::EvictUncoded, evicted.generation);
                }
                RelayAction::Forwarded => self.log(now, node, ShimAction::Forwarded, g),
            }
            if let Some(lost) = step.overwritten {
                self.drop_contents(&lost, DropCause::SendingOverflow, now);
            }
            if self.nodes[node.index()].hol.is_none() && self.csma {
                self.refill(node, now);
            }
            return Ok(());
        }

        let peer = node.peer().expect("sink has a peer");
        let key = (peer, pkt.generation);
        if self.nc {
            let g = pkt.generation;
            if self.catch_up && self.endpoints[node.index()].catch_up(g) {
                self.log(now, node, ShimAction::CatchUp, g);
            }
            self.heard(node, g, now);
        }
        let result = if self.nc {
            self.endpoints[node.index()].sink_on_receive(&pkt)
        } else if pkt.src == peer && pkt.crc_ok() {
            DeliverResult::PassThrough(pkt.payload().to_vec())
        } else {
            DeliverResult::Dropped(DropReason::Crc)
        };
        match result {
            DeliverResult::Decoded(payload) | DeliverResult::PassThrough(payload) => {
                let action = if pkt.src == NodeId::Relay { ShimAction::Decoded } else { ShimAction::PassThrough };
                self.log(now, node, action, pkt.generation);
                let crc = compute_crc(&payload);
                match self.ledger.get(&key).map(|&i| self.records[i].payload_crc) {
                    Some(expected) if expected == crc => self.settle(key, Fate::Delivered { at_us: now }),
                    _ => self.misdecodes += 1,
                }
            }
            DeliverResult::Dropped(DropReason::OwnPacket) => {}
            DeliverResult::Dropped(_) => {
                self.log(now, node, ShimAction::Dropped, pkt.generation);
                self.settle(key, Fate::Dropped(DropCause::SinkReject));
            }
        }
        Ok(())
    }
}
