//! CSMA/CA distributed coordination function, one state machine per node.
//!
//! The machine sees three kinds of input: its own frame becoming ready
//! (`AppArrival`), its own backoff timer (`BackoffExpire`) and the end of
//! its own transmission (`TxEnd`), plus carrier-sense observations of other
//! nodes' `TxStart`/`TxEnd`. It answers with the events it wants scheduled.

use rand::Rng;

use super::event::{EventKind, Micros, SimEvent};
use crate::packet::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DcfParams {
    pub slot_us: Micros,
    pub sifs_us: Micros,
    pub difs_us: Micros,
    pub cw_min: u32,
    pub cw_max: u32,
}

impl Default for DcfParams {
    /// 802.11a OFDM PHY values.
    fn default() -> Self {
        DcfParams { slot_us: 9, sifs_us: 16, difs_us: 34, cw_min: 15, cw_max: 1023 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcfPhase {
    /// Nothing to send.
    Idle,
    /// Frame pending, medium busy; the backoff counter is frozen.
    Sensing,
    /// Frame pending, medium idle; counting DIFS then backoff slots.
    Backoff,
    Transmitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DcfState {
    pub phase: DcfPhase,
    pub backoff_slots_remaining: u32,
    pub contention_window: u32,
    /// Instant the current countdown's first slot starts (after DIFS).
    pub countdown_from: Micros,
    /// Time of the pending `BackoffExpire`, if any.
    pub expires_at: Option<Micros>,
}

impl DcfState {
    pub fn new(params: &DcfParams) -> Self {
        DcfState {
            phase: DcfPhase::Idle,
            backoff_slots_remaining: 0,
            contention_window: params.cw_min,
            countdown_from: 0,
            expires_at: None,
        }
    }
}

/// What a node senses on the shared medium.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Medium {
    pub busy: bool,
    /// Start of the current idle period (meaningless while busy).
    pub idle_since: Micros,
}

fn start_countdown(
    params: &DcfParams,
    mut s: DcfState,
    node: NodeId,
    from: Micros,
    out: &mut Vec<SimEvent>,
) -> DcfState {
    s.phase = DcfPhase::Backoff;
    s.countdown_from = from;
    let at = from + u64::from(s.backoff_slots_remaining) * params.slot_us;
    s.expires_at = Some(at);
    out.push(SimEvent::new(at, EventKind::BackoffExpire, node));
    s
}

/// Advances `node`'s DCF on `event`. Events for other nodes are treated as
/// carrier-sense observations; `medium` is the state after the event.
pub fn dcf_step<R: Rng + ?Sized>(
    params: &DcfParams,
    node: NodeId,
    state: DcfState,
    event: &SimEvent,
    medium: Medium,
    rng: &mut R,
) -> (DcfState, Vec<SimEvent>) {
    let now = event.time;
    let mut s = state;
    let mut out = Vec::new();

    if event.node != node {
        match event.kind {
            EventKind::TxStart if s.phase == DcfPhase::Backoff => {
                // a node whose timer fires at this very instant cannot hear
                // the other start in time and transmits as well
                if s.expires_at != Some(now) {
                    let elapsed = now.saturating_sub(s.countdown_from) / params.slot_us;
                    s.backoff_slots_remaining = s.backoff_slots_remaining.saturating_sub(elapsed as u32);
                    s.phase = DcfPhase::Sensing;
                    s.expires_at = None;
                }
            }
            EventKind::TxEnd { .. } if s.phase == DcfPhase::Sensing && !medium.busy => {
                s = start_countdown(params, s, node, now + params.difs_us, &mut out);
            }
            _ => {}
        }
        return (s, out);
    }

    match event.kind {
        EventKind::AppArrival if s.phase == DcfPhase::Idle => {
            if !medium.busy && now >= medium.idle_since + params.difs_us {
                s.phase = DcfPhase::Transmitting;
                out.push(SimEvent::new(now, EventKind::TxStart, node));
            } else {
                s.backoff_slots_remaining = rng.gen_range(0..=s.contention_window);
                if medium.busy {
                    s.phase = DcfPhase::Sensing;
                } else {
                    let from = now.max(medium.idle_since + params.difs_us);
                    s = start_countdown(params, s, node, from, &mut out);
                }
            }
        }
        EventKind::BackoffExpire if s.phase == DcfPhase::Backoff && s.expires_at == Some(now) => {
            s.phase = DcfPhase::Transmitting;
            s.backoff_slots_remaining = 0;
            s.expires_at = None;
            out.push(SimEvent::new(now, EventKind::TxStart, node));
        }
        EventKind::TxEnd { collided } if s.phase == DcfPhase::Transmitting => {
            s.contention_window =
                if collided { (2 * s.contention_window + 1).min(params.cw_max) } else { params.cw_min };
            s.phase = DcfPhase::Idle;
            s.expires_at = None;
        }
        _ => {}
    }
    (s, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const A: NodeId = NodeId::SourceA;
    const B: NodeId = NodeId::SourceB;

    fn ev(time: Micros, kind: EventKind, node: NodeId) -> SimEvent {
        SimEvent::new(time, kind, node)
    }

    #[test]
    fn uncontended_access_after_difs() {
        let p = DcfParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = DcfState::new(&p);
        let medium = Medium { busy: false, idle_since: 0 };
        let (s, out) = dcf_step(&p, A, s, &ev(100, EventKind::AppArrival, A), medium, &mut rng);
        assert_eq!(s.phase, DcfPhase::Transmitting);
        assert_eq!(out, vec![ev(100, EventKind::TxStart, A)]);
    }

    #[test]
    fn backoff_freezes_while_busy_and_resumes_after_difs() {
        // hand-stepped: countdown starts at t=1000 with 5 slots of 9 us;
        // another node starts at t=1020, i.e. two whole slots elapsed
        let p = DcfParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = DcfState {
            phase: DcfPhase::Backoff,
            backoff_slots_remaining: 5,
            contention_window: 15,
            countdown_from: 1000,
            expires_at: Some(1045),
        };
        let busy = Medium { busy: true, idle_since: 0 };
        let (s, out) = dcf_step(&p, A, s, &ev(1020, EventKind::TxStart, B), busy, &mut rng);
        assert!(out.is_empty());
        assert_eq!(s.phase, DcfPhase::Sensing);
        assert_eq!(s.backoff_slots_remaining, 3);
        assert_eq!(s.expires_at, None);

        // still frozen with 3 slots while the medium stays busy
        let (s2, out) = dcf_step(&p, A, s, &ev(1500, EventKind::TxStart, NodeId::Relay), busy, &mut rng);
        assert!(out.is_empty());
        assert_eq!(s2.backoff_slots_remaining, 3);

        // medium idle at 9000: DIFS 34 + 3 * 9 = 61 us later
        let idle = Medium { busy: false, idle_since: 9000 };
        let (s3, out) = dcf_step(&p, A, s2, &ev(9000, EventKind::TxEnd { collided: false }, B), idle, &mut rng);
        assert_eq!(s3.phase, DcfPhase::Backoff);
        assert_eq!(out, vec![ev(9061, EventKind::BackoffExpire, A)]);
        let (s4, out) = dcf_step(&p, A, s3, &ev(9061, EventKind::BackoffExpire, A), idle, &mut rng);
        assert_eq!(s4.phase, DcfPhase::Transmitting);
        assert_eq!(out, vec![ev(9061, EventKind::TxStart, A)]);
    }

    #[test]
    fn simultaneous_expiry_is_not_frozen() {
        let p = DcfParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = DcfState {
            phase: DcfPhase::Backoff,
            backoff_slots_remaining: 2,
            contention_window: 15,
            countdown_from: 0,
            expires_at: Some(18),
        };
        let busy = Medium { busy: true, idle_since: 0 };
        let (s, _) = dcf_step(&p, A, s, &ev(18, EventKind::TxStart, B), busy, &mut rng);
        assert_eq!(s.phase, DcfPhase::Backoff);
        let (s, out) = dcf_step(&p, A, s, &ev(18, EventKind::BackoffExpire, A), busy, &mut rng);
        assert_eq!(s.phase, DcfPhase::Transmitting);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn stale_expiry_is_ignored() {
        let p = DcfParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = DcfState { phase: DcfPhase::Sensing, ..DcfState::new(&p) };
        let medium = Medium { busy: true, idle_since: 0 };
        let (s2, out) = dcf_step(&p, A, s, &ev(50, EventKind::BackoffExpire, A), medium, &mut rng);
        assert_eq!(s2, s);
        assert!(out.is_empty());
    }

    #[test]
    fn contention_window_doubles_and_caps() {
        // hand-stepped: 15 -> 31 -> 63 -> ... -> 1023 -> 1023, success -> 15
        let p = DcfParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let medium = Medium { busy: false, idle_since: 0 };
        let mut s = DcfState { phase: DcfPhase::Transmitting, ..DcfState::new(&p) };
        let mut seen = Vec::new();
        for _ in 0..8 {
            s.phase = DcfPhase::Transmitting;
            s = dcf_step(&p, A, s, &ev(10, EventKind::TxEnd { collided: true }, A), medium, &mut rng).0;
            seen.push(s.contention_window);
        }
        assert_eq!(seen, vec![31, 63, 127, 255, 511, 1023, 1023, 1023]);
        s.phase = DcfPhase::Transmitting;
        s = dcf_step(&p, A, s, &ev(10, EventKind::TxEnd { collided: false }, A), medium, &mut rng).0;
        assert_eq!(s.contention_window, 15);
        assert_eq!(s.phase, DcfPhase::Idle);
    }

    #[test]
    fn arrival_right_after_busy_period_draws_backoff() {
        let p = DcfParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let medium = Medium { busy: false, idle_since: 500 };
        let (s, out) = dcf_step(&p, A, DcfState::new(&p), &ev(510, EventKind::AppArrival, A), medium, &mut rng);
        assert_eq!(s.phase, DcfPhase::Backoff);
        assert!(s.backoff_slots_remaining <= 15);
        assert_eq!(s.countdown_from, 534);
        assert_eq!(out[0].time, 534 + u64::from(s.backoff_slots_remaining) * 9);
    }
}
