use serde::Serialize;

use super::engine::{Fate, MacTrace};
use super::event::Micros;
use crate::error::{Error, Result};
use crate::packet::NodeId;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeMetrics {
    pub node: NodeId,
    /// Packets per second delivered to this node from the opposite source.
    pub throughput: f64,
    /// Mean delay of packets delivered to this node, in seconds.
    pub avg_delay: f64,
    pub originated: u64,
    pub delivered: u64,
    /// Fraction of this node's own packets dropped by the shim or a buffer.
    pub loss_rate: f64,
    /// Fraction of this node's own packets lost to collisions or fading.
    pub channel_loss_rate: f64,
    /// Fraction of this node's transmissions that an intended receiver missed.
    pub link_loss_rate: f64,
    pub transmissions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacMetrics {
    /// Mean over the two sinks, packets per second per node.
    pub throughput: f64,
    pub avg_delay: f64,
    /// `avg_delay` in units of one packet airtime.
    pub avg_delay_norm: f64,
    pub loss_rate: f64,
    pub channel_loss_rate: f64,
    pub delivery_ratio: f64,
    pub misdecodes: u64,
    pub window_s: f64,
    pub per_node: Vec<NodeMetrics>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Steady-state metrics over `[warmup_us, duration_us]`.
///
/// Throughput counts deliveries inside the window. Delay and loss fractions
/// are taken over packets first transmitted inside the window; packets still
/// in flight when the run ends are left out of the loss fractions.
pub fn collect_metrics(trace: &MacTrace, warmup_us: Micros) -> Result<MacMetrics> {
    if warmup_us >= trace.duration_us {
        return Err(Error::EmptyWindow);
    }
    let window_s = (trace.duration_us - warmup_us) as f64 / 1e6;
    let in_window = |t: Micros| t >= warmup_us && t <= trace.duration_us;
    if !trace.records.iter().any(|r| in_window(r.tx_us)) {
        return Err(Error::EmptyWindow);
    }

    let mut per_node = Vec::new();
    let mut delay_sum = 0.0;
    let mut delay_n = 0u64;
    let (mut settled, mut dropped, mut lost, mut delivered_total) = (0u64, 0u64, 0u64, 0u64);

    for node in NodeId::ALL {
        let sent: Vec<_> = trace.transmissions.iter().filter(|t| t.node == node && in_window(t.start_us)).collect();
        let attempts: u64 = sent.iter().map(|t| t.receivers.len() as u64).sum();
        let misses: u64 = sent.iter().map(|t| t.receivers.iter().filter(|r| !r.1).count() as u64).sum();
        let link_loss_rate = ratio(misses, attempts);

        let (mut throughput, mut avg_delay) = (0.0, 0.0);
        let (mut originated, mut delivered, mut n_drop, mut n_lost, mut n_settled) = (0, 0, 0, 0, 0);
        if let Some(peer) = node.peer() {
            let mut arrivals = 0u64;
            let mut d_sum = 0.0;
            let mut d_n = 0u64;
            for r in trace.records.iter().filter(|r| r.src == peer) {
                if let Fate::Delivered { at_us } = r.fate {
                    if in_window(at_us) {
                        arrivals += 1;
                    }
                    if in_window(r.tx_us) {
                        d_sum += (at_us - r.origin_us) as f64 / 1e6;
                        d_n += 1;
                    }
                }
            }
            throughput = arrivals as f64 / window_s;
            avg_delay = if d_n == 0 { 0.0 } else { d_sum / d_n as f64 };
            delay_sum += d_sum;
            delay_n += d_n;

            for r in trace.records.iter().filter(|r| r.src == node && in_window(r.tx_us)) {
                originated += 1;
                match r.fate {
                    Fate::Pending => continue,
                    Fate::Delivered { .. } => delivered += 1,
                    Fate::ChannelLost => n_lost += 1,
                    Fate::Dropped(_) => n_drop += 1,
                }
                n_settled += 1;
            }
            settled += n_settled;
            dropped += n_drop;
            lost += n_lost;
            delivered_total += delivered;
        }
        per_node.push(NodeMetrics {
            node,
            throughput,
            avg_delay,
            originated,
            delivered,
            loss_rate: ratio(n_drop, n_settled),
            channel_loss_rate: ratio(n_lost, n_settled),
            link_loss_rate,
            transmissions: sent.len() as u64,
        });
    }

    let sinks: Vec<_> = per_node.iter().filter(|m| m.node.is_source()).collect();
    let throughput = sinks.iter().map(|m| m.throughput).sum::<f64>() / sinks.len() as f64;
    let avg_delay = if delay_n == 0 { 0.0 } else { delay_sum / delay_n as f64 };
    Ok(MacMetrics {
        throughput,
        avg_delay,
        avg_delay_norm: avg_delay * 1e6 / trace.airtime_us as f64,
        loss_rate: ratio(dropped, settled),
        channel_loss_rate: ratio(lost, settled),
        delivery_ratio: ratio(delivered_total, settled),
        misdecodes: trace.misdecodes,
        window_s,
        per_node,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::macsim::engine::{DropCause, PacketRecord};
    use crate::packet::GenerationId;

    fn trace(records: Vec<PacketRecord>) -> MacTrace {
        MacTrace {
            duration_us: 2_000_000,
            warmup_us: 0,
            airtime_us: 8000,
            records,
            transmissions: Vec::new(),
            shim: Vec::new(),
            misdecodes: 0,
        }
    }

    fn rec(src: NodeId, g: u32, origin_us: Micros, fate: Fate) -> PacketRecord {
        PacketRecord { src, generation: GenerationId(g), origin_us, tx_us: origin_us, payload_crc: 0, fate }
    }

    #[test]
    fn throughput_is_count_over_window() {
        let recs = (0..10)
            .map(|g| rec(NodeId::SourceB, g, 1000 * u64::from(g), Fate::Delivered { at_us: 1000 * u64::from(g) + 500 }))
            .collect();
        let m = collect_metrics(&trace(recs), 0).unwrap();
        let a = &m.per_node[0];
        assert_eq!(a.node, NodeId::SourceA);
        assert!((a.throughput - 5.0).abs() < 1e-12);
        assert!((a.avg_delay - 0.0005).abs() < 1e-12);
        assert_eq!(m.per_node[1].delivered, 10);
        assert_eq!(m.loss_rate, 0.0);
    }

    #[test]
    fn drops_and_channel_losses_are_separate() {
        let recs = vec![
            rec(NodeId::SourceA, 0, 10, Fate::Delivered { at_us: 20 }),
            rec(NodeId::SourceA, 1, 10, Fate::Dropped(DropCause::QueueRewrite)),
            rec(NodeId::SourceA, 2, 10, Fate::ChannelLost),
            rec(NodeId::SourceA, 3, 10, Fate::ChannelLost),
            rec(NodeId::SourceA, 4, 10, Fate::Pending),
        ];
        let m = collect_metrics(&trace(recs), 0).unwrap();
        assert!((m.loss_rate - 0.25).abs() < 1e-12);
        assert!((m.channel_loss_rate - 0.5).abs() < 1e-12);
        assert_eq!(m.per_node[0].originated, 5);
    }

    #[test]
    fn warmup_excludes_early_packets() {
        let recs = vec![
            rec(NodeId::SourceA, 0, 10, Fate::Dropped(DropCause::Residue)),
            rec(NodeId::SourceA, 1, 1_500_000, Fate::Delivered { at_us: 1_600_000 }),
        ];
        let m = collect_metrics(&trace(recs), 1_000_000).unwrap();
        assert_eq!(m.loss_rate, 0.0);
        assert!((m.per_node[1].throughput - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_window_is_rejected() {
        assert!(matches!(collect_metrics(&trace(Vec::new()), 0), Err(Error::EmptyWindow)));
        let recs = vec![rec(NodeId::SourceA, 0, 10, Fate::Pending)];
        assert!(matches!(collect_metrics(&trace(recs), 2_000_000), Err(Error::EmptyWindow)));
    }
}
