//! Abstract lossy links between the three nodes.

use rand::Rng;

use crate::packet::NodeId;
use crate::scenario::{LinkLossModel, LinksSection};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkOutcome {
    Delivered,
    Lost,
}

/// Bit error rate of coherent BPSK on AWGN at per-bit SNR `snr` (linear).
pub fn bpsk_ber(snr: f64) -> f64 {
    0.5 * libm::erfc(snr.max(0.0).sqrt())
}

/// Packet erasure probability for `bits` independent bit decisions.
pub fn packet_error_rate(ber: f64, bits: usize) -> f64 {
    // 1 - (1 - ber)^bits, stable for tiny ber
    -f64::exp_m1(bits as f64 * f64::ln_1p(-ber))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    /// Erasure probability indexed `[src][dst]`.
    pub per_link_loss: [[f64; 3]; 3],
    /// Relative transmit power per node, 1.0 nominal.
    pub tx_power: [f64; 3],
    /// When set, power-dependent packet errors on top of the table:
    /// (per-bit SNR at unit power, bits per packet).
    pub power_loss: Option<(f64, usize)>,
}

impl LinkModel {
    pub fn lossless() -> Self {
        LinkModel { per_link_loss: [[0.0; 3]; 3], tx_power: [1.0; 3], power_loss: None }
    }

    pub fn from_section(links: &LinksSection, body_len: usize) -> Self {
        let mut per_link_loss = [[0.0; 3]; 3];
        let (a, b, r) = (NodeId::SourceA.index(), NodeId::SourceB.index(), NodeId::Relay.index());
        per_link_loss[a][r] = links.loss.a_to_r;
        per_link_loss[r][a] = links.loss.r_to_a;
        per_link_loss[b][r] = links.loss.b_to_r;
        per_link_loss[r][b] = links.loss.r_to_b;
        let tx_power = [links.power.a, links.power.b, links.power.r];
        let power_loss = match links.model {
            LinkLossModel::Table => None,
            LinkLossModel::Power => Some((10f64.powf(links.nominal_snr_db / 10.0), body_len * 8)),
        };
        LinkModel { per_link_loss, tx_power, power_loss }
    }

    pub fn loss_probability(&self, src: NodeId, dst: NodeId) -> f64 {
        let table = self.per_link_loss[src.index()][dst.index()];
        match self.power_loss {
            None => table,
            Some((snr, bits)) => {
                let per = packet_error_rate(bpsk_ber(snr * self.tx_power[src.index()]), bits);
                1.0 - (1.0 - table) * (1.0 - per)
            }
        }
    }
}

/// Draws the fate of one collision-free transmission from `src` to `dst`.
pub fn link_deliver<R: Rng + ?Sized>(src: NodeId, dst: NodeId, model: &LinkModel, rng: &mut R) -> LinkOutcome {
    let p = model.loss_probability(src, dst);
    if p <= 0.0 {
        LinkOutcome::Delivered
    } else if p >= 1.0 || rng.gen::<f64>() < p {
        LinkOutcome::Lost
    } else {
        LinkOutcome::Delivered
    }
}
