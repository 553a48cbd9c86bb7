//! Named experiment presets and the sweep runners behind them.

use rayon::prelude::*;
use serde::Serialize;
use wnc::macsim::{run_scenario, MacMetrics};
use wnc::phy::{constellation_dump, PhyMetrics, Setup};
use wnc::scenario::{ExchangeKind, LabelingKind, PhySection, Scenario, Traffic};
use wnc::NodeId;

use crate::config::{CliError, Sources};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Mac,
    Phy,
}

pub struct Preset {
    pub name: &'static str,
    pub kind: Kind,
    pub about: &'static str,
    /// Settings below the user's config file.
    pub base: &'static [&'static str],
}

const MAC_BASE: &[&str] = &["mac.kind=csma", "mac.airtime_us=8000", "traffic.model=saturated"];

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig_throughput",
        kind: Kind::Mac,
        about: "queue size 1..32 with network coding on and off",
        base: MAC_BASE,
    },
    Preset {
        name: "fig_asym",
        kind: Kind::Mac,
        about: "power of B at 1, 1/2, 1/4, 1/8 with network coding on",
        base: &[
            "mac.kind=csma",
            "mac.airtime_us=8000",
            "traffic.model=saturated",
            "links.model=power",
            "nc.enabled=true",
        ],
    },
    Preset {
        name: "fig_phy_throughput",
        kind: Kind::Phy,
        about: "per-flow throughput against SNR for 3-step optimal, 3-step Gray and 4-step",
        base: &[],
    },
    Preset {
        name: "fig_constellation",
        kind: Kind::Phy,
        about: "equalized relay constellation at 16 dB, symmetric and asymmetric",
        base: &[],
    },
];

pub fn find(name: &str) -> Result<&'static Preset, CliError> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        CliError::Config(format!("unknown preset `{name}` (known: {})", known.join(", ")))
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MacRow {
    pub queue_size: usize,
    pub nc: bool,
    pub power_b: f64,
    pub seed: u64,
    pub throughput: f64,
    pub delay: f64,
    pub delay_norm: f64,
    pub loss: f64,
    pub channel_loss: f64,
    pub delivery_ratio: f64,
    pub misdecodes: u64,
    pub throughput_a: f64,
    pub throughput_b: f64,
    pub loss_a: f64,
    pub loss_b: f64,
    pub link_loss_a: f64,
    pub link_loss_b: f64,
}

impl MacRow {
    pub const KEYS: &'static [&'static str] = &["queue_size", "nc", "power_b"];

    fn new(sc: &Scenario, m: &MacMetrics) -> Self {
        let node = |id: NodeId| m.per_node.iter().find(|n| n.node == id).expect("per-node metrics for each source");
        let (a, b) = (node(NodeId::SourceA), node(NodeId::SourceB));
        MacRow {
            queue_size: sc.nc.queue_size,
            nc: sc.nc.enabled,
            power_b: sc.links.power.b,
            seed: sc.sim.seed,
            throughput: m.throughput,
            delay: m.avg_delay,
            delay_norm: m.avg_delay_norm,
            loss: m.loss_rate,
            channel_loss: m.channel_loss_rate,
            delivery_ratio: m.delivery_ratio,
            misdecodes: m.misdecodes,
            throughput_a: a.throughput,
            throughput_b: b.throughput,
            loss_a: a.loss_rate,
            loss_b: b.loss_rate,
            link_loss_a: a.link_loss_rate,
            link_loss_b: b.link_loss_rate,
        }
    }

    /// Queue size, coding off before on, power of B descending, seed.
    fn order(&self, other: &Self) -> std::cmp::Ordering {
        (self.queue_size, self.nc)
            .cmp(&(other.queue_size, other.nc))
            .then(other.power_b.total_cmp(&self.power_b))
            .then(self.seed.cmp(&other.seed))
    }
}

/// Resolves one scenario per sweep point and seed. Everything is validated
/// before anything runs.
fn resolve_grid(src: &Sources, base: &[&str], points: &[Vec<String>], reps: u64) -> Result<Vec<Scenario>, CliError> {
    let first = src.resolve(base, &[])?.sim.seed;
    let mut out = Vec::new();
    for p in points {
        for r in 0..reps {
            let mut sweep = p.clone();
            sweep.push(format!("sim.seed={}", first.wrapping_add(r)));
            out.push(src.resolve(base, &sweep)?);
        }
    }
    Ok(out)
}

pub fn run_mac(scenarios: &[Scenario]) -> Result<Vec<MacRow>, CliError> {
    let mut rows = scenarios
        .par_iter()
        .map(|sc| run_scenario(sc).map(|m| MacRow::new(sc, &m)).map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(MacRow::order);
    Ok(rows)
}

pub fn mac_points(preset: &Preset, src: &Sources, reps: u64) -> Result<Vec<Scenario>, CliError> {
    let points: Vec<Vec<String>> = match preset.name {
        "fig_throughput" => [1, 2, 4, 8, 16, 32]
            .iter()
            .flat_map(|q| [true, false].map(|nc| vec![format!("nc.queue_size={q}"), format!("nc.enabled={nc}")]))
            .collect(),
        "fig_asym" => [1.0, 0.5, 0.25, 0.125].iter().map(|b| vec![format!("links.power.b={b:?}")]).collect(),
        other => return Err(CliError::Config(format!("`{other}` is not a MAC preset"))),
    };
    resolve_grid(src, preset.base, &points, reps)
}

#[derive(Debug, Clone, Serialize)]
pub struct PhyRow {
    pub snr_db: f64,
    pub scheme: String,
    pub labeling: String,
    pub throughput: f64,
    pub ber: f64,
    pub fer: f64,
    pub traffic: String,
    pub throughput_ab: f64,
    pub throughput_ba: f64,
    pub symbols_per_hop: usize,
}

impl PhyRow {
    pub const KEYS: &'static [&'static str] = &["traffic", "scheme", "labeling", "snr_db"];

    fn new(m: &PhyMetrics) -> Self {
        PhyRow {
            snr_db: m.snr_db,
            scheme: m.scheme().to_string(),
            labeling: label(m.labeling).to_string(),
            throughput: m.throughput,
            ber: m.ber,
            fer: m.fer,
            traffic: traffic_name(m.traffic).to_string(),
            throughput_ab: m.throughput_ab,
            throughput_ba: m.throughput_ba,
            symbols_per_hop: m.symbols_per_hop,
        }
    }
}

fn label(l: LabelingKind) -> &'static str {
    match l {
        LabelingKind::Gray => "gray",
        LabelingKind::Optimal => "optimal",
    }
}

pub fn traffic_name(t: Traffic) -> &'static str {
    match t {
        Traffic::Symmetric => "symmetric",
        Traffic::Asymmetric => "asymmetric",
    }
}

/// Runs every SNR point of every section, in parallel across points.
pub fn run_phy(sections: &[PhySection], seed: u64) -> Result<Vec<PhyRow>, CliError> {
    let setups = sections.iter().map(Setup::new).collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, f64)> =
        sections.iter().enumerate().flat_map(|(i, p)| p.snr_db.iter().map(move |&s| (i, s))).collect();
    let mut rows = jobs
        .par_iter()
        .map(|&(i, snr)| setups[i].run_point(&sections[i], snr, seed).map(|m| PhyRow::new(&m)))
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| {
        (&a.traffic, &a.scheme, &a.labeling)
            .cmp(&(&b.traffic, &b.scheme, &b.labeling))
            .then(a.snr_db.total_cmp(&b.snr_db))
    });
    Ok(rows)
}

/// The three curves of the throughput figure for both traffic patterns.
pub fn phy_curves(base: &PhySection) -> Vec<PhySection> {
    let mut out = Vec::new();
    for traffic in [Traffic::Symmetric, Traffic::Asymmetric] {
        for (exchange, labeling) in [
            (ExchangeKind::ThreeStep, LabelingKind::Optimal),
            (ExchangeKind::ThreeStep, LabelingKind::Gray),
            (ExchangeKind::FourStep, LabelingKind::Gray),
        ] {
            out.push(PhySection { traffic, exchange, labeling, ..base.clone() });
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct IqRow {
    pub traffic: String,
    pub i: f64,
    pub q: f64,
    pub ideal_i: f64,
    pub ideal_q: f64,
}

pub const CONSTELLATION_SNR_DB: f64 = 16.0;

/// EVM per traffic pattern.
pub type Evms = Vec<(String, f64)>;

/// Equalized relay constellations; returns rows and `(traffic, evm)`.
pub fn run_constellation(base: &PhySection, seed: u64) -> Result<(Vec<IqRow>, Evms), CliError> {
    let mut rows = Vec::new();
    let mut evms = Vec::new();
    for traffic in [Traffic::Symmetric, Traffic::Asymmetric] {
        let p = PhySection { traffic, ..base.clone() };
        let d = constellation_dump(&p, CONSTELLATION_SNR_DB, seed)?;
        let name = traffic_name(traffic).to_string();
        rows.extend(d.received.iter().zip(&d.ideal).map(|(r, x)| IqRow {
            traffic: name.clone(),
            i: r.re,
            q: r.im,
            ideal_i: x.re,
            ideal_q: x.im,
        }));
        evms.push((name, d.evm));
    }
    Ok((rows, evms))
}
