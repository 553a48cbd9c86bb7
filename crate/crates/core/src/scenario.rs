//! Scenario files.
//!
//! A scenario is a TOML document with the sections `mac`, `nc`, `links`,
//! `traffic`, `sim` and `phy`. Every key has a default, unknown keys are
//! rejected, and `section.key=value` overrides are applied to the parsed tree
//! before it is validated.
//!
//! ```toml
//! [mac]
//! kind = "csma"
//! rate_bps = 1000000
//!
//! [nc]
//! enabled = true
//! queue_size = 16
//!
//! [links]
//! model = "power"
//! power = { b = 0.5 }
//!
//! [sim]
//! duration_s = 20.0
//! seed = 7
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packet::{NodeId, DEFAULT_BODY_LEN};
use crate::phy::labeling::Objective;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub mac: MacSection,
    pub nc: NcSection,
    pub links: LinksSection,
    pub traffic: TrafficSection,
    pub sim: SimSection,
    pub phy: PhySection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacKind {
    Csma,
    Tdma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TdmaMode {
    /// Three-step when network coding is on, four-step otherwise.
    Auto,
    ThreeStep,
    FourStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacSection {
    pub kind: MacKind,
    pub rate_bps: f64,
    /// Overrides the airtime computed from the body length and rate.
    pub airtime_us: Option<u64>,
    pub slot_us: u64,
    pub sifs_us: u64,
    pub difs_us: u64,
    pub cw_min: u32,
    pub cw_max: u32,
    pub tdma: TdmaMode,
    pub tdma_guard_us: u64,
}

impl Default for MacSection {
    fn default() -> Self {
        MacSection {
            kind: MacKind::Csma,
            rate_bps: 1.0e6,
            airtime_us: None,
            slot_us: 9,
            sifs_us: 16,
            difs_us: 34,
            cw_min: 15,
            cw_max: 1023,
            tdma: TdmaMode::Auto,
            tdma_guard_us: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NcSection {
    pub enabled: bool,
    /// Size of each per-source relay queue.
    pub queue_size: usize,
    /// Endpoint copy buffer; defaults to `queue_size`.
    pub buffer_size: Option<usize>,
    /// Relay sending buffer; defaults to `queue_size`.
    pub send_buffer_size: Option<usize>,
    pub generation_bits: u8,
    /// Sinks move their own counter past any newer generation heard from
    /// the relay.
    pub catch_up: bool,
    /// A source reuses the generation of a packet its MAC saw collide.
    pub reclaim_on_collision: bool,
    /// Most generations a source may have outstanding before it waits to
    /// hear one back from the relay; defaults to the endpoint buffer, 0
    /// turns the limit off.
    pub window: Option<usize>,
    /// How long a source waits on a full window before giving up on its
    /// oldest outstanding generation; defaults to five airtimes.
    pub window_timeout_us: Option<u64>,
}

impl Default for NcSection {
    fn default() -> Self {
        NcSection {
            enabled: true,
            queue_size: crate::ncmac::DEFAULT_QUEUE_SIZE,
            buffer_size: None,
            send_buffer_size: None,
            generation_bits: 32,
            catch_up: true,
            reclaim_on_collision: true,
            window: None,
            window_timeout_us: None,
        }
    }
}

impl NcSection {
    pub fn endpoint_buffer(&self) -> usize {
        self.buffer_size.unwrap_or(self.queue_size)
    }

    pub fn sending_buffer(&self) -> usize {
        self.send_buffer_size.unwrap_or(self.queue_size)
    }

    pub fn source_window(&self) -> usize {
        self.window.unwrap_or_else(|| self.endpoint_buffer())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkLossModel {
    /// Per-link erasure probabilities only.
    Table,
    /// Table losses plus a packet error rate derived from transmit power.
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossTable {
    pub a_to_r: f64,
    pub r_to_a: f64,
    pub b_to_r: f64,
    pub r_to_b: f64,
}

impl Default for LossTable {
    fn default() -> Self {
        LossTable { a_to_r: 0.0, r_to_a: 0.0, b_to_r: 0.0, r_to_b: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerTable {
    pub a: f64,
    pub b: f64,
    pub r: f64,
}

impl Default for PowerTable {
    fn default() -> Self {
        PowerTable { a: 1.0, b: 1.0, r: 1.0 }
    }
}

impl PowerTable {
    pub fn get(&self, node: NodeId) -> f64 {
        match node {
            NodeId::SourceA => self.a,
            NodeId::SourceB => self.b,
            NodeId::Relay => self.r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinksSection {
    pub model: LinkLossModel,
    pub loss: LossTable,
    pub power: PowerTable,
    /// Per-bit SNR at unit transmit power, used by the power model.
    pub nominal_snr_db: f64,
}

impl Default for LinksSection {
    fn default() -> Self {
        LinksSection {
            model: LinkLossModel::Table,
            loss: LossTable::default(),
            power: PowerTable::default(),
            nominal_snr_db: 12.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficModel {
    Saturated,
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficSection {
    pub model: TrafficModel,
    /// Mean arrival rate per source for the Poisson model.
    pub rate_pps: f64,
    pub body_len: usize,
    /// Sources hold new packets while the relay's sending buffer is full.
    pub backpressure: bool,
}

impl Default for TrafficSection {
    fn default() -> Self {
        TrafficSection {
            model: TrafficModel::Saturated,
            rate_pps: 30.0,
            body_len: DEFAULT_BODY_LEN,
            backpressure: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub duration_s: f64,
    pub warmup_fraction: f64,
    pub seed: u64,
    pub trace: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection { duration_s: 20.0, warmup_fraction: 0.1, seed: 1, trace: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Traffic {
    /// BPSK from both sources, QPSK at the relay.
    Symmetric,
    /// BPSK from A, QPSK from B, 8-PSK at the relay.
    Asymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelingKind {
    Gray,
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeKind {
    /// A, B, then one joint-modulated relay broadcast.
    ThreeStep,
    /// A, relay forward, B, relay forward.
    FourStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhySection {
    pub traffic: Traffic,
    pub labeling: LabelingKind,
    pub exchange: ExchangeKind,
    pub snr_db: Vec<f64>,
    /// Exchanges simulated per SNR point.
    pub exchanges: usize,
    pub fec_block_len: usize,
    pub ldpc_iterations: usize,
    pub code_seed: u64,
    /// How the optimal relay labeling is ranked.
    pub objective: Objective,
    /// Random carrier phase per frame instead of h = 1.
    pub random_phase: bool,
}

impl Default for PhySection {
    fn default() -> Self {
        PhySection {
            traffic: Traffic::Symmetric,
            labeling: LabelingKind::Optimal,
            exchange: ExchangeKind::ThreeStep,
            snr_db: (0..=16).map(f64::from).collect(),
            exchanges: 3,
            fec_block_len: 1152,
            ldpc_iterations: 50,
            code_seed: 0x5EED,
            objective: Objective::SinkLeximax,
            random_phase: true,
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

fn probability(name: &str, p: f64) -> Result<()> {
    check((0.0..=1.0).contains(&p), || format!("{name} = {p} is not a probability"))
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text`, applies `key=value` overrides in order, and validates.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut tree: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut tree, o)?;
        }
        Self::from_table(tree)
    }

    /// Deserializes and validates an already assembled table.
    pub fn from_table(tree: toml::Table) -> Result<Self> {
        let scenario: Scenario =
            toml::Value::Table(tree).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.mac;
        check(m.rate_bps.is_finite() && m.rate_bps > 0.0, || "mac.rate_bps must be positive".into())?;
        check(m.airtime_us != Some(0), || "mac.airtime_us must be positive".into())?;
        check(m.slot_us > 0, || "mac.slot_us must be positive".into())?;
        check(m.cw_min >= 1 && m.cw_min <= m.cw_max, || "need 1 <= mac.cw_min <= mac.cw_max".into())?;

        let nc = &self.nc;
        check(nc.queue_size > 0, || "nc.queue_size must be positive".into())?;
        check(nc.endpoint_buffer() > 0, || "nc.buffer_size must be positive".into())?;
        check(nc.sending_buffer() > 0, || "nc.send_buffer_size must be positive".into())?;
        check((1..=32).contains(&nc.generation_bits), || "nc.generation_bits must be in 1..=32".into())?;

        let l = &self.links;
        probability("links.loss.a_to_r", l.loss.a_to_r)?;
        probability("links.loss.r_to_a", l.loss.r_to_a)?;
        probability("links.loss.b_to_r", l.loss.b_to_r)?;
        probability("links.loss.r_to_b", l.loss.r_to_b)?;
        for (name, p) in [("a", l.power.a), ("b", l.power.b), ("r", l.power.r)] {
            check(p.is_finite() && p > 0.0, || format!("links.power.{name} must be positive"))?;
        }
        check(l.nominal_snr_db.is_finite(), || "links.nominal_snr_db must be finite".into())?;

        let t = &self.traffic;
        check(t.body_len > crate::packet::CRC_LEN, || "traffic.body_len too small".into())?;
        check(t.rate_pps.is_finite() && t.rate_pps > 0.0, || "traffic.rate_pps must be positive".into())?;

        let s = &self.sim;
        check(s.duration_s.is_finite() && s.duration_s > 0.0, || "sim.duration_s must be positive".into())?;
        check((0.0..1.0).contains(&s.warmup_fraction), || "sim.warmup_fraction must be in [0, 1)".into())?;

        let p = &self.phy;
        check(!p.snr_db.is_empty(), || "phy.snr_db must list at least one point".into())?;
        check(p.snr_db.iter().all(|x| x.is_finite()), || "phy.snr_db must be finite".into())?;
        check(p.exchanges > 0, || "phy.exchanges must be positive".into())?;
        check(p.fec_block_len >= 12 && p.fec_block_len.is_multiple_of(6) && p.fec_block_len <= 9216, || {
            "phy.fec_block_len must be a multiple of 6 in 12..=9216".into()
        })?;
        check(p.ldpc_iterations > 0, || "phy.ldpc_iterations must be positive".into())?;
        Ok(())
    }

    /// Packet airtime in microseconds.
    pub fn airtime_us(&self) -> u64 {
        self.mac
            .airtime_us
            .unwrap_or_else(|| ((self.traffic.body_len as f64 * 8.0 * 1e6) / self.mac.rate_bps).ceil() as u64)
    }
}

/// Applies one `dotted.key=value` override. The value is read as a TOML
/// literal when possible and as a bare string otherwise.
pub fn apply_override(tree: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) =
        assignment.split_once('=').ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));

    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut table = tree;
    for part in &parts[..parts.len() - 1] {
        let entry = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table =
            entry.as_table_mut().ok_or_else(|| Error::Config(format!("override `{key}` descends into a non-table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
