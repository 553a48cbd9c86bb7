//! End-to-end two-way exchange over the OFDM physical layer.
//!
//! Each source LDPC-encodes random information, interleaves it and sends one
//! frame to the relay. The relay decodes both flows and re-encodes them.
//! In the three-step exchange it then broadcasts one frame whose cell `i`
//! carries the joint word `[a_i ‖ b_i]`; each sink demaps with its own bits
//! as side information. In the four-step exchange the relay forwards each
//! flow in its own frame with the source's modulation.
//!
//! Throughput counts the information bits of codewords that arrive intact
//! at the far sink, divided by the airtime of all frames of the exchange.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::channel::{apply_channel, LinkChannel};
use super::constellation::{pack, Constellation};
use super::demap::{SideInfo, SoftDemapper};
use super::estimate::{equalize, estimate_channel, evm};
use super::interleave::Interleaver;
use super::labeling::search_optimal_labeling;
use super::ldpc::LdpcCode;
use super::ofdm::{build_frame, extract_data, GridPlan, Modem, DATA_CELLS, FRAME_S};
use crate::error::Result;
use crate::scenario::{ExchangeKind, LabelingKind, PhySection, Scenario, Traffic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhyMetrics {
    pub snr_db: f64,
    pub traffic: Traffic,
    pub exchange: ExchangeKind,
    pub labeling: LabelingKind,
    /// Information bits per second delivered from A to B.
    pub throughput_ab: f64,
    pub throughput_ba: f64,
    /// Mean of the two flows.
    pub throughput: f64,
    /// Information bit error rate over both flows.
    pub ber: f64,
    /// Fraction of codewords not delivered intact, over both flows.
    pub fer: f64,
    /// Modulation symbols sent per hop over the whole run.
    pub symbols_per_hop: usize,
}

impl PhyMetrics {
    pub fn scheme(&self) -> &'static str {
        match self.exchange {
            ExchangeKind::ThreeStep => "3-step",
            ExchangeKind::FourStep => "4-step",
        }
    }
}

/// Info blocks sent and recovered for one flow.
type FlowBlocks = (Vec<Vec<u8>>, Vec<Vec<u8>>);

/// Equalized data cells of one received frame with their noise variances.
struct Received {
    symbols: Vec<Complex64>,
    noise: Vec<f64>,
}

/// Everything fixed for a run: code, grid, constellations, interleavers.
pub struct Setup {
    code: LdpcCode,
    plan: GridPlan,
    modem: Modem,
    /// Coded bits per cell from A and from B.
    bits: [usize; 2],
    source: [Constellation; 2],
    relay: Constellation,
    interleavers: [Interleaver; 2],
    /// Full demappers for the source constellations.
    plain: [SoftDemapper; 2],
    /// Sink A knows the leading bits, sink B the trailing ones.
    sink: [SoftDemapper; 2],
    iterations: usize,
    random_phase: bool,
    exchange: ExchangeKind,
}

impl Setup {
    pub fn new(p: &PhySection) -> Result<Self> {
        let bits = match p.traffic {
            Traffic::Symmetric => [1, 1],
            Traffic::Asymmetric => [1, 2],
        };
        let source = [Constellation::gray(1 << bits[0])?, Constellation::gray(1 << bits[1])?];
        let order = 1 << (bits[0] + bits[1]);
        let relay = match p.labeling {
            LabelingKind::Gray => Constellation::gray(order)?,
            LabelingKind::Optimal => search_optimal_labeling(order, (bits[0], bits[1]), p.objective)?.constellation,
        };
        let width = bits[0] + bits[1];
        let sink = [
            SoftDemapper::new(&relay, SideInfo::prefix(width, bits[0], 0).mask),
            SoftDemapper::new(&relay, SideInfo::suffix(bits[1], 0).mask),
        ];
        Ok(Setup {
            code: LdpcCode::new(p.fec_block_len, p.code_seed)?,
            plan: GridPlan::v1(),
            modem: Modem::default(),
            bits,
            plain: [SoftDemapper::new(&source[0], 0), SoftDemapper::new(&source[1], 0)],
            source,
            relay,
            interleavers: [
                Interleaver::new(DATA_CELLS * bits[0], p.code_seed ^ 0xA),
                Interleaver::new(DATA_CELLS * bits[1], p.code_seed ^ 0xB),
            ],
            sink,
            iterations: p.ldpc_iterations,
            random_phase: p.random_phase,
            exchange: p.exchange,
        })
    }

    pub fn relay_constellation(&self) -> &Constellation {
        &self.relay
    }

    /// Whole codewords that fit in one frame for flow `s`.
    pub fn codewords(&self, s: usize) -> usize {
        DATA_CELLS * self.bits[s] / self.code.n()
    }

    fn frames(&self) -> usize {
        match self.exchange {
            ExchangeKind::ThreeStep => 3,
            ExchangeKind::FourStep => 4,
        }
    }

    /// Encoded, zero-padded and interleaved coded bits of flow `s`.
    fn encode_flow(&self, s: usize, info: &[Vec<u8>]) -> Result<Vec<u8>> {
        let mut coded = Vec::with_capacity(DATA_CELLS * self.bits[s]);
        for block in info {
            coded.extend(self.code.encode(block)?);
        }
        coded.resize(DATA_CELLS * self.bits[s], 0);
        Ok(self.interleavers[s].interleave(&coded))
    }

    fn decode_flow(&self, s: usize, llrs: &[f64]) -> Result<Vec<Vec<u8>>> {
        let llrs = self.interleavers[s].deinterleave(llrs);
        llrs.chunks(self.code.n())
            .take(self.codewords(s))
            .map(|c| self.code.decode(c, self.iterations).map(|d| d.info))
            .collect()
    }

    fn send<R: Rng>(&self, symbols: &[Complex64], snr_db: f64, rng: &mut R) -> Result<Received> {
        let h = if self.random_phase {
            Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
        } else {
            Complex64::new(1.0, 0.0)
        };
        let ch = LinkChannel::from_snr_db(h, snr_db);
        let tx = self.modem.modulate(&build_frame(symbols, &self.plan)?);
        let rx = self.modem.demodulate(&apply_channel(&tx, &ch, rng))?;
        let est = estimate_channel(&rx, &self.plan);
        let symbols = extract_data(&equalize(&rx, &est), &self.plan);
        let noise = self.plan.data_cells().iter().map(|&i| ch.sigma2 / est.gains[i].norm_sqr().max(1e-12)).collect();
        Ok(Received { symbols, noise })
    }

    fn cell_words(&self, s: usize, coded: &[u8]) -> Vec<usize> {
        coded.chunks(self.bits[s]).map(pack).collect()
    }

    fn plain_llrs(&self, s: usize, rx: &Received) -> Vec<f64> {
        let mut out = Vec::with_capacity(DATA_CELLS * self.bits[s]);
        for (&y, &n) in rx.symbols.iter().zip(&rx.noise) {
            self.plain[s].llrs(y, 0, n, &mut out);
        }
        out
    }

    fn hop<R: Rng>(&self, s: usize, coded: &[u8], snr_db: f64, rng: &mut R) -> Result<Vec<Vec<u8>>> {
        let symbols = self.source[s].modulate(coded)?;
        let rx = self.send(&symbols, snr_db, rng)?;
        self.decode_flow(s, &self.plain_llrs(s, &rx))
    }

    /// Runs one exchange and returns the info blocks each sink recovered,
    /// indexed by flow (`[A→B, B→A]`), next to what was sent.
    fn exchange<R: Rng>(&self, snr_db: f64, rng: &mut R) -> Result<[FlowBlocks; 2]> {
        let k = self.code.k();
        let sent: [Vec<Vec<u8>>; 2] =
            [0, 1].map(|s| (0..self.codewords(s)).map(|_| (0..k).map(|_| rng.gen_range(0..2u8)).collect()).collect());
        let coded = [self.encode_flow(0, &sent[0])?, self.encode_flow(1, &sent[1])?];

        let at_relay = [self.hop(0, &coded[0], snr_db, rng)?, self.hop(1, &coded[1], snr_db, rng)?];
        let recoded = [self.encode_flow(0, &at_relay[0])?, self.encode_flow(1, &at_relay[1])?];

        let got = match self.exchange {
            ExchangeKind::FourStep => {
                let at_b = self.hop(0, &recoded[0], snr_db, rng)?;
                let at_a = self.hop(1, &recoded[1], snr_db, rng)?;
                [at_b, at_a]
            }
            ExchangeKind::ThreeStep => {
                let wa = self.cell_words(0, &recoded[0]);
                let wb = self.cell_words(1, &recoded[1]);
                let joint: Vec<usize> = wa.iter().zip(&wb).map(|(&a, &b)| (a << self.bits[1]) | b).collect();
                let symbols: Vec<Complex64> = joint.iter().map(|&w| self.relay.map(w)).collect();
                let own_a = self.cell_words(0, &coded[0]);
                let own_b = self.cell_words(1, &coded[1]);

                let rx_a = self.send(&symbols, snr_db, rng)?;
                let mut llr_b = Vec::with_capacity(DATA_CELLS * self.bits[1]);
                for ((&y, &n), &a) in rx_a.symbols.iter().zip(&rx_a.noise).zip(&own_a) {
                    self.sink[0].llrs(y, a << self.bits[1], n, &mut llr_b);
                }
                let rx_b = self.send(&symbols, snr_db, rng)?;
                let mut llr_a = Vec::with_capacity(DATA_CELLS * self.bits[0]);
                for ((&y, &n), &b) in rx_b.symbols.iter().zip(&rx_b.noise).zip(&own_b) {
                    self.sink[1].llrs(y, b, n, &mut llr_a);
                }
                [self.decode_flow(0, &llr_a)?, self.decode_flow(1, &llr_b)?]
            }
        };
        let [s0, s1] = sent;
        let [g0, g1] = got;
        Ok([(s0, g0), (s1, g1)])
    }

    /// Runs `exchanges` exchanges at one SNR point.
    pub fn run_point(&self, p: &PhySection, snr_db: f64, seed: u64) -> Result<PhyMetrics> {
        let mut rng = point_rng(seed, snr_db);
        let k = self.code.k();
        let mut delivered = [0usize; 2];
        let mut bit_errors = 0usize;
        let mut bits = 0usize;
        let mut failed = 0usize;
        let mut blocks = 0usize;
        for _ in 0..p.exchanges {
            for (flow, (sent, got)) in self.exchange(snr_db, &mut rng)?.iter().enumerate() {
                for (u, v) in sent.iter().zip(got) {
                    let e = u.iter().zip(v).filter(|(a, b)| a != b).count();
                    bit_errors += e;
                    bits += k;
                    blocks += 1;
                    if e == 0 {
                        delivered[flow] += k;
                    } else {
                        failed += 1;
                    }
                }
            }
        }
        let airtime = p.exchanges as f64 * self.frames() as f64 * FRAME_S;
        let throughput_ab = delivered[0] as f64 / airtime;
        let throughput_ba = delivered[1] as f64 / airtime;
        Ok(PhyMetrics {
            snr_db,
            traffic: p.traffic,
            exchange: p.exchange,
            labeling: p.labeling,
            throughput_ab,
            throughput_ba,
            throughput: (throughput_ab + throughput_ba) / 2.0,
            ber: bit_errors as f64 / bits as f64,
            fer: failed as f64 / blocks as f64,
            symbols_per_hop: p.exchanges * DATA_CELLS,
        })
    }
}

fn point_rng(seed: u64, snr_db: f64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(snr_db.to_bits());
    rng
}

/// One metrics row per SNR point of the scenario.
pub fn run_phy_exchange(sc: &Scenario) -> Result<Vec<PhyMetrics>> {
    let setup = Setup::new(&sc.phy)?;
    sc.phy.snr_db.iter().map(|&snr| setup.run_point(&sc.phy, snr, sc.sim.seed)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqDump {
    pub snr_db: f64,
    /// Equalized data cells of one relay broadcast as seen by sink A.
    pub received: Vec<Complex64>,
    pub ideal: Vec<Complex64>,
    pub evm: f64,
}

/// Sends one relay frame of random joint words and returns the equalized
/// data cells at one sink.
pub fn constellation_dump(p: &PhySection, snr_db: f64, seed: u64) -> Result<IqDump> {
    let setup = Setup::new(p)?;
    let mut rng = point_rng(seed, snr_db);
    let order = setup.relay.order();
    let ideal: Vec<Complex64> = (0..DATA_CELLS).map(|_| setup.relay.map(rng.gen_range(0..order))).collect();
    let rx = setup.send(&ideal, snr_db, &mut rng)?;
    let evm = evm(&rx.symbols, &ideal);
    Ok(IqDump { snr_db, received: rx.symbols, ideal, evm })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn section(traffic: Traffic, exchange: ExchangeKind, labeling: LabelingKind) -> PhySection {
        PhySection { traffic, exchange, labeling, exchanges: 1, random_phase: true, ..PhySection::default() }
    }

    #[test]
    fn high_snr_is_error_free() {
        for traffic in [Traffic::Symmetric, Traffic::Asymmetric] {
            for exchange in [ExchangeKind::ThreeStep, ExchangeKind::FourStep] {
                for labeling in [LabelingKind::Gray, LabelingKind::Optimal] {
                    let p = section(traffic, exchange, labeling);
                    let m = Setup::new(&p).unwrap().run_point(&p, 30.0, 1).unwrap();
                    assert_eq!(m.ber, 0.0, "{traffic:?} {exchange:?} {labeling:?}");
                    assert_eq!(m.fer, 0.0);
                }
            }
        }
    }

    #[test]
    fn three_step_is_four_thirds_when_clean() {
        let three = section(Traffic::Symmetric, ExchangeKind::ThreeStep, LabelingKind::Optimal);
        let four = section(Traffic::Symmetric, ExchangeKind::FourStep, LabelingKind::Optimal);
        let a = Setup::new(&three).unwrap().run_point(&three, 30.0, 2).unwrap();
        let b = Setup::new(&four).unwrap().run_point(&four, 30.0, 2).unwrap();
        assert!((a.throughput / b.throughput - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_metrics() {
        let p = section(Traffic::Asymmetric, ExchangeKind::ThreeStep, LabelingKind::Optimal);
        let s = Setup::new(&p).unwrap();
        assert_eq!(s.run_point(&p, 4.0, 3).unwrap(), s.run_point(&p, 4.0, 3).unwrap());
    }

    #[test]
    fn dump_evm_at_16_db() {
        let p = section(Traffic::Symmetric, ExchangeKind::ThreeStep, LabelingKind::Optimal);
        let d = constellation_dump(&p, 16.0, 4).unwrap();
        assert_eq!(d.received.len(), DATA_CELLS);
        assert!(d.evm < 0.2, "{}", d.evm);
    }
}
