//! OFDM frame grid and modem.
//!
//! A frame is 220 symbols of 256 subcarriers with a 32-sample cyclic prefix.
//! Subcarrier spacing 21.484 kHz gives a 46.546 µs symbol and 5.818 µs
//! guard, so a frame lasts 11.52 ms.
//!
//! # Grid plan `v1`
//!
//! The 198 used subcarriers are bins −99..=−1 and 1..=99; DC and the outer
//! bins are null. Used bins are numbered `l = 0..198` from the lowest
//! frequency up.
//!
//! * Scattered pilots sit at `l = 11j + 3(t mod 4)` for `j = 0..18`, so each
//!   symbol has 18 and the lattice repeats every four symbols.
//! * Continuation pilots sit at `l = 11j + 10` for
//!   `j ∈ {0,2,3,5,6,8,9,11,12,14,15,17}` in every symbol. No scattered
//!   shift reaches `l ≡ 10 (mod 11)`, so the two never collide.
//! * The remaining 168 used cells carry data.
//!
//! Pilot cells carry `±√2` (3 dB above unit-power data), signs drawn from a
//! fixed seed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};

pub const FFT_LEN: usize = 256;
pub const CP_LEN: usize = 32;
pub const SYMBOLS: usize = 220;
pub const USED: usize = 198;
pub const DATA_PER_SYMBOL: usize = 168;
pub const CONTINUATION_PER_SYMBOL: usize = 12;
pub const SCATTERED_PER_SYMBOL: usize = 18;
pub const DATA_CELLS: usize = DATA_PER_SYMBOL * SYMBOLS;
pub const SCATTER_SPACING: usize = 11;
pub const SCATTER_PERIOD: usize = 4;
pub const SUBCARRIER_SPACING_HZ: f64 = 21_484.375;
/// Frame duration in seconds: 220 symbols of 288 samples at 5.5 MHz.
pub const FRAME_S: f64 = 0.011_52;
pub const PILOT_AMPLITUDE: f64 = std::f64::consts::SQRT_2;

const CONTINUATION_SLOTS: [usize; CONTINUATION_PER_SYMBOL] = [0, 2, 3, 5, 6, 8, 9, 11, 12, 14, 15, 17];
const PILOT_SEED: u64 = 0x0F0F_2011;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Data,
    ContinuationPilot,
    ScatteredPilot,
    Null,
}

/// FFT bin of used subcarrier `l`.
pub fn used_bin(l: usize) -> usize {
    debug_assert!(l < USED);
    let k = if l < USED / 2 { l as isize - 99 } else { l as isize - 98 };
    k.rem_euclid(FFT_LEN as isize) as usize
}

/// Signed subcarrier index of used subcarrier `l`.
pub fn used_freq(l: usize) -> isize {
    if l < USED / 2 {
        l as isize - 99
    } else {
        l as isize - 98
    }
}

/// Offset of the scattered lattice in symbol `t`.
pub fn scatter_shift(t: usize) -> usize {
    3 * (t % SCATTER_PERIOD)
}

#[derive(Debug, Clone)]
pub struct GridPlan {
    kinds: Vec<CellKind>,
    /// Grid offsets of data cells in fill order.
    data: Vec<usize>,
    pilots: Vec<Complex64>,
}

impl GridPlan {
    pub fn v1() -> Self {
        let mut kinds = vec![CellKind::Null; SYMBOLS * FFT_LEN];
        let mut data = Vec::with_capacity(DATA_CELLS);
        let mut pilots = vec![Complex64::new(0.0, 0.0); SYMBOLS * FFT_LEN];
        let mut rng = ChaCha8Rng::seed_from_u64(PILOT_SEED);
        for t in 0..SYMBOLS {
            for l in 0..USED {
                let idx = t * FFT_LEN + used_bin(l);
                let kind = if l % SCATTER_SPACING == scatter_shift(t) {
                    CellKind::ScatteredPilot
                } else if l % SCATTER_SPACING == 10 && CONTINUATION_SLOTS.contains(&(l / SCATTER_SPACING)) {
                    CellKind::ContinuationPilot
                } else {
                    CellKind::Data
                };
                kinds[idx] = kind;
                match kind {
                    CellKind::Data => data.push(idx),
                    _ => {
                        let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                        pilots[idx] = Complex64::new(s * PILOT_AMPLITUDE, 0.0);
                    }
                }
            }
        }
        GridPlan { kinds, data, pilots }
    }

    pub fn kind(&self, symbol: usize, bin: usize) -> CellKind {
        self.kinds[symbol * FFT_LEN + bin]
    }

    /// Known transmitted value of a pilot cell.
    pub fn pilot(&self, symbol: usize, bin: usize) -> Complex64 {
        self.pilots[symbol * FFT_LEN + bin]
    }

    pub fn data_cells(&self) -> &[usize] {
        &self.data
    }

    pub fn census(&self, symbol: usize) -> [usize; 4] {
        let mut n = [0; 4];
        for bin in 0..FFT_LEN {
            n[self.kind(symbol, bin) as usize] += 1;
        }
        n
    }
}

/// Frequency-domain frame: `SYMBOLS` rows of `FFT_LEN` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmGrid {
    pub cells: Vec<Complex64>,
}

impl OfdmGrid {
    pub fn zeros() -> Self {
        OfdmGrid { cells: vec![Complex64::new(0.0, 0.0); SYMBOLS * FFT_LEN] }
    }

    pub fn at(&self, symbol: usize, bin: usize) -> Complex64 {
        self.cells[symbol * FFT_LEN + bin]
    }
}

/// Places data symbols and pilots on the grid.
pub fn build_frame(data: &[Complex64], plan: &GridPlan) -> Result<OfdmGrid> {
    if data.len() != DATA_CELLS {
        return Err(Error::LengthMismatch { left: data.len(), right: DATA_CELLS });
    }
    let mut grid = OfdmGrid { cells: plan.pilots.clone() };
    for (&idx, &x) in plan.data.iter().zip(data) {
        grid.cells[idx] = x;
    }
    Ok(grid)
}

pub fn extract_data(grid: &OfdmGrid, plan: &GridPlan) -> Vec<Complex64> {
    plan.data.iter().map(|&i| grid.cells[i]).collect()
}

/// Unitary 256-point transforms shared by the modulator and demodulator.
#[derive(Clone)]
pub struct Modem {
    ifft: Arc<dyn Fft<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl Default for Modem {
    fn default() -> Self {
        let mut planner = FftPlanner::new();
        Modem { ifft: planner.plan_fft_inverse(FFT_LEN), fft: planner.plan_fft_forward(FFT_LEN) }
    }
}

impl std::fmt::Debug for Modem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Modem")
    }
}

impl Modem {
    pub fn modulate(&self, grid: &OfdmGrid) -> Vec<Complex64> {
        let scale = 1.0 / (FFT_LEN as f64).sqrt();
        let mut out = Vec::with_capacity(SYMBOLS * (FFT_LEN + CP_LEN));
        let mut buf = vec![Complex64::new(0.0, 0.0); FFT_LEN];
        for row in grid.cells.chunks(FFT_LEN) {
            buf.copy_from_slice(row);
            self.ifft.process(&mut buf);
            out.extend(buf[FFT_LEN - CP_LEN..].iter().map(|x| x * scale));
            out.extend(buf.iter().map(|x| x * scale));
        }
        out
    }

    pub fn demodulate(&self, samples: &[Complex64]) -> Result<OfdmGrid> {
        let sym = FFT_LEN + CP_LEN;
        if samples.len() != SYMBOLS * sym {
            return Err(Error::LengthMismatch { left: samples.len(), right: SYMBOLS * sym });
        }
        let scale = 1.0 / (FFT_LEN as f64).sqrt();
        let mut cells = Vec::with_capacity(SYMBOLS * FFT_LEN);
        let mut buf = vec![Complex64::new(0.0, 0.0); FFT_LEN];
        for chunk in samples.chunks(sym) {
            buf.copy_from_slice(&chunk[CP_LEN..]);
            self.fft.process(&mut buf);
            cells.extend(buf.iter().map(|x| x * scale));
        }
        Ok(OfdmGrid { cells })
    }
}

pub fn ofdm_modulate(grid: &OfdmGrid) -> Vec<Complex64> {
    Modem::default().modulate(grid)
}

pub fn ofdm_demodulate(samples: &[Complex64]) -> Result<OfdmGrid> {
    Modem::default().demodulate(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_data(seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..DATA_CELLS).map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..6.3))).collect()
    }

    #[test]
    fn census_per_symbol() {
        let plan = GridPlan::v1();
        for t in 0..SYMBOLS {
            assert_eq!(plan.census(t), [168, 12, 18, 58], "symbol {t}");
        }
        assert_eq!(plan.data_cells().len(), DATA_CELLS);
    }

    #[test]
    fn pilots_are_3db_up() {
        let plan = GridPlan::v1();
        for t in 0..8 {
            for bin in 0..FFT_LEN {
                match plan.kind(t, bin) {
                    CellKind::Data | CellKind::Null => assert_eq!(plan.pilot(t, bin).norm(), 0.0),
                    _ => assert!((plan.pilot(t, bin).norm() - PILOT_AMPLITUDE).abs() < 1e-15),
                }
            }
        }
    }

    #[test]
    fn dc_and_edges_are_null() {
        let plan = GridPlan::v1();
        assert_eq!(plan.kind(0, 0), CellKind::Null);
        assert_eq!(plan.kind(0, 100), CellKind::Null);
        assert_eq!(plan.kind(0, 156), CellKind::Null);
        assert_ne!(plan.kind(0, 99), CellKind::Null);
        assert_ne!(plan.kind(0, 157), CellKind::Null);
    }

    #[test]
    fn build_extract_round_trip() {
        let plan = GridPlan::v1();
        let data = random_data(1);
        assert_eq!(extract_data(&build_frame(&data, &plan).unwrap(), &plan), data);
        assert!(build_frame(&data[1..], &plan).is_err());
    }

    #[test]
    fn modem_round_trip() {
        let plan = GridPlan::v1();
        let grid = build_frame(&random_data(2), &plan).unwrap();
        let back = ofdm_demodulate(&ofdm_modulate(&grid)).unwrap();
        let err: f64 = grid.cells.iter().zip(&back.cells).map(|(a, b)| (a - b).norm_sqr()).sum();
        let norm: f64 = grid.cells.iter().map(|a| a.norm_sqr()).sum();
        assert!((err / norm).sqrt() < 1e-9);
    }

    #[test]
    fn cyclic_prefix_copies_the_tail() {
        let plan = GridPlan::v1();
        let s = ofdm_modulate(&build_frame(&random_data(3), &plan).unwrap());
        let sym = &s[..FFT_LEN + CP_LEN];
        for i in 0..CP_LEN {
            assert!((sym[i] - sym[FFT_LEN + i]).norm() < 1e-15);
        }
    }

    #[test]
    fn single_bin_is_a_sinusoid() {
        let mut grid = OfdmGrid::zeros();
        let bin = 5;
        grid.cells[bin] = Complex64::new(1.0, 0.0);
        let s = ofdm_modulate(&grid);
        let scale = 1.0 / (FFT_LEN as f64).sqrt();
        for n in 0..FFT_LEN {
            let want = Complex64::from_polar(scale, 2.0 * std::f64::consts::PI * (bin * n) as f64 / FFT_LEN as f64);
            assert!((s[CP_LEN + n] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn frame_duration() {
        let symbol_s = 1.0 / SUBCARRIER_SPACING_HZ * (1.0 + CP_LEN as f64 / FFT_LEN as f64);
        assert!((symbol_s * SYMBOLS as f64 - FRAME_S).abs() < 1e-9);
    }
}
