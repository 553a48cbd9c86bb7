//! Subset-partition demapping.
//!
//! A sink that already knows some bits of the relay's joint word only has to
//! choose among the points whose labels agree with those bits. Bit positions
//! count from the most significant bit of the word, so position 0 is the
//! first bit of `[w_A ‖ w_B]`.

use num_complex::Complex64;

use super::channel::LinkChannel;
use super::constellation::{unpack, Constellation};
use crate::error::{Error, Result};

/// Bits of the joint word known in advance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SideInfo {
    /// Word mask of the known positions.
    pub mask: usize,
    /// Known bit values, already placed under `mask`.
    pub value: usize,
}

impl SideInfo {
    pub const NONE: SideInfo = SideInfo { mask: 0, value: 0 };

    /// Side information from explicit positions and bit values.
    pub fn new(width: usize, positions: &[usize], bits: &[u8]) -> Result<Self> {
        if positions.len() != bits.len() {
            return Err(Error::LengthMismatch { left: positions.len(), right: bits.len() });
        }
        let mut side = SideInfo::NONE;
        for (&p, &b) in positions.iter().zip(bits) {
            if p >= width {
                return Err(Error::Config(format!("bit position {p} outside a {width}-bit word")));
            }
            let m = 1 << (width - 1 - p);
            side.mask |= m;
            if b & 1 == 1 {
                side.value |= m;
            }
        }
        Ok(side)
    }

    /// The first `n` bits are known and equal `prefix`.
    pub fn prefix(width: usize, n: usize, prefix: usize) -> Self {
        let shift = width - n;
        SideInfo { mask: ((1 << n) - 1) << shift, value: prefix << shift }
    }

    /// The last `n` bits are known and equal `suffix`.
    pub fn suffix(n: usize, suffix: usize) -> Self {
        SideInfo { mask: (1 << n) - 1, value: suffix }
    }

    pub fn admits(&self, word: usize) -> bool {
        word & self.mask == self.value
    }
}

fn metric(y: Complex64, gain: Complex64, x: Complex64) -> f64 {
    (y - gain * x).norm_sqr()
}

/// Free positions of a word under `mask`, as single-bit masks, most
/// significant first.
fn free_bits(width: usize, mask: usize) -> Vec<usize> {
    (0..width).rev().map(|i| 1 << i).filter(|m| mask & m == 0).collect()
}

/// Scatters the bits of `u` over `free` (MSB of `u` to the first entry).
fn deposit(u: usize, free: &[usize]) -> usize {
    let n = free.len();
    free.iter().enumerate().fold(0, |acc, (i, &m)| if (u >> (n - 1 - i)) & 1 == 1 { acc | m } else { acc })
}

/// Full joint word chosen by the side-information-restricted minimum
/// distance rule. Ties go to the lowest word.
pub fn subset_demap_word(y: Complex64, side: SideInfo, c: &Constellation, ch: &LinkChannel) -> usize {
    let free = free_bits(c.bits(), side.mask);
    let gain = ch.gain();
    let mut best = side.value;
    let mut best_d = f64::INFINITY;
    for u in 0..1usize << free.len() {
        let word = side.value | deposit(u, &free);
        let d = metric(y, gain, c.map(word));
        if d < best_d {
            best_d = d;
            best = word;
        }
    }
    best
}

/// The unknown bits of the decided word, in position order.
pub fn subset_demap(y: Complex64, side: SideInfo, c: &Constellation, ch: &LinkChannel) -> Vec<u8> {
    let width = c.bits();
    let word = subset_demap_word(y, side, c, ch);
    unpack(word, width)
        .into_iter()
        .enumerate()
        .filter(|&(p, _)| side.mask & (1 << (width - 1 - p)) == 0)
        .map(|(_, b)| b)
        .collect()
}

/// Reference minimization: scan every word and keep the admissible ones.
pub fn brute_force_demap_word(y: Complex64, side: SideInfo, c: &Constellation, ch: &LinkChannel) -> usize {
    let gain = ch.gain();
    (0..c.order())
        .filter(|&w| side.admits(w))
        .map(|w| (metric(y, gain, c.map(w)), w))
        .fold((f64::INFINITY, usize::MAX), |best, cur| if cur.0 < best.0 { cur } else { best })
        .1
}

/// Max-log soft demapper for a fixed constellation and known-bit mask.
///
/// LLRs are `ln P(b=0)/P(b=1)` for each free position in order.
#[derive(Debug, Clone)]
pub struct SoftDemapper {
    free: Vec<usize>,
    /// `candidates[v]` lists `(word, point)` admissible under known value `v`.
    candidates: Vec<Vec<(usize, Complex64)>>,
    mask: usize,
}

impl SoftDemapper {
    pub fn new(c: &Constellation, mask: usize) -> Self {
        let free = free_bits(c.bits(), mask);
        let candidates = (0..c.order())
            .map(|v| {
                if v & !mask != 0 {
                    return Vec::new();
                }
                (0..1usize << free.len())
                    .map(|u| {
                        let w = v | deposit(u, &free);
                        (w, c.map(w))
                    })
                    .collect()
            })
            .collect();
        SoftDemapper { free, candidates, mask }
    }

    pub fn free_bits(&self) -> usize {
        self.free.len()
    }

    /// Appends one LLR per free bit. `y` is the equalized sample and
    /// `sigma2` its noise variance.
    pub fn llrs(&self, y: Complex64, known: usize, sigma2: f64, out: &mut Vec<f64>) {
        let cands = &self.candidates[known & self.mask];
        let mut d = [0.0f64; 8];
        for (slot, &(_, x)) in d.iter_mut().zip(cands) {
            *slot = (y - x).norm_sqr();
        }
        for &m in &self.free {
            let mut d0 = f64::INFINITY;
            let mut d1 = f64::INFINITY;
            for (i, &(w, _)) in cands.iter().enumerate() {
                if w & m == 0 {
                    d0 = d0.min(d[i]);
                } else {
                    d1 = d1.min(d[i]);
                }
            }
            out.push((d1 - d0) / sigma2);
        }
    }
}
