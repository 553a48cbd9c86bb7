//! PSK constellations and bit labelings.
//!
//! Point `k` of an `M`-PSK constellation sits at angle `2πk/M` on the unit
//! circle. A labeling assigns each `log2(M)`-bit word to one point. Words are
//! read most significant bit first, so the word `[b0, b1, b2]` is the integer
//! `b0·4 + b1·2 + b2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    order: usize,
    /// `point_of[word]` is the point index carrying `word`.
    point_of: Vec<usize>,
    /// Inverse of `point_of`.
    word_at: Vec<usize>,
    points: Vec<Complex64>,
}

pub fn bits_per_symbol(order: usize) -> Result<usize> {
    match order {
        2 => Ok(1),
        4 => Ok(2),
        8 => Ok(3),
        _ => Err(Error::UnsupportedOrder(order)),
    }
}

/// Reflected binary Gray code of `k`.
pub fn gray(k: usize) -> usize {
    k ^ (k >> 1)
}

impl Constellation {
    /// Builds a constellation from `point_of[word] = point index`.
    pub fn new(order: usize, point_of: Vec<usize>) -> Result<Self> {
        bits_per_symbol(order)?;
        if point_of.len() != order {
            return Err(Error::Config(format!(
                "labeling has {} entries for a {order}-point constellation",
                point_of.len()
            )));
        }
        let mut word_at = vec![usize::MAX; order];
        for (word, &p) in point_of.iter().enumerate() {
            if p >= order || word_at[p] != usize::MAX {
                return Err(Error::Config("labeling is not a bijection".into()));
            }
            word_at[p] = word;
        }
        let points = (0..order).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / order as f64)).collect();
        Ok(Constellation { order, point_of, word_at, points })
    }

    /// Gray labeling: point `k` carries the word `gray(k)`.
    pub fn gray(order: usize) -> Result<Self> {
        let mut point_of = vec![0; order];
        for k in 0..order {
            point_of[gray(k)] = k;
        }
        Self::new(order, point_of)
    }

    pub fn bpsk() -> Self {
        Self::gray(2).expect("order 2 is supported")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits(&self) -> usize {
        self.order.trailing_zeros() as usize
    }

    pub fn point_of(&self) -> &[usize] {
        &self.point_of
    }

    pub fn word_at(&self, point: usize) -> usize {
        self.word_at[point]
    }

    /// The unit-circle point for point index `k`.
    pub fn point(&self, k: usize) -> Complex64 {
        self.points[k]
    }

    /// The point carrying `word`.
    pub fn map(&self, word: usize) -> Complex64 {
        self.points[self.point_of[word]]
    }

    /// Maps a bit sequence to symbols, `log2(M)` bits per symbol.
    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let k = self.bits();
        if !bits.len().is_multiple_of(k) {
            return Err(Error::BitAlignment { bits: bits.len(), per_symbol: k });
        }
        Ok(bits.chunks(k).map(|c| self.map(pack(c))).collect())
    }

    /// Nearest-point hard decision over the whole constellation.
    pub fn demodulate(&self, symbols: &[Complex64]) -> Vec<u8> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits());
        for &y in symbols {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for word in 0..self.order {
                let d = (y - self.map(word)).norm_sqr();
                if d < best_d {
                    best_d = d;
                    best = word;
                }
            }
            unpack_into(best, self.bits(), &mut out);
        }
        out
    }
}

/// Packs bits MSB first into a word.
pub fn pack(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
}

pub fn unpack(word: usize, width: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(width);
    unpack_into(word, width, &mut out);
    out
}

pub fn unpack_into(word: usize, width: usize, out: &mut Vec<u8>) {
    for i in (0..width).rev() {
        out.push(((word >> i) & 1) as u8);
    }
}

/// Joint word sent by the relay: source A's bits followed by source B's.
pub fn dfjm_compose(wa: &[u8], wb: &[u8]) -> Vec<u8> {
    let mut w = Vec::with_capacity(wa.len() + wb.len());
    w.extend_from_slice(wa);
    w.extend_from_slice(wb);
    w
}
