//! Rate-1/2 regular (3,6) LDPC code.
//!
//! The parity-check matrix is drawn from a seed by matching variable-node
//! sockets to check-node sockets at random, with repeated edges swapped out.
//! Encoding is systematic: Gaussian elimination over GF(2) picks one pivot
//! column per independent check, pivots carry parity and the remaining
//! columns carry information. If `H` is rank deficient the surplus columns
//! are frozen to zero so the rate stays exactly 1/2.
//!
//! Decoding is sum-product belief propagation on LLRs `ln P(0)/P(1)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const VAR_DEGREE: usize = 3;
const CHECK_DEGREE: usize = 6;
const LLR_CLAMP: f64 = 30.0;

#[derive(Debug, Clone)]
pub struct LdpcCode {
    n: usize,
    m: usize,
    /// Variable index of each edge; check `c` owns edges `c*6..c*6+6`.
    edge_var: Vec<usize>,
    /// Edges of each variable, `VAR_DEGREE` per variable.
    var_edges: Vec<usize>,
    info_pos: Vec<usize>,
    /// Reduced rows of `H`, one per pivot, as bitsets over columns.
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub info: Vec<u8>,
    /// All parity checks satisfied by the final hard decision.
    pub valid: bool,
    pub iterations: usize,
}

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

impl LdpcCode {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n < 12 || !n.is_multiple_of(CHECK_DEGREE) {
            return Err(Error::Code(format!("block length {n} must be a multiple of 6, at least 12")));
        }
        let m = n / 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edge_var: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, VAR_DEGREE)).collect();
        edge_var.shuffle(&mut rng);
        remove_repeats(&mut edge_var, &mut rng);

        let mut var_edges = vec![Vec::with_capacity(VAR_DEGREE); n];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[v].push(e);
        }
        let var_edges = var_edges.concat();

        let w = words(n);
        let mut h = vec![vec![0u64; w]; m];
        for (e, &v) in edge_var.iter().enumerate() {
            h[e / CHECK_DEGREE][v / 64] ^= 1 << (v % 64);
        }
        let (rows, pivots) = reduce(h, n);
        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let info_pos: Vec<usize> = (0..n).filter(|&j| !is_pivot[j]).take(n / 2).collect();
        Ok(LdpcCode { n, m, edge_var, var_edges, info_pos, rows, pivots })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.n / 2
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(Error::LengthMismatch { left: info.len(), right: self.k() });
        }
        let mut x = vec![0u64; words(self.n)];
        for (&p, &b) in self.info_pos.iter().zip(info) {
            if b & 1 == 1 {
                x[p / 64] |= 1 << (p % 64);
            }
        }
        let parities: Vec<bool> = self
            .rows
            .iter()
            .map(|row| row.iter().zip(&x).map(|(a, b)| (a & b).count_ones()).sum::<u32>() % 2 == 1)
            .collect();
        for (&p, par) in self.pivots.iter().zip(parities) {
            if par {
                x[p / 64] |= 1 << (p % 64);
            }
        }
        Ok((0..self.n).map(|j| ((x[j / 64] >> (j % 64)) & 1) as u8).collect())
    }

    /// True when every parity check holds.
    pub fn check(&self, word: &[u8]) -> bool {
        self.edge_var.chunks(CHECK_DEGREE).all(|vars| vars.iter().fold(0u8, |acc, &v| acc ^ word[v]) == 0)
    }

    pub fn extract_info(&self, word: &[u8]) -> Vec<u8> {
        self.info_pos.iter().map(|&p| word[p]).collect()
    }

    /// Sum-product decoding with early exit once all checks hold.
    pub fn decode(&self, llr: &[f64], max_iterations: usize) -> Result<Decoded> {
        if llr.len() != self.n {
            return Err(Error::LengthMismatch { left: llr.len(), right: self.n });
        }
        let ch: Vec<f64> = llr.iter().map(|l| l.clamp(-LLR_CLAMP, LLR_CLAMP)).collect();
        let mut v2c: Vec<f64> = self.edge_var.iter().map(|&v| ch[v]).collect();
        let mut c2v = vec![0.0; v2c.len()];
        let mut hard: Vec<u8> = ch.iter().map(|&l| u8::from(l < 0.0)).collect();
        if self.check(&hard) {
            return Ok(Decoded { info: self.extract_info(&hard), valid: true, iterations: 0 });
        }
        for it in 1..=max_iterations {
            for c in 0..self.m {
                let base = c * CHECK_DEGREE;
                let mut t = [0.0f64; CHECK_DEGREE];
                for i in 0..CHECK_DEGREE {
                    t[i] = (v2c[base + i] / 2.0).tanh();
                }
                let mut prefix = [1.0f64; CHECK_DEGREE + 1];
                for i in 0..CHECK_DEGREE {
                    prefix[i + 1] = prefix[i] * t[i];
                }
                let mut suffix = 1.0;
                for i in (0..CHECK_DEGREE).rev() {
                    let p = (prefix[i] * suffix).clamp(-0.999_999_999_999, 0.999_999_999_999);
                    c2v[base + i] = 2.0 * p.atanh();
                    suffix *= t[i];
                }
            }
            for v in 0..self.n {
                let edges = &self.var_edges[v * VAR_DEGREE..(v + 1) * VAR_DEGREE];
                let total = ch[v] + edges.iter().map(|&e| c2v[e]).sum::<f64>();
                for &e in edges {
                    v2c[e] = (total - c2v[e]).clamp(-LLR_CLAMP, LLR_CLAMP);
                }
                hard[v] = u8::from(total < 0.0);
            }
            if self.check(&hard) {
                return Ok(Decoded { info: self.extract_info(&hard), valid: true, iterations: it });
            }
        }
        Ok(Decoded { info: self.extract_info(&hard), valid: false, iterations: max_iterations })
    }
}

/// Swaps edges until no check is connected twice to the same variable.
fn remove_repeats(edge_var: &mut [usize], rng: &mut ChaCha8Rng) {
    let total = edge_var.len();
    loop {
        let mut clean = true;
        for e in 0..total {
            let c = e / CHECK_DEGREE;
            let base = c * CHECK_DEGREE;
            let dup = (base..base + CHECK_DEGREE).any(|f| f != e && edge_var[f] == edge_var[e]);
            if dup {
                clean = false;
                let other = rng.gen_range(0..total);
                edge_var.swap(e, other);
            }
        }
        if clean {
            return;
        }
    }
}

/// Row-reduces `h` to reduced echelon form. Returns the nonzero rows and
/// the pivot column of each.
fn reduce(mut h: Vec<Vec<u64>>, n: usize) -> (Vec<Vec<u64>>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        if r == h.len() {
            break;
        }
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (r..h.len()).find(|&i| h[i][w] & bit != 0) else {
            continue;
        };
        h.swap(r, p);
        let pivot_row = h[r].clone();
        for (i, row) in h.iter_mut().enumerate() {
            if i != r && row[w] & bit != 0 {
                for (a, b) in row.iter_mut().zip(&pivot_row) {
                    *a ^= b;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    h.truncate(r);
    // The pivot bit itself is zero in the codeword when parities are
    // computed, so the rows can keep it.
    (h, pivots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::channel::complex_noise;

    fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
        (0..n).map(|_| rng.gen_range(0..2)).collect()
    }

    #[test]
    fn regular_degrees() {
        let code = LdpcCode::new(96, 1).unwrap();
        let mut deg = vec![0; 96];
        for &v in &code.edge_var {
            deg[v] += 1;
        }
        assert!(deg.iter().all(|&d| d == 3));
        for vars in code.edge_var.chunks(6) {
            let mut s = vars.to_vec();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), 6);
        }
    }

    #[test]
    fn zero_word_is_a_codeword() {
        let code = LdpcCode::new(1152, 7).unwrap();
        let cw = code.encode(&vec![0; 576]).unwrap();
        assert!(cw.iter().all(|&b| b == 0));
        assert!(code.check(&cw));
    }

    #[test]
    fn encoded_words_satisfy_checks_and_decode() {
        let code = LdpcCode::new(1152, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let u = random_bits(&mut rng, 576);
            let cw = code.encode(&u).unwrap();
            assert!(code.check(&cw));
            assert_eq!(code.extract_info(&cw), u);
            let llr: Vec<f64> = cw.iter().map(|&b| if b == 0 { 8.0 } else { -8.0 }).collect();
            let d = code.decode(&llr, 50).unwrap();
            assert!(d.valid);
            assert_eq!(d.info, u);
        }
    }

    #[test]
    fn decoding_beats_raw_bpsk_at_4_db() {
        let code = LdpcCode::new(1152, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sigma2 = 10f64.powf(-0.4);
        let (mut raw, mut coded) = (0usize, 0usize);
        for _ in 0..20 {
            let u = random_bits(&mut rng, 576);
            let cw = code.encode(&u).unwrap();
            let llr: Vec<f64> = cw
                .iter()
                .map(|&b| {
                    let x = if b == 0 { 1.0 } else { -1.0 };
                    let y = x + complex_noise(&mut rng, sigma2).re;
                    4.0 * y / sigma2
                })
                .collect();
            raw += llr.iter().zip(&cw).filter(|(l, &b)| (**l < 0.0) != (b == 1)).count();
            let d = code.decode(&llr, 50).unwrap();
            coded += d.info.iter().zip(&u).filter(|(a, b)| a != b).count();
        }
        assert!(raw > 0);
        assert!(coded < raw / 10, "coded {coded} raw {raw}");
    }

    #[test]
    fn bad_lengths_are_rejected() {
        assert!(LdpcCode::new(100, 1).is_err());
        let code = LdpcCode::new(24, 1).unwrap();
        assert!(code.encode(&[0; 3]).is_err());
        assert!(code.decode(&[0.0; 5], 5).is_err());
    }
}
