//! Seeded pseudo-random bit interleaver.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    /// Output position `i` takes input `perm[i]`.
    perm: Vec<usize>,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Interleaver { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn interleave<T: Copy>(&self, input: &[T]) -> Vec<T> {
        assert_eq!(input.len(), self.perm.len(), "interleaver length");
        self.perm.iter().map(|&p| input[p]).collect()
    }

    pub fn deinterleave<T: Copy + Default>(&self, input: &[T]) -> Vec<T> {
        assert_eq!(input.len(), self.perm.len(), "interleaver length");
        let mut out = vec![T::default(); input.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = input[i];
        }
        out
    }
}
