//! Exhaustive search for relay labelings that suit side-information
//! demapping.
//!
//! For a split `(nA, nB)`, sink A knows the first `nA` bits of each joint
//! word and sink B the last `nB`. Each known value leaves a subset of
//! candidate points; what matters to a sink is how far apart the points of
//! its subsets are.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::constellation::{bits_per_symbol, Constellation};
use crate::error::{Error, Result};

/// Largest order the exhaustive search accepts.
pub const MAX_SEARCH_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Best sink distance first, then the other sink, then the averages.
    #[default]
    SinkLeximax,
    /// Smallest distance over both sinks first, then the averages.
    GlobalMinFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelingScore {
    /// Minimum intra-subset distance over sink A's subsets.
    pub sink_a: f64,
    pub sink_b: f64,
    /// Mean over all subsets of both sinks of the subset's minimum distance.
    pub mean_subset_min: f64,
    /// Mean over subsets and free bits of the closest pair differing in
    /// that bit.
    pub mean_bitwise_min: f64,
}

fn q(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

impl LabelingScore {
    fn key(&self, objective: Objective) -> [i64; 4] {
        let hi = self.sink_a.max(self.sink_b);
        let lo = self.sink_a.min(self.sink_b);
        match objective {
            Objective::SinkLeximax => [q(hi), q(lo), q(self.mean_subset_min), q(self.mean_bitwise_min)],
            Objective::GlobalMinFirst => [q(lo), q(self.mean_subset_min), q(self.mean_bitwise_min), 0],
        }
    }

    pub fn compare(&self, other: &LabelingScore, objective: Objective) -> Ordering {
        self.key(objective).cmp(&other.key(objective))
    }
}

fn check_split(order: usize, split: (usize, usize)) -> Result<usize> {
    if order > MAX_SEARCH_ORDER {
        return Err(Error::SearchBudget(order));
    }
    let bits = bits_per_symbol(order)?;
    if split.0 == 0 || split.1 == 0 || split.0 + split.1 != bits {
        return Err(Error::InvalidSplit { a: split.0, b: split.1, bits });
    }
    Ok(bits)
}

/// Word sets seen by one sink: `(subsets, free bit masks)`.
fn subsets(split: (usize, usize)) -> [(Vec<Vec<usize>>, Vec<usize>); 2] {
    let (na, nb) = split;
    let a = (0..1 << na).map(|p| (0..1 << nb).map(|u| (p << nb) | u).collect()).collect();
    let b = (0..1 << nb).map(|s| (0..1 << na).map(|u| (u << nb) | s).collect()).collect();
    [(a, (0..nb).map(|i| 1 << i).collect()), (b, (nb..nb + na).map(|i| 1 << i).collect())]
}

/// Scores a labeling for the given split.
pub fn score(c: &Constellation, split: (usize, usize)) -> Result<LabelingScore> {
    check_split(c.order(), split)?;
    let families = subsets(split);
    let dist = |u: usize, v: usize| (c.map(u) - c.map(v)).norm();
    let mut sink_min = [f64::INFINITY; 2];
    let mut subset_sum = 0.0;
    let mut subset_n = 0usize;
    let mut bit_sum = 0.0;
    let mut bit_n = 0usize;
    for (s, (family, free)) in families.iter().enumerate() {
        for set in family {
            let mut m = f64::INFINITY;
            for (i, &u) in set.iter().enumerate() {
                for &v in &set[i + 1..] {
                    m = m.min(dist(u, v));
                }
            }
            sink_min[s] = sink_min[s].min(m);
            subset_sum += m;
            subset_n += 1;
            for &bit in free {
                let mut mb = f64::INFINITY;
                for &u in set {
                    for &v in set {
                        if u & bit == 0 && v & bit != 0 {
                            mb = mb.min(dist(u, v));
                        }
                    }
                }
                bit_sum += mb;
                bit_n += 1;
            }
        }
    }
    Ok(LabelingScore {
        sink_a: sink_min[0],
        sink_b: sink_min[1],
        mean_subset_min: subset_sum / subset_n as f64,
        mean_bitwise_min: bit_sum / bit_n as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub constellation: Constellation,
    pub score: LabelingScore,
    pub examined: usize,
}

/// Rearranges `v` into the next permutation in lexicographic order.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("pivot has a successor");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn search(order: usize, split: (usize, usize), objective: Objective, pin_zero: bool) -> Result<SearchResult> {
    check_split(order, split)?;
    let mut perm: Vec<usize> = (0..order).collect();
    let start = usize::from(pin_zero);
    let mut best: Option<(Constellation, LabelingScore)> = None;
    let mut examined = 0;
    loop {
        let c = Constellation::new(order, perm.clone())?;
        let s = score(&c, split)?;
        examined += 1;
        if best.as_ref().is_none_or(|(_, b)| s.compare(b, objective) == Ordering::Greater) {
            best = Some((c, s));
        }
        if !next_permutation(&mut perm[start..]) {
            break;
        }
    }
    let (constellation, score) = best.expect("at least one labeling");
    Ok(SearchResult { constellation, score, examined })
}

/// Best labeling under `objective`. Rotating every point leaves all
/// distances unchanged, so word 0 is pinned to point 0.
pub fn search_optimal_labeling(order: usize, split: (usize, usize), objective: Objective) -> Result<SearchResult> {
    search(order, split, objective, true)
}

/// Same search over all `M!` labelings without the rotation reduction.
pub fn exhaustive_search(order: usize, split: (usize, usize), objective: Objective) -> Result<SearchResult> {
    search(order, split, objective, false)
}
