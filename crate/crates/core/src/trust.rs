//! Stochastic trust observations, cumulative trustworthiness scores,
//! neighbor classification, and the misclassification probability bounds.
//!
//! Each directed edge carries a random observation in [0, 1] per
//! communication round; the running sum of (observation − 1/2) classifies
//! the sender: nonnegative means legitimate. The bounds below are Hoeffding
//! envelopes on wrong classification and on the final settling time of the
//! classification process.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::rng::CounterRng;

/// Uniform trust-observation distribution on `[lo, hi] ⊆ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustEdgeModel {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrustError {
    InvalidSupport { lo: f64, hi: f64 },
}

impl fmt::Display for TrustError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrustError::InvalidSupport { lo, hi } => {
                write!(f, "trust support [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1")
            }
        }
    }
}

impl core::error::Error for TrustError {}

impl TrustEdgeModel {
    pub fn new(lo: f64, hi: f64) -> Result<Self, TrustError> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(TrustError::InvalidSupport { lo, hi });
        }
        Ok(TrustEdgeModel { lo, hi })
    }

    /// Expected drift per observation: mean minus one half.
    pub fn drift(&self) -> f64 {
        0.5 * (self.lo + self.hi) - 0.5
    }
}

/// One trust observation.
pub fn sample_tau(model: &TrustEdgeModel, rng: &mut CounterRng) -> f64 {
    rng.uniform(model.lo, model.hi)
}

/// Cumulative trust scores of one observer network and the trusted sets they
/// induce. Self-trust is structural: a node never distrusts itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustLedger {
    beta: BTreeMap<(usize, usize), f64>,
    trusted: Vec<BTreeSet<usize>>,
    changed: Vec<bool>,
}

impl TrustLedger {
    /// Start from zero scores over the given in-neighbor sets: everyone is
    /// trusted initially (a zero score classifies as legitimate).
    pub fn new(in_neighbors: &[BTreeSet<usize>], observers: &[usize]) -> Self {
        let n = in_neighbors.len();
        let mut beta = BTreeMap::new();
        for &i in observers {
            for &j in &in_neighbors[i] {
                if j != i {
                    beta.insert((i, j), 0.0);
                }
            }
        }
        let trusted: Vec<BTreeSet<usize>> =
            (0..n).map(|i| in_neighbors[i].clone()).collect();
        TrustLedger { beta, trusted, changed: alloc::vec![false; n] }
    }

    pub fn beta(&self, i: usize, j: usize) -> f64 {
        self.beta.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&(usize, usize), &f64)> {
        self.beta.iter()
    }

    /// Current trusted in-neighbor set of observer `i`.
    pub fn trusted(&self, i: usize) -> &BTreeSet<usize> {
        &self.trusted[i]
    }

    pub fn changed(&self, i: usize) -> bool {
        self.changed[i]
    }

    /// Add one iteration's observations on edge `(i, j)` and recompute the
    /// observer's trusted set. Scores move by `Σ (τ − 1/2)`.
    pub fn update_beta(&mut self, i: usize, j: usize, taus: &[f64]) {
        let delta: f64 = taus.iter().map(|t| t - 0.5).sum();
        if let Some(b) = self.beta.get_mut(&(i, j)) {
            *b += delta;
        } else {
            self.beta.insert((i, j), delta);
        }
        self.recompute_trusted(i);
    }

    /// Recompute `i`'s trusted set from the current scores; the boundary
    /// score zero classifies as legitimate.
    pub fn recompute_trusted(&mut self, i: usize) {
        let mut set = BTreeSet::from([i]);
        for (&(o, j), &b) in self.beta.range((i, 0)..=(i, usize::MAX)) {
            debug_assert_eq!(o, i);
            if b >= 0.0 {
                set.insert(j);
            }
        }
        if set != self.trusted[i] {
            self.trusted[i] = set;
            self.changed[i] = true;
        } else {
            self.changed[i] = false;
        }
    }

    /// Clear change flags (start of a fresh iteration).
    pub fn clear_changed(&mut self) {
        for c in &mut self.changed {
            *c = false;
        }
    }
}

/// Hoeffding bound on wrongly classifying across an edge with drift `e`
/// after the observations of iterations `1..=k`:
/// `exp(−2 e² Σ_{m<=k} S_m)`.
pub fn misclass_bound(e: f64, rounds: impl Fn(u32) -> u32, k: u32) -> f64 {
    let total: u64 = (1..=k).map(|m| rounds(m) as u64).sum();
    libm::exp(-2.0 * e * e * total as f64)
}

/// Point bound on the final classification-settling iteration:
/// `P{settle = k} <= exp(−2 e_min² Σ_{m<=k−1} S_m)`.
pub fn tf_tail_bound(e_min: f64, rounds: impl Fn(u32) -> u32, k: u32) -> f64 {
    debug_assert!(k >= 2);
    let total: u64 = (1..k).map(|m| rounds(m) as u64).sum();
    libm::exp(-2.0 * e_min * e_min * total as f64)
}

/// Geometric-majorant tail: `P{settle + n' > k} <= e^{−2e²(k−n')}/(1−e^{−2e²})`.
pub fn tf_cumulative_tail_bound(e_min: f64, n_prime: usize, k: u32) -> f64 {
    let rate = 2.0 * e_min * e_min;
    libm::exp(-rate * (k as f64 - n_prime as f64)) / (1.0 - libm::exp(-rate))
}

/// A single classification change: at iteration `k`, observer `i` flipped its
/// view of neighbor `j` (`trusted_now` is the new state).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassificationChange {
    pub k: u32,
    pub observer: usize,
    pub neighbor: usize,
    pub trusted_now: bool,
}

/// Final settling iteration of a change log: the iteration of the last
/// change, 1 when nothing ever changed, `None` when the log still changes at
/// the final iteration (stability cannot be certified inside the horizon).
pub fn observe_tf(changes: &[ClassificationChange], horizon: u32) -> Option<u32> {
    let last = changes.iter().map(|c| c.k).max().unwrap_or(1).max(1);
    if changes.is_empty() {
        return Some(1);
    }
    if last >= horizon {
        None
    } else {
        Some(last)
    }
}

/// Analytic mean of the score after the observations of iterations
/// `1..k` (exclusive): `e · Σ_{m<k} S_m`.
pub fn expected_beta(e: f64, rounds: impl Fn(u32) -> u32, k: u32) -> f64 {
    let total: u64 = (1..k).map(|m| rounds(m) as u64).sum();
    e * total as f64
}
