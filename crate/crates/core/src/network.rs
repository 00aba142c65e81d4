//! Directed communication graphs, trusted-neighbor weight construction and
//! the spectral diagnostics that certify the step-size preconditions.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{powi, spectral_norm, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeLabel {
    Legit,
    Malicious,
}

/// Fixed directed communication graph. Node ids are 0-based; every node is
/// its own in-neighbor (self-loops are added on construction). Labels are
/// simulation ground truth and are never shown to the players.
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    n: usize,
    in_neighbors: Vec<BTreeSet<usize>>,
    labels: Vec<NodeLabel>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkError {
    NodeOutOfRange { id: usize, n: usize },
    LegitSubgraphNotStronglyConnected,
    NotRowStochastic,
    SupportNotStronglyConnected,
    NonPositivePerronEntry { index: usize },
    PowerIterationDiverged,
    ContractionOutOfRange { rho1: f64 },
}

impl fmt::Display for NetworkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkError::NodeOutOfRange { id, n } => {
                write!(f, "node id {id} out of range for {n} nodes")
            }
            NetworkError::LegitSubgraphNotStronglyConnected => {
                write!(f, "the subgraph induced by legitimate players must be strongly connected")
            }
            NetworkError::NotRowStochastic => write!(f, "weight rows must sum to one"),
            NetworkError::SupportNotStronglyConnected => {
                write!(f, "weight support is not strongly connected")
            }
            NetworkError::NonPositivePerronEntry { index } => {
                write!(f, "Perron entry {index} is not positive")
            }
            NetworkError::PowerIterationDiverged => write!(f, "power iteration did not converge"),
            NetworkError::ContractionOutOfRange { rho1 } => {
                write!(f, "contraction factor {rho1} is not inside (0, 1)")
            }
        }
    }
}

impl core::error::Error for NetworkError {}

impl Digraph {
    /// Build from directed edges `(j, i)` meaning `j -> i` (i receives from
    /// j). Self-loops are added for every node. Fails unless the subgraph
    /// induced by the legitimate nodes is strongly connected.
    pub fn new(
        n: usize,
        edges: &[(usize, usize)],
        malicious: &[usize],
    ) -> Result<Self, NetworkError> {
        let mut in_neighbors: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
        for &(j, i) in edges {
            if j >= n || i >= n {
                return Err(NetworkError::NodeOutOfRange { id: j.max(i), n });
            }
            in_neighbors[i].insert(j);
        }
        let mut labels = vec![NodeLabel::Legit; n];
        for &m in malicious {
            if m >= n {
                return Err(NetworkError::NodeOutOfRange { id: m, n });
            }
            labels[m] = NodeLabel::Malicious;
        }
        let legit: BTreeSet<usize> = (0..n).filter(|&i| labels[i] == NodeLabel::Legit).collect();
        if !is_strongly_connected(&in_neighbors, &legit) {
            return Err(NetworkError::LegitSubgraphNotStronglyConnected);
        }
        Ok(Digraph { n, in_neighbors, labels })
    }

    pub fn n_total(&self) -> usize {
        self.n
    }

    pub fn in_neighbors(&self, i: usize) -> &BTreeSet<usize> {
        &self.in_neighbors[i]
    }

    pub fn all_in_neighbors(&self) -> &[BTreeSet<usize>] {
        &self.in_neighbors
    }

    pub fn label(&self, i: usize) -> NodeLabel {
        self.labels[i]
    }

    pub fn legit_ids(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.labels[i] == NodeLabel::Legit).collect()
    }

    pub fn malicious_ids(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.labels[i] == NodeLabel::Malicious).collect()
    }

    /// The graph restricted to its legitimate nodes, ids compacted in rank
    /// order.
    pub fn legit_subgraph(&self) -> Digraph {
        let legit = self.legit_ids();
        let rank: alloc::collections::BTreeMap<usize, usize> =
            legit.iter().enumerate().map(|(r, &g)| (g, r)).collect();
        let in_neighbors: Vec<BTreeSet<usize>> = legit
            .iter()
            .map(|&g| {
                self.in_neighbors[g]
                    .iter()
                    .filter_map(|j| rank.get(j).copied())
                    .collect()
            })
            .collect();
        Digraph {
            n: legit.len(),
            in_neighbors,
            labels: vec![NodeLabel::Legit; legit.len()],
        }
    }
}

/// True iff every ordered pair of `subset` nodes is joined by a directed path
/// inside the induced subgraph: forward and reverse reachability from one
/// representative.
pub fn is_strongly_connected(in_neighbors: &[BTreeSet<usize>], subset: &BTreeSet<usize>) -> bool {
    let Some(&start) = subset.iter().next() else {
        return false;
    };
    // edges j -> i are stored on the receiver; forward reachability follows
    // out-edges, so build both directions over the subset
    let reach = |reverse: bool| -> usize {
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in subset {
                if seen.contains(&v) {
                    continue;
                }
                let connected = if reverse {
                    in_neighbors[u].contains(&v) // v -> u, walk backwards
                } else {
                    in_neighbors[v].contains(&u) // u -> v
                };
                if connected {
                    seen.insert(v);
                    queue.push_back(v);
                }
            }
        }
        seen.len()
    };
    reach(false) == subset.len() && reach(true) == subset.len()
}

/// Row-stochastic weight matrix over trusted in-neighbor sets.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    mat: Matrix,
}

impl WeightMatrix {
    pub fn n(&self) -> usize {
        self.mat.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.mat.row(i)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.mat
    }

    pub fn support(&self) -> Vec<BTreeSet<usize>> {
        (0..self.n())
            .map(|i| (0..self.n()).filter(|&j| self.get(i, j) > 0.0).collect())
            .collect()
    }
}

/// Uniform weights over each node's trusted in-neighbor set: `1/|set|` on
/// members, zero elsewhere. Rows sum to one by construction.
pub fn build_weights(trusted_in_neighbors: &[BTreeSet<usize>]) -> Result<WeightMatrix, NetworkError> {
    let n = trusted_in_neighbors.len();
    let mut mat = Matrix::zeros(n, n);
    for (i, set) in trusted_in_neighbors.iter().enumerate() {
        if !set.contains(&i) {
            return Err(NetworkError::NotRowStochastic);
        }
        let w = 1.0 / set.len() as f64;
        for &j in set {
            if j >= n {
                return Err(NetworkError::NodeOutOfRange { id: j, n });
            }
            mat.set(i, j, w);
        }
    }
    Ok(WeightMatrix { mat })
}

/// Left Perron vector of a row-stochastic matrix: power iteration on the
/// transpose, normalized to sum one, until the sup-norm change drops below
/// `tol`. Rejects matrices whose support is not strongly connected.
pub fn perron_left_vector(a: &WeightMatrix, tol: f64) -> Result<Vec<f64>, NetworkError> {
    let n = a.n();
    for i in 0..n {
        let s: f64 = a.row(i).iter().sum();
        if libm::fabs(s - 1.0) > 1e-12 || a.row(i).iter().any(|&w| w < 0.0) {
            return Err(NetworkError::NotRowStochastic);
        }
    }
    let all: BTreeSet<usize> = (0..n).collect();
    if !is_strongly_connected(&a.support(), &all) {
        return Err(NetworkError::SupportNotStronglyConnected);
    }
    let at = a.as_matrix().transpose();
    let mut v = vec![1.0 / n as f64; n];
    // self-loops make the chain aperiodic, so plain power iteration settles
    let cap = 200_000;
    for _ in 0..cap {
        let mut next = at.matvec(&v);
        let sum: f64 = next.iter().sum();
        for x in &mut next {
            *x /= sum;
        }
        let diff = v
            .iter()
            .zip(&next)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max);
        v = next;
        if diff < tol {
            for (i, &x) in v.iter().enumerate() {
                if x <= 0.0 {
                    return Err(NetworkError::NonPositivePerronEntry { index: i });
                }
            }
            return Ok(v);
        }
    }
    Err(NetworkError::PowerIterationDiverged)
}

/// Spectral diagnostics of a weight matrix under its Perron vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDiagnostics {
    /// Left Perron vector, positive, summing to one.
    pub v: Vec<f64>,
    pub v_min: f64,
    pub v_max: f64,
    /// Weighted induced norm of `A - 1vᵀ`; per-round consensus contraction.
    pub rho1: f64,
    /// Spectral norm of `I - 1vᵀ`.
    pub rho2: f64,
}

/// Contraction diagnostics: `rho1` is the spectral norm of
/// `D^{1/2} (A - 1vᵀ) D^{-1/2}` with `D = diag(v)`, `rho2` the spectral norm
/// of `I - 1vᵀ`; both by dense decomposition.
pub fn contraction_factor(
    a: &WeightMatrix,
    v: &[f64],
) -> Result<SpectralDiagnostics, NetworkError> {
    let n = a.n();
    for (i, &x) in v.iter().enumerate() {
        if x <= 0.0 {
            return Err(NetworkError::NonPositivePerronEntry { index: i });
        }
    }
    let mut dev = Matrix::zeros(n, n);
    for i in 0..n {
        let si = libm::sqrt(v[i]);
        for j in 0..n {
            let sj = libm::sqrt(v[j]);
            dev.set(i, j, si * (a.get(i, j) - v[j]) / sj);
        }
    }
    let rho1 = spectral_norm(&dev);
    let mut eye_dev = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let e = if i == j { 1.0 } else { 0.0 };
            eye_dev.set(i, j, e - v[j]);
        }
    }
    let rho2 = spectral_norm(&eye_dev);
    let v_min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let v_max = v.iter().copied().fold(0.0, f64::max);
    Ok(SpectralDiagnostics { v: v.to_vec(), v_min, v_max, rho1, rho2 })
}

/// Smallest round count `S >= 1` with `rho1^(2S) <= 1/2`, the per-iteration
/// communication budget that keeps the diminishing-step schedule convergent.
pub fn min_rounds_for_corollary(rho1: f64) -> Result<u32, NetworkError> {
    if !(0.0..1.0).contains(&rho1) {
        return Err(NetworkError::ContractionOutOfRange { rho1 });
    }
    let mut s = 1u32;
    while powi(rho1, 2 * s) > 0.5 {
        s += 1;
        if s > 1_000_000 {
            return Err(NetworkError::ContractionOutOfRange { rho1 });
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn sets(groups: &[&[usize]]) -> Vec<BTreeSet<usize>> {
        groups.iter().map(|g| g.iter().copied().collect()).collect()
    }

    #[test]
    fn uniform_weights_examples() {
        let w = build_weights(&sets(&[&[0, 1, 2], &[1], &[2]])).unwrap();
        for j in 0..3 {
            assert!((w.get(0, j) - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(w.get(1, 1), 1.0);
        assert_eq!(w.get(2, 2), 1.0);

        let two = build_weights(&sets(&[&[0, 1], &[0, 1]])).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(two.get(i, j), 0.5);
            }
        }
    }

    #[test]
    fn weights_reject_missing_self() {
        assert!(build_weights(&sets(&[&[1], &[1]])).is_err());
    }

    #[test]
    fn connectivity_examples() {
        // 0 -> 1 -> 2 -> 0
        let cycle = sets(&[&[0, 2], &[0, 1], &[1, 2]]);
        let all: BTreeSet<usize> = (0..3).collect();
        assert!(is_strongly_connected(&cycle, &all));

        // chain 0 -> 1 -> 2 without return edges
        let chain = sets(&[&[0], &[0, 1], &[1, 2]]);
        assert!(!is_strongly_connected(&chain, &all));

        let single = sets(&[&[0]]);
        assert!(is_strongly_connected(&single, &BTreeSet::from([0])));
    }

    #[test]
    fn perron_examples() {
        let half = build_weights(&sets(&[&[0, 1], &[0, 1]])).unwrap();
        let v = perron_left_vector(&half, 1e-13).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-10 && (v[1] - 0.5).abs() < 1e-10);

        // 3-ring with self-loops, each row splits between self and predecessor
        let ring = build_weights(&sets(&[&[0, 2], &[0, 1], &[1, 2]])).unwrap();
        let v = perron_left_vector(&ring, 1e-13).unwrap();
        for &x in &v {
            assert!((x - 1.0 / 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn perron_rejects_reducible_support() {
        // row 0 keeps everything, row 1 leaks to 0: support is not strongly
        // connected and the limit vector would have a zero entry
        let mut mat = Matrix::zeros(2, 2);
        mat.set(0, 0, 1.0);
        mat.set(1, 0, 0.5);
        mat.set(1, 1, 0.5);
        let w = WeightMatrix { mat };
        assert!(matches!(
            perron_left_vector(&w, 1e-12),
            Err(NetworkError::SupportNotStronglyConnected)
        ));
    }

    #[test]
    fn contraction_examples() {
        let half = build_weights(&sets(&[&[0, 1], &[0, 1]])).unwrap();
        let v = perron_left_vector(&half, 1e-13).unwrap();
        let d = contraction_factor(&half, &v).unwrap();
        assert!(d.rho1 < 1e-9, "rank-one matrix contracts in one round");

        // identity mixing never contracts; fed directly since the
        // connectivity check upstream would reject it
        let eye = WeightMatrix { mat: Matrix::identity(2) };
        let d = contraction_factor(&eye, &[0.5, 0.5]).unwrap();
        assert!((d.rho1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn min_rounds_examples() {
        assert_eq!(min_rounds_for_corollary(0.5).unwrap(), 1);
        assert_eq!(min_rounds_for_corollary(0.9).unwrap(), 4);
        assert_eq!(min_rounds_for_corollary(1e-9).unwrap(), 1);
        assert!(min_rounds_for_corollary(1.0).is_err());
    }

    fn random_strong_digraph(rng: &mut CounterRng, n: usize) -> Vec<BTreeSet<usize>> {
        // a ring over a random permutation keeps it strongly connected
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            perm.swap(i, j);
        }
        let mut nbrs: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
        for i in 0..n {
            nbrs[perm[(i + 1) % n]].insert(perm[i]);
        }
        let extra = (rng.next_u64() % (2 * n as u64)) as usize;
        for _ in 0..extra {
            let j = (rng.next_u64() % n as u64) as usize;
            let i = (rng.next_u64() % n as u64) as usize;
            nbrs[i].insert(j);
        }
        nbrs
    }

    #[test]
    fn perron_properties_on_random_graphs() {
        let mut rng = CounterRng::from_words(&[501]);
        for _ in 0..50 {
            let n = 3 + (rng.next_u64() % 18) as usize;
            let nbrs = random_strong_digraph(&mut rng, n);
            let w = build_weights(&nbrs).unwrap();
            let v = perron_left_vector(&w, 1e-13).unwrap();
            assert!(v.iter().all(|&x| x > 0.0));
            // residual of the stationarity equation for v
            let vt_a = w.as_matrix().transpose().matvec(&v);
            let resid = v
                .iter()
                .zip(&vt_a)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(resid < 1e-9, "residual {resid}");

            let d = contraction_factor(&w, &v).unwrap();
            assert!(d.rho1 < 1.0, "rho1 {} for n {}", d.rho1, n);
        }
    }

    #[test]
    fn row_sums_survive_powers() {
        let mut rng = CounterRng::from_words(&[502]);
        let nbrs = random_strong_digraph(&mut rng, 7);
        let w = build_weights(&nbrs).unwrap();
        let mut power = Matrix::identity(7);
        for _ in 0..12 {
            power = w.as_matrix().matmul(&power);
            for i in 0..7 {
                let s: f64 = power.row(i).iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_trusted_sets_rows_sum_to_one() {
        let mut rng = CounterRng::from_words(&[503]);
        for _ in 0..40 {
            let n = 2 + (rng.next_u64() % 12) as usize;
            let mut nbrs: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
            for i in 0..n {
                let extra = (rng.next_u64() % n as u64) as usize;
                for _ in 0..extra {
                    nbrs[i].insert((rng.next_u64() % n as u64) as usize);
                }
            }
            let w = build_weights(&nbrs).unwrap();
            for i in 0..n {
                let s: f64 = w.row(i).iter().sum();
                assert!((s - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn digraph_requires_connected_legit_core() {
        // chain only
        let err = Digraph::new(3, &[(0, 1), (1, 2)], &[]);
        assert!(matches!(err, Err(NetworkError::LegitSubgraphNotStronglyConnected)));
        // cycle passes, and a malicious node may dangle
        let g = Digraph::new(4, &[(0, 1), (1, 2), (2, 0), (3, 0)], &[3]).unwrap();
        assert_eq!(g.legit_ids(), vec![0, 1, 2]);
        assert!(g.in_neighbors(0).contains(&3));
        let sub = g.legit_subgraph();
        assert_eq!(sub.n_total(), 3);
        assert!(!sub.in_neighbors(0).contains(&3));
    }
}
