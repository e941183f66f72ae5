//! Exact, centralized reference computations used only for verification:
//! matrix-power walk distributions, naive token walks, stationary
//! distributions, mixing times, lazy-chain quantities, and spanning-tree
//! counts. Nothing here touches the round engine; protocol results are
//! checked against this module, never derived from it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Graph, NodeId};

pub const MASS_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("graph is bipartite; the walk from a single node does not mix")]
    Bipartite,
    #[error("integer overflow in spanning tree count (graph too large)")]
    Overflow,
    #[error("mixing search exceeded {0} steps")]
    MixingSearchExhausted(usize),
}

/// Exact probability vector over nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub probs: Vec<f64>,
}

impl Distribution {
    pub fn point_mass(n: usize, at: NodeId) -> Self {
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Distribution { probs }
    }

    pub fn from_counts(counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        assert!(total > 0, "empty sample");
        Distribution {
            probs: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        }
    }

    /// Entries non-negative and summing to 1 within `MASS_TOLERANCE`.
    pub fn validate(&self) -> bool {
        self.probs.iter().all(|&p| p >= -MASS_TOLERANCE)
            && (self.probs.iter().sum::<f64>() - 1.0).abs() <= MASS_TOLERANCE
    }

    pub fn l1_distance(&self, other: &Distribution) -> f64 {
        l1(&self.probs, &other.probs)
    }

    /// Total variation distance: half the L1 distance.
    pub fn tv_distance(&self, other: &Distribution) -> f64 {
        0.5 * self.l1_distance(other)
    }

    /// Inverse-CDF sample.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> NodeId {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Small dense row-major square matrix; enough for desk-scale chains.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul(&self, other: &SquareMatrix) -> SquareMatrix {
        let n = self.n;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn pow(&self, mut e: u64) -> SquareMatrix {
        let mut base = self.clone();
        let mut acc = SquareMatrix::identity(self.n);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for j in 0..n {
                out[j] += vi * self.at(i, j);
            }
        }
        out
    }
}

/// Which chain a `ChainSpec` describes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainKind {
    Simple,
    Lazy,
    MetropolisHastings,
}

/// A row-stochastic transition matrix together with the quantities the
/// kernel-decay bounds are phrased in: its stationary vector and
/// `c = min { pi(x) Q(x,y) : x != y, Q(x,y) > 0 }`.
#[derive(Debug, Clone)]
pub struct ChainSpec {
    pub kind: ChainKind,
    pub transition: SquareMatrix,
    pub stationary: Vec<f64>,
    pub c: f64,
}

impl ChainSpec {
    /// The simple random walk: from v, each neighbor with probability
    /// 1/deg(v). For this chain c = 1/(2m).
    pub fn simple(g: &Graph) -> Self {
        let n = g.n();
        let mut t = SquareMatrix::zeros(n);
        for u in 0..n {
            let p = 1.0 / g.degree(u) as f64;
            for &v in g.adj(u) {
                t.set(u, v, p);
            }
        }
        let stationary = stationary(g).probs;
        let c = transiting_min(&t, &stationary);
        ChainSpec {
            kind: ChainKind::Simple,
            transition: t,
            stationary,
            c,
        }
    }

    /// The lazy chain Q = (I + P)/2.
    pub fn lazy(g: &Graph) -> Self {
        let simple = Self::simple(g);
        let n = g.n();
        let mut t = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = 0.5 * simple.transition.at(i, j) + if i == j { 0.5 } else { 0.0 };
                t.set(i, j, v);
            }
        }
        let c = transiting_min(&t, &simple.stationary);
        ChainSpec {
            kind: ChainKind::Lazy,
            transition: t,
            stationary: simple.stationary,
            c,
        }
    }

    /// Metropolis-Hastings chain targeting `pi` with laziness factor
    /// `alpha`: P_ij = alpha * min(1/d_i, pi_j / (pi_i d_j)) for neighbors,
    /// remainder as a self-loop. `pi` is normalized here.
    pub fn metropolis_hastings(g: &Graph, pi: &[f64], alpha: f64) -> Self {
        assert!(pi.iter().all(|&p| p > 0.0), "target weights must be positive");
        assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
        let n = g.n();
        let total: f64 = pi.iter().sum();
        let pi: Vec<f64> = pi.iter().map(|p| p / total).collect();
        let mut t = SquareMatrix::zeros(n);
        for i in 0..n {
            let mut stay = 1.0;
            let di = g.degree(i) as f64;
            for &j in g.adj(i) {
                let dj = g.degree(j) as f64;
                let p = alpha * (1.0 / di).min(pi[j] / (pi[i] * dj));
                t.set(i, j, p);
                stay -= p;
            }
            t.set(i, i, stay);
        }
        let c = transiting_min(&t, &pi);
        ChainSpec {
            kind: ChainKind::MetropolisHastings,
            transition: t,
            stationary: pi,
            c,
        }
    }

    /// Rows sum to 1 within tolerance.
    pub fn validate(&self) -> bool {
        let n = self.transition.n;
        (0..n).all(|i| {
            let s: f64 = (0..n).map(|j| self.transition.at(i, j)).sum();
            (s - 1.0).abs() <= MASS_TOLERANCE
        })
    }
}

fn transiting_min(t: &SquareMatrix, pi: &[f64]) -> f64 {
    let n = t.n;
    let mut c = f64::INFINITY;
    for x in 0..n {
        for y in 0..n {
            if x != y && t.at(x, y) > 0.0 {
                c = c.min(pi[x] * t.at(x, y));
            }
        }
    }
    c
}

/// Exact t-step distribution of the chain started at `s`.
pub fn walk_distribution(g: &Graph, s: NodeId, t: u64, chain: &ChainSpec) -> Distribution {
    assert!(s < g.n());
    if t <= 512 {
        let mut row = Distribution::point_mass(g.n(), s).probs;
        for _ in 0..t {
            row = chain.transition.vec_mul(&row);
        }
        Distribution { probs: row }
    } else {
        let p = chain.transition.pow(t);
        Distribution {
            probs: (0..g.n()).map(|j| p.at(s, j)).collect(),
        }
    }
}

/// A sampled simple-walk trajectory of `t` steps starting at `s`
/// (t+1 nodes including the start).
pub fn naive_walk(g: &Graph, s: NodeId, t: u64, seed: u64) -> Vec<NodeId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut traj = Vec::with_capacity(t as usize + 1);
    let mut cur = s;
    traj.push(cur);
    for _ in 0..t {
        let nbrs = g.adj(cur);
        cur = nbrs[rng.gen_range(0..nbrs.len())];
        traj.push(cur);
    }
    traj
}

/// Stationary distribution of the simple walk: deg(v) / 2m.
pub fn stationary(g: &Graph) -> Distribution {
    let two_m = (2 * g.m()) as f64;
    Distribution {
        probs: (0..g.n()).map(|v| g.degree(v) as f64 / two_m).collect(),
    }
}

/// Smallest t with ||pi_x(t) - pi||_1 < delta, by direct search. The search
/// is valid because the L1 distance is monotone non-increasing in t.
/// Bipartite graphs are rejected: the distance need not fall below small
/// deltas there.
pub fn exact_mixing(g: &Graph, x: NodeId, delta: f64) -> Result<u64, OracleError> {
    assert!(delta > 0.0 && delta <= 2.0, "delta must be in (0, 2]");
    if g.is_bipartite() {
        return Err(OracleError::Bipartite);
    }
    const CAP: usize = 1_000_000;
    let chain = ChainSpec::simple(g);
    let pi = &chain.stationary;
    let mut row = Distribution::point_mass(g.n(), x).probs;
    for t in 0..=CAP as u64 {
        if l1(&row, pi) < delta {
            return Ok(t);
        }
        row = chain.transition.vec_mul(&row);
    }
    Err(OracleError::MixingSearchExhausted(CAP))
}

/// Number of labeled spanning trees via the Laplacian cofactor, computed
/// exactly with fraction-free (Bareiss) elimination over i128.
pub fn spanning_tree_count(g: &Graph) -> Result<u64, OracleError> {
    let n = g.n();
    // Laplacian minor: delete row and column 0.
    let k = n - 1;
    let mut a = vec![vec![0i128; k]; k];
    for i in 0..k {
        a[i][i] = g.degree(i + 1) as i128;
        for &j in g.adj(i + 1) {
            if j >= 1 {
                a[i][j - 1] = -1;
            }
        }
    }
    // Bareiss: exact integer determinant.
    let mut sign = 1i128;
    let mut prev = 1i128;
    for col in 0..k {
        if a[col][col] == 0 {
            let swap = (col + 1..k).find(|&r| a[r][col] != 0);
            match swap {
                Some(r) => {
                    a.swap(col, r);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in col + 1..k {
            for j in col + 1..k {
                let num = a[i][j]
                    .checked_mul(a[col][col])
                    .and_then(|x| {
                        a[i][col]
                            .checked_mul(a[col][j])
                            .and_then(|y| x.checked_sub(y))
                    })
                    .ok_or(OracleError::Overflow)?;
                a[i][j] = num / prev;
            }
            a[i][col] = 0;
        }
        prev = a[col][col];
    }
    let det = sign * a[k - 1][k - 1];
    u64::try_from(det).map_err(|_| OracleError::Overflow)
}

/// Eigenvalues of the simple-walk transition matrix, descending. P is
/// similar to the symmetric D^{-1/2} A D^{-1/2}, so the spectrum is real;
/// computed by cyclic Jacobi rotations.
pub fn walk_spectrum(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut s = SquareMatrix::zeros(n);
    for u in 0..n {
        for &v in g.adj(u) {
            let w = 1.0 / ((g.degree(u) as f64) * (g.degree(v) as f64)).sqrt();
            s.set(u, v, w);
        }
    }
    let mut eig = jacobi_eigenvalues(&mut s);
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eig
}

/// Second-largest (signed) eigenvalue of the simple walk.
pub fn second_eigenvalue(g: &Graph) -> f64 {
    walk_spectrum(g)[1]
}

fn jacobi_eigenvalues(a: &mut SquareMatrix) -> Vec<f64> {
    let n = a.n;
    for _sweep in 0..200 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a.at(i, j) * a.at(i, j);
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.at(p, q);
                if apq.abs() < 1e-18 {
                    continue;
                }
                let app = a.at(p, p);
                let aqq = a.at(q, q);
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.at(k, p);
                    let akq = a.at(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.at(p, k);
                    let aqk = a.at(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    (0..n).map(|i| a.at(i, i)).collect()
}

/// Partial sums S_t(x, y) = sum_{i=0..t} Q^i(x, y) of the lazy chain, for
/// the expected-visit bound checks.
pub fn lazy_visit_partial_sums(g: &Graph, t: u64) -> SquareMatrix {
    let chain = ChainSpec::lazy(g);
    let n = g.n();
    let mut power = SquareMatrix::identity(n);
    let mut sums = SquareMatrix::identity(n);
    for _ in 1..=t {
        power = power.mul(&chain.transition);
        for i in 0..n * n {
            sums.data[i] += power.data[i];
        }
    }
    sums
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};

    #[test]
    fn distribution_t0_is_point_mass() {
        let g = generate(GraphKind::Cycle, 5, 0).unwrap();
        let d = walk_distribution(&g, 2, 0, &ChainSpec::simple(&g));
        assert_eq!(d.probs[2], 1.0);
        assert!(d.validate());
    }

    #[test]
    fn path2_one_step() {
        let g = generate(GraphKind::Path, 2, 0).unwrap();
        let d = walk_distribution(&g, 0, 1, &ChainSpec::simple(&g));
        assert_eq!(d.probs, vec![0.0, 1.0]);
    }

    #[test]
    fn cycle4_two_steps() {
        let g = generate(GraphKind::Cycle, 4, 0).unwrap();
        let d = walk_distribution(&g, 0, 2, &ChainSpec::simple(&g));
        for (got, want) in d.probs.iter().zip([0.5, 0.0, 0.5, 0.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn long_power_matches_iteration() {
        let g = generate(GraphKind::Path, 4, 0).unwrap();
        let chain = ChainSpec::simple(&g);
        let a = walk_distribution(&g, 1, 500, &chain);
        let b = walk_distribution(&g, 1, 513, &chain);
        // Both paths should be valid distributions; 513 goes through pow().
        assert!(a.validate() && b.validate());
    }

    #[test]
    fn naive_walk_basics() {
        let g = generate(GraphKind::Star, 5, 0).unwrap();
        assert_eq!(naive_walk(&g, 2, 0, 7), vec![2]);
        let w = naive_walk(&g, 0, 2, 7);
        assert_eq!(w.len(), 3);
        assert_eq!(w[2], 0, "star walks return to the center every 2 steps");
    }

    #[test]
    fn stationary_examples() {
        let k4 = generate(GraphKind::Complete, 4, 0).unwrap();
        assert!(stationary(&k4).probs.iter().all(|&p| (p - 0.25).abs() < 1e-12));

        let star = generate(GraphKind::Star, 5, 0).unwrap();
        let pi = stationary(&star);
        assert!((pi.probs[0] - 0.5).abs() < 1e-12);
        assert!((pi.probs[1] - 0.125).abs() < 1e-12);

        let grid = generate(GraphKind::Grid, 9, 0).unwrap();
        let pi = stationary(&grid);
        assert!((pi.probs[0] - 2.0 / 24.0).abs() < 1e-12);
        assert!((pi.probs[1] - 3.0 / 24.0).abs() < 1e-12);
        assert!((pi.probs[4] - 4.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_is_fixed_point() {
        for (kind, n) in [
            (GraphKind::Cycle, 9),
            (GraphKind::Star, 6),
            (GraphKind::Grid, 16),
            (GraphKind::Complete, 6),
        ] {
            let g = generate(kind, n, 0).unwrap();
            let chain = ChainSpec::simple(&g);
            let pi = stationary(&g).probs;
            let next = {
                // pi as a row vector times P.
                let mut out = vec![0.0; g.n()];
                for i in 0..g.n() {
                    for j in 0..g.n() {
                        out[j] += pi[i] * chain.transition.at(i, j);
                    }
                }
                out
            };
            assert!(l1(&pi, &next) <= MASS_TOLERANCE);
        }
    }

    #[test]
    fn simple_chain_c_is_inverse_2m() {
        let g = generate(GraphKind::Grid, 9, 0).unwrap();
        let chain = ChainSpec::simple(&g);
        assert!((chain.c - 1.0 / (2.0 * g.m() as f64)).abs() < 1e-15);
        assert!(chain.validate());
        assert!(ChainSpec::lazy(&g).validate());
    }

    #[test]
    fn mixing_on_complete_graph() {
        let g = generate(GraphKind::Complete, 4, 0).unwrap();
        let t = exact_mixing(&g, 0, 1.0 / (2.0 * std::f64::consts::E)).unwrap();
        assert_eq!(t, exact_mixing(&g, 1, 1.0 / (2.0 * std::f64::consts::E)).unwrap());
        assert!(t <= 3);
        assert_eq!(exact_mixing(&g, 0, 2.0).unwrap(), 0);
    }

    #[test]
    fn mixing_rejects_bipartite() {
        let g = generate(GraphKind::Cycle, 8, 0).unwrap();
        assert!(matches!(
            exact_mixing(&g, 0, 0.1),
            Err(OracleError::Bipartite)
        ));
    }

    #[test]
    fn mixing_monotone_in_delta() {
        let g = generate(GraphKind::Cycle, 5, 0).unwrap();
        let deltas = [0.05, 0.1, 0.2, 0.5, 1.0, 1.9];
        let taus: Vec<u64> = deltas
            .iter()
            .map(|&d| exact_mixing(&g, 0, d).unwrap())
            .collect();
        for w in taus.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn tree_counts() {
        let path = generate(GraphKind::Path, 6, 0).unwrap();
        assert_eq!(spanning_tree_count(&path).unwrap(), 1);
        let star = generate(GraphKind::Star, 7, 0).unwrap();
        assert_eq!(spanning_tree_count(&star).unwrap(), 1);
        let c4 = generate(GraphKind::Cycle, 4, 0).unwrap();
        assert_eq!(spanning_tree_count(&c4).unwrap(), 4);
        let k4 = generate(GraphKind::Complete, 4, 0).unwrap();
        assert_eq!(spanning_tree_count(&k4).unwrap(), 16);
        let k5 = generate(GraphKind::Complete, 5, 0).unwrap();
        assert_eq!(spanning_tree_count(&k5).unwrap(), 125);
    }

    #[test]
    fn spectrum_of_complete_graph() {
        let g = generate(GraphKind::Complete, 16, 0).unwrap();
        let eig = walk_spectrum(&g);
        assert!((eig[0] - 1.0).abs() < 1e-9);
        assert!((second_eigenvalue(&g) + 1.0 / 15.0).abs() < 1e-9);
    }

    #[test]
    fn mh_chain_symmetric_case() {
        // pi proportional to degree with alpha = 1/2 on a cycle gives
        // P_ij = 1/4 to each neighbor and a 1/2 self-loop.
        let g = generate(GraphKind::Cycle, 6, 0).unwrap();
        let pi: Vec<f64> = (0..6).map(|v| g.degree(v) as f64).collect();
        let chain = ChainSpec::metropolis_hastings(&g, &pi, 0.5);
        assert!(chain.validate());
        for u in 0..6 {
            assert!((chain.transition.at(u, u) - 0.5).abs() < 1e-12);
            for &v in g.adj(u) {
                assert!((chain.transition.at(u, v) - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mh_stationarity() {
        let g = generate(GraphKind::Complete, 4, 0).unwrap();
        let chain = ChainSpec::metropolis_hastings(&g, &[0.4, 0.3, 0.2, 0.1], 0.5);
        let mut row = chain.stationary.clone();
        for _ in 0..5 {
            let mut out = vec![0.0; 4];
            for i in 0..4 {
                for j in 0..4 {
                    out[j] += row[i] * chain.transition.at(i, j);
                }
            }
            row = out;
        }
        assert!(l1(&row, &chain.stationary) < 1e-12);
    }
}
