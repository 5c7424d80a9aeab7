//! Seeded samplers for background noise, signal subgraphs and embedding
//! vertices.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSubset};
use crate::rng::RngSeed;

/// Base matrix `[[a, b], [c, d]]` used in the published R-MAT experiments.
pub const RMAT_DEFAULT_BASE: [f64; 4] = [0.5, 0.125, 0.125, 0.25];

/// Stochastic Kronecker (R-MAT) model on `2^levels` vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmatModel {
    /// Row-major `[a, b, c, d]`.
    pub base: [f64; 4],
    pub levels: u32,
    pub iterations: u64,
    /// Keep self-loops produced on the diagonal by clip-and-flip.
    pub keep_diagonal: bool,
}

impl RmatModel {
    /// `t = per_vertex · N` iterations.
    pub fn new(base: [f64; 4], levels: u32, per_vertex: u64) -> Result<RmatModel> {
        let m = RmatModel {
            base,
            levels,
            iterations: per_vertex << levels,
            keep_diagonal: true,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        1usize << self.levels
    }

    pub fn validate(&self) -> Result<()> {
        if self.base.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "R-MAT base entries must be nonnegative".into(),
            ));
        }
        let sum: f64 = self.base.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "R-MAT base sums to {sum}, not 1"
            )));
        }
        if self.levels == 0 || self.levels > 30 {
            return Err(Error::InvalidParameter(format!(
                "R-MAT level count {} outside 1..=30",
                self.levels
            )));
        }
        Ok(())
    }

    /// Single-draw probability `p̂_ij`: the product of the base cells picked
    /// by the bits of `i` and `j`, most significant level first.
    pub fn kronecker_probability(&self, i: usize, j: usize) -> f64 {
        let mut p = 1.0;
        for level in (0..self.levels).rev() {
            let r = (i >> level) & 1;
            let c = (j >> level) & 1;
            p *= self.base[2 * r + c];
        }
        p
    }

    /// `p_ij = 1 − (1 − p̂_ij)^t`, the chance that `(i, j)` is drawn at least
    /// once in `t` iterations.
    pub fn edge_probability(&self, i: usize, j: usize) -> f64 {
        if self.iterations == 0 {
            return 0.0;
        }
        let phat = self.kronecker_probability(i, j);
        if phat >= 1.0 {
            return 1.0;
        }
        -(self.iterations as f64 * (-phat).ln_1p()).exp_m1()
    }

    /// Probability that the undirected pair `{i, j}` survives clip-and-flip.
    pub fn undirected_probability(&self, i: usize, j: usize) -> f64 {
        if i == j && !self.keep_diagonal {
            return 0.0;
        }
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.edge_probability(lo, hi)
    }

    /// Expected degrees `d_i = Σ_j p_ij` of the undirected graph.
    pub fn expected_degrees(&self) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| (0..n).map(|j| self.undirected_probability(i, j)).sum())
            .collect()
    }
}

/// Background noise models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum NoiseModel {
    Er { n: usize, p: f64 },
    Cl { weights: Vec<f64> },
    Rmat(RmatModel),
}

impl NoiseModel {
    pub fn n(&self) -> usize {
        match self {
            NoiseModel::Er { n, .. } => *n,
            NoiseModel::Cl { weights } => weights.len(),
            NoiseModel::Rmat(m) => m.n(),
        }
    }

    pub fn sample(&self, seed: RngSeed) -> Result<Graph> {
        match self {
            NoiseModel::Er { n, p } => sample_er(*n, *p, seed),
            NoiseModel::Cl { weights } => sample_cl(weights, seed),
            NoiseModel::Rmat(m) => sample_rmat(m, seed),
        }
    }

    pub fn expected_degrees(&self) -> Vec<f64> {
        match self {
            NoiseModel::Er { n, p } => vec![*n as f64 * p; *n],
            NoiseModel::Cl { weights } => {
                let total: f64 = weights.iter().sum();
                weights
                    .iter()
                    .map(|&di| weights.iter().map(|&dj| (di * dj / total).min(1.0)).sum())
                    .collect()
            }
            NoiseModel::Rmat(m) => m.expected_degrees(),
        }
    }

    /// Short stable description used to tag calibration files.
    pub fn fingerprint(&self) -> String {
        match self {
            NoiseModel::Er { n, p } => format!("er:n={n}:p={p:e}"),
            NoiseModel::Cl { weights } => {
                let mut h = 0xcbf2_9ce4_8422_2325u64;
                for w in weights {
                    h = (h ^ w.to_bits()).wrapping_mul(0x1000_0000_01b3);
                }
                format!(
                    "cl:n={}:sum={:e}:h={h:016x}",
                    weights.len(),
                    weights.iter().sum::<f64>()
                )
            }
            NoiseModel::Rmat(m) => format!(
                "rmat:levels={}:t={}:base={:?}:diag={}",
                m.levels, m.iterations, m.base, m.keep_diagonal
            ),
        }
    }
}

/// Signal subgraph models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum SignalModel {
    Cluster { size: usize, p: f64 },
    Bipartite { left: usize, right: usize, p: f64 },
}

impl SignalModel {
    pub fn n(&self) -> usize {
        match *self {
            SignalModel::Cluster { size, .. } => size,
            SignalModel::Bipartite { left, right, .. } => left + right,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (p, ok_counts) = match *self {
            SignalModel::Cluster { size, p } => (p, size > 0),
            SignalModel::Bipartite { left, right, p } => (p, left > 0 && right > 0),
        };
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "signal probability {p} outside (0, 1]"
            )));
        }
        if !ok_counts {
            return Err(Error::InvalidParameter("signal sizes must be positive".into()));
        }
        Ok(())
    }

    /// Expected average degree of the signal graph.
    pub fn average_degree(&self) -> f64 {
        match *self {
            SignalModel::Cluster { size, p } => p * (size as f64 - 1.0),
            SignalModel::Bipartite { left, right, p } => {
                2.0 * p * (left * right) as f64 / (left + right) as f64
            }
        }
    }

    /// Spectral norm of `E[A_S]` in closed form.
    pub fn expected_spectral_norm(&self) -> f64 {
        match *self {
            SignalModel::Cluster { size, p } => p * size as f64,
            SignalModel::Bipartite { left, right, p } => p * ((left * right) as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingPolicy {
    #[default]
    Uniform,
    /// Only vertices whose expected degree is below the threshold.
    LowDegree { threshold: f64 },
}

impl EmbeddingPolicy {
    pub const DEFAULT_THRESHOLD: f64 = 5.0;

    pub fn low_degree() -> EmbeddingPolicy {
        EmbeddingPolicy::LowDegree {
            threshold: Self::DEFAULT_THRESHOLD,
        }
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} probability {p} outside (0, 1)"
        )))
    }
}

/// Number of failures before the next success of a Bernoulli(p) sequence.
#[inline]
fn geometric_skip<R: Rng>(rng: &mut R, log_q: f64) -> u64 {
    let u: f64 = rng.random();
    // 1 - u lies in (0, 1], so the log is finite.
    let k = ((1.0 - u).ln() / log_q).floor();
    if k >= u64::MAX as f64 {
        u64::MAX
    } else {
        k as u64
    }
}

/// Erdős–Rényi graph over all pairs `i <= j`, self-pairs included.
///
/// Runs in expected `O(p N²)` time by jumping between successes.
pub fn sample_er(n: usize, p: f64, seed: RngSeed) -> Result<Graph> {
    check_probability(p, "ER edge")?;
    let mut rng = seed.rng();
    let total = (n as u64) * (n as u64 + 1) / 2;
    let log_q = (-p).ln_1p();
    let mut edges = Vec::with_capacity((p * total as f64 * 1.1) as usize + 16);
    let mut row = 0u64;
    let mut row_start = 0u64;
    let mut idx = 0u64;
    loop {
        idx = idx.saturating_add(geometric_skip(&mut rng, log_q));
        if idx >= total {
            break;
        }
        while idx >= row_start + (n as u64 - row) {
            row_start += n as u64 - row;
            row += 1;
        }
        let col = row + (idx - row_start);
        edges.push((row as u32, col as u32));
        idx += 1;
    }
    Ok(Graph::from_normalized(n, edges))
}

/// Chung–Lu graph: pair `(i, j)` present with probability
/// `min(1, d_i d_j / Σd)`, self-pairs with `min(1, d_i² / Σd)`.
pub fn sample_cl(weights: &[f64], seed: RngSeed) -> Result<Graph> {
    if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter(
            "expected degrees must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("expected degrees sum to zero".into()));
    }
    let n = weights.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let w: Vec<f64> = order.iter().map(|&i| weights[i]).collect();

    let mut rng = seed.rng();
    let mut edges = Vec::new();
    let push = |edges: &mut Vec<(u32, u32)>, a: usize, b: usize| {
        let (x, y) = (order[a] as u32, order[b] as u32);
        edges.push(if x <= y { (x, y) } else { (y, x) });
    };

    // Weights are sorted descending, so along a row the pair probability only
    // falls; skip geometrically under the current bound and thin by the ratio.
    for u in 0..n {
        let pu = (w[u] * w[u] / total).min(1.0);
        if pu > 0.0 && rng.random::<f64>() < pu {
            push(&mut edges, u, u);
        }
        let mut v = u + 1;
        let mut p = if v < n {
            (w[u] * w[v] / total).min(1.0)
        } else {
            0.0
        };
        while v < n && p > 0.0 {
            if p < 1.0 {
                let skip = geometric_skip(&mut rng, (-p).ln_1p());
                v = v.saturating_add(skip.min(n as u64) as usize);
            }
            if v >= n {
                break;
            }
            let q = (w[u] * w[v] / total).min(1.0);
            if rng.random::<f64>() < q / p {
                push(&mut edges, u, v);
            }
            p = q;
            v += 1;
        }
    }
    Ok(Graph::from_normalized(n, edges))
}

/// `p_ij = 1 − (1 − p̂_ij)^t` for the R-MAT model.
pub fn rmat_edge_probability(model: &RmatModel, i: usize, j: usize) -> Result<f64> {
    let n = model.n();
    for v in [i, j] {
        if v >= n {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
    }
    Ok(model.edge_probability(i, j))
}

/// R-MAT graph: `t` quadrant descents, each yielding one directed pair, then
/// clip-and-flip (pairs below the diagonal dropped, the rest undirected).
pub fn sample_rmat(model: &RmatModel, seed: RngSeed) -> Result<Graph> {
    model.validate()?;
    let mut rng = seed.rng();
    let [a, b, c, _] = model.base;
    let (ab, abc) = (a + b, a + b + c);
    let mut edges = Vec::with_capacity(model.iterations as usize / 2 + 16);
    for _ in 0..model.iterations {
        let (mut r, mut col) = (0usize, 0usize);
        for _ in 0..model.levels {
            let u: f64 = rng.random();
            let (rb, cb) = if u < a {
                (0, 0)
            } else if u < ab {
                (0, 1)
            } else if u < abc {
                (1, 0)
            } else {
                (1, 1)
            };
            r = (r << 1) | rb;
            col = (col << 1) | cb;
        }
        if r < col || (r == col && model.keep_diagonal) {
            edges.push((r as u32, col as u32));
        }
    }
    Ok(Graph::from_normalized(model.n(), edges))
}

/// Cluster or bipartite signal graph; never contains self-loops.
pub fn sample_signal(model: &SignalModel, seed: RngSeed) -> Result<Graph> {
    model.validate()?;
    let mut rng = seed.rng();
    let mut edges = Vec::new();
    match *model {
        SignalModel::Cluster { size, p } => {
            for i in 0..size {
                for j in i + 1..size {
                    if p >= 1.0 || rng.random::<f64>() < p {
                        edges.push((i as u32, j as u32));
                    }
                }
            }
        }
        SignalModel::Bipartite { left, right, p } => {
            for i in 0..left {
                for j in left..left + right {
                    if p >= 1.0 || rng.random::<f64>() < p {
                        edges.push((i as u32, j as u32));
                    }
                }
            }
        }
    }
    Ok(Graph::from_normalized(model.n(), edges))
}

/// A random `degree`-regular graph on `n` vertices: a circulant graph under a
/// random relabeling.
pub fn sample_regular(n: usize, degree: usize, seed: RngSeed) -> Result<Graph> {
    if degree >= n || (degree % 2 == 1 && n % 2 == 1) {
        return Err(Error::InvalidParameter(format!(
            "no {degree}-regular simple graph on {n} vertices"
        )));
    }
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(&mut seed.rng());
    let mut pairs = Vec::new();
    for i in 0..n {
        for off in 1..=degree / 2 {
            pairs.push((labels[i], labels[(i + off) % n]));
        }
        if degree % 2 == 1 && i < n / 2 {
            pairs.push((labels[i], labels[i + n / 2]));
        }
    }
    Graph::from_edges(n, pairs)
}

/// Picks `count` distinct vertices for an embedding.
pub fn choose_embedding_vertices(
    expected_degrees: &[f64],
    count: usize,
    policy: EmbeddingPolicy,
    seed: RngSeed,
) -> Result<VertexSubset> {
    let pool: Vec<usize> = match policy {
        EmbeddingPolicy::Uniform => (0..expected_degrees.len()).collect(),
        EmbeddingPolicy::LowDegree { threshold } => expected_degrees
            .iter()
            .enumerate()
            .filter(|(_, &d)| d < threshold)
            .map(|(i, _)| i)
            .collect(),
    };
    if pool.len() < count {
        return Err(Error::PoolTooSmall {
            pool: pool.len(),
            requested: count,
        });
    }
    let mut rng = seed.rng();
    let picked = index::sample(&mut rng, pool.len(), count);
    VertexSubset::new(picked.iter().map(|k| pool[k]), expected_degrees.len())
}
