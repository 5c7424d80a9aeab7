//! Exact small-scale evaluations of the likelihood ratio, the eigenvector
//! concentration bounds and the degree-perturbation bound. Everything here
//! uses dense linear algebra or exhaustive enumeration so that it can serve
//! as an independent check on the fast path.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Placement, VertexSubset};
use crate::linalg::{largest_singular_value, norm1, norm2, sorted_eigen, symmetric_spectral_norm};
use crate::par::{self, Execution};
use crate::residuals::{exact_operator, LowRankFactors};

/// Largest subset count the likelihood enumeration accepts.
pub const SUBSET_LIMIT: u128 = 10_000_000;

/// Largest dimension the dense oracles accept by default.
pub const DENSE_LIMIT: usize = 4096;

/// Eigenvalues this close to the target make the concentration bound inapplicable.
pub const CLUSTER_GAP: f64 = 1e-3;

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

/// Calls `f` on every `k`-subset of `0..n` whose smallest element is `first`.
fn for_each_subset_from(n: usize, k: usize, first: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 {
        f(&[]);
        return;
    }
    let mut idx: Vec<usize> = (first..first + k).collect();
    if idx[k - 1] >= n {
        return;
    }
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 1 {
                return;
            }
            i -= 1;
            if idx[i] < n - k + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn check_likelihood_inputs(g: &Graph, n_s: usize, p: f64, p_s: f64) -> Result<u128> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "background probability {p} outside (0, 1)"
        )));
    }
    if !(0.0..=1.0).contains(&p_s) {
        return Err(Error::InvalidParameter(format!(
            "signal probability {p_s} outside [0, 1]"
        )));
    }
    if p_s == 1.0 {
        return Err(Error::DegenerateLikelihood);
    }
    if n_s == 0 || n_s > g.n() {
        return Err(Error::InvalidParameter(format!(
            "subgraph size {n_s} not in 1..={}",
            g.n()
        )));
    }
    let count = binomial(g.n(), n_s);
    if count > SUBSET_LIMIT {
        return Err(Error::TooManySubsets {
            count,
            limit: SUBSET_LIMIT,
        });
    }
    Ok(count)
}

fn adjacency_bits(g: &Graph) -> Vec<Vec<bool>> {
    let n = g.n();
    let mut adj = vec![vec![false; n]; n];
    for &(i, j) in g.edges() {
        adj[i as usize][j as usize] = true;
        adj[j as usize][i as usize] = true;
    }
    adj
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Natural log of the likelihood ratio for an ER(`p`) background against
/// the same background with an ER(`p_s`) subgraph on `n_s` uniformly chosen
/// vertices. Self-loops play no part in either hypothesis and are ignored.
///
/// Only the histogram of internal edge counts over all subsets is needed,
/// which is accumulated in parallel over the smallest subset element.
pub fn log_likelihood_ratio_er(g: &Graph, n_s: usize, p: f64, p_s: f64) -> Result<f64> {
    let count = check_likelihood_inputs(g, n_s, p, p_s)?;
    let n = g.n();
    let adj = adjacency_bits(g);
    let pairs = n_s * n_s.saturating_sub(1) / 2;
    let histograms = par::map(Execution::Parallel, n, |first| {
        let mut h = vec![0u64; pairs + 1];
        for_each_subset_from(n, n_s, first, |x| {
            let mut e = 0;
            for a in 0..x.len() {
                for b in a + 1..x.len() {
                    e += adj[x[a]][x[b]] as usize;
                }
            }
            h[e] += 1;
        });
        h
    });
    let mut hist = vec![0u64; pairs + 1];
    for h in histograms {
        for (acc, v) in hist.iter_mut().zip(h) {
            *acc += v;
        }
    }

    let p_hat = p + p_s - p * p_s;
    let log_r = (p_hat * (1.0 - p)).ln() - (p * (1.0 - p_hat)).ln();
    let log_sum = log_sum_exp(
        hist.iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(e, &c)| (c as f64).ln() + e as f64 * log_r),
    );
    Ok(-(count as f64).ln() + pairs as f64 * ((1.0 - p_hat).ln() - (1.0 - p).ln()) + log_sum)
}

/// The likelihood ratio itself (may overflow to infinity for large inputs;
/// use [`log_likelihood_ratio_er`] there).
pub fn likelihood_ratio_er(g: &Graph, n_s: usize, p: f64, p_s: f64) -> Result<f64> {
    log_likelihood_ratio_er(g, n_s, p, p_s).map(f64::exp)
}

/// The same ratio from first principles: the H1 likelihood averaged over
/// every placement, divided by the H0 likelihood, each a product over all
/// unordered vertex pairs.
pub fn log_likelihood_ratio_bayes(g: &Graph, n_s: usize, p: f64, p_s: f64) -> Result<f64> {
    check_likelihood_inputs(g, n_s, p, p_s)?;
    let n = g.n();
    let adj = adjacency_bits(g);
    let p_hat = p + p_s - p * p_s;
    let pair_log = |edge: bool, q: f64| if edge { q.ln() } else { (1.0 - q).ln() };

    let mut log_h0 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            log_h0 += pair_log(adj[i][j], p);
        }
    }
    let mut log_h1 = Vec::new();
    for first in 0..n {
        for_each_subset_from(n, n_s, first, |x| {
            let mut inside = vec![false; n];
            for &v in x {
                inside[v] = true;
            }
            let mut l = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    let q = if inside[i] && inside[j] { p_hat } else { p };
                    l += pair_log(adj[i][j], q);
                }
            }
            log_h1.push(l);
        });
    }
    let count = log_h1.len() as f64;
    Ok(log_sum_exp(log_h1.into_iter()) - count.ln() - log_h0)
}

/// Spectral norms of the blocks of the background residuals matrix
/// partitioned by the signal vertices, and of the foreground residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionNorms {
    pub norm_bs: f64,
    pub norm_bsn: f64,
    pub norm_bn: f64,
    pub norm_ahat: f64,
}

fn check_dense(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        Err(Error::DenseLimit { n, limit })
    } else {
        Ok(())
    }
}

fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn partition_norms(
    g: &Graph,
    expected: &LowRankFactors,
    signal_vertices: &VertexSubset,
    ahat: &Graph,
) -> Result<PartitionNorms> {
    check_dense(g.n(), DENSE_LIMIT)?;
    if ahat.n() != g.n() {
        return Err(Error::Shape(format!(
            "foreground residual has {} vertices, background {}",
            ahat.n(),
            g.n()
        )));
    }
    let b = exact_operator(g, expected.clone())?.to_dense();
    let s = signal_vertices.to_vec();
    let rest: Vec<usize> = (0..g.n()).filter(|&v| !signal_vertices.contains(v)).collect();

    let mut local = vec![usize::MAX; g.n()];
    for (k, &v) in s.iter().enumerate() {
        local[v] = k;
    }
    let mut a_block = DMatrix::zeros(s.len(), s.len());
    for &(i, j) in ahat.edges() {
        let (li, lj) = (local[i as usize], local[j as usize]);
        if li == usize::MAX || lj == usize::MAX {
            return Err(Error::Shape(format!(
                "foreground residual edge ({i}, {j}) leaves the signal vertices"
            )));
        }
        a_block[(li, lj)] = 1.0;
        a_block[(lj, li)] = 1.0;
    }
    Ok(PartitionNorms {
        norm_bs: symmetric_spectral_norm(&submatrix(&b, &s, &s)),
        norm_bsn: largest_singular_value(&submatrix(&b, &s, &rest)),
        norm_bn: symmetric_spectral_norm(&submatrix(&b, &rest, &rest)),
        norm_ahat: symmetric_spectral_norm(&a_block),
    })
}

/// Lower bound on the signal-vertex mass `‖u_S‖²` of the principal residuals
/// eigenvector after embedding.
pub fn signal_mass_bound(pn: &PartitionNorms) -> Result<f64> {
    let noise = pn.norm_bn + pn.norm_bs;
    if !(pn.norm_ahat > noise) {
        return Err(Error::HypothesisViolated(format!(
            "‖Â‖ = {} is not greater than ‖B_N‖ + ‖B_S‖ = {}",
            pn.norm_ahat, noise
        )));
    }
    let alpha = pn.norm_ahat + pn.norm_bs - pn.norm_bn;
    let beta = 2.0 * pn.norm_bsn;
    let gamma = pn.norm_bn + pn.norm_bs - pn.norm_ahat;
    let b2 = beta * beta;
    let radicand = (b2 * b2 - 4.0 * b2 * gamma * (alpha + gamma)).max(0.0);
    Ok((b2 - 2.0 * alpha * gamma - radicand.sqrt()) / (2.0 * (alpha * alpha + b2)))
}

/// `Σ_{i∈S} u_i²`.
pub fn signal_mass(u: &[f64], subset: &VertexSubset) -> f64 {
    subset.iter().map(|i| u[i] * u[i]).sum()
}

/// Quantities describing how strongly the normalized subgraph indicator `x`
/// concentrates on a single eigenvector of the post-embedding residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub d_s: u64,
    /// `xᵀ B x`.
    pub x: f64,
    /// `‖B x‖²`.
    pub y: f64,
    /// `xᵀ (B + Â) x`; equals `d_S + X` when the foreground residual is regular.
    pub target: f64,
    /// Index (0-based, descending order) of the eigenvalue nearest `target`.
    pub m_star: usize,
    pub lambda_m: f64,
    pub delta: f64,
    /// `‖(B + Â) x‖² − (xᵀ(B + Â)x)² + δ²`; reduces to `δ² + Y − X²` in the regular case.
    pub q: f64,
    pub eps1_plus: Option<f64>,
    pub eps1_minus: Option<f64>,
    pub eps2_plus: Option<f64>,
    pub eps2_minus: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub b_lower_bound: f64,
    pub applicable: bool,
    pub reason: Option<String>,
}

/// Evaluates the concentration bound for a regular signal graph placed on
/// `placement` (signal vertex `i` goes to the `i`-th smallest vertex).
pub fn verify_concentration(
    g: &Graph,
    expected: &LowRankFactors,
    signal: &Graph,
    placement: &VertexSubset,
) -> Result<ConcentrationReport> {
    check_dense(g.n(), DENSE_LIMIT)?;
    let d_s = signal
        .regular_degree()
        .ok_or_else(|| Error::InvalidParameter("signal graph is not regular".into()))?;
    let place = Placement::new(placement.to_vec());
    let ahat = g.foreground_residual(signal, &place)?;
    let b = exact_operator(g, expected.clone())?.to_dense();
    let mut m = b.clone();
    for &(i, j) in ahat.edges() {
        m[(i as usize, j as usize)] += 1.0;
        if i != j {
            m[(j as usize, i as usize)] += 1.0;
        }
    }
    let n = g.n();
    let mut xv = nalgebra::DVector::zeros(n);
    let scale = 1.0 / (placement.len() as f64).sqrt();
    for v in placement.iter() {
        xv[v] = scale;
    }
    let bx = &b * &xv;
    let mx = &m * &xv;
    let x_stat = xv.dot(&bx);
    let y_stat = bx.norm_squared();
    let target = xv.dot(&mx);
    let q_raw = mx.norm_squared() - target * target;

    let (values, vectors) = sorted_eigen(m);
    let z: Vec<f64> = (0..n).map(|i| vectors.column(i).dot(&xv)).collect();
    let m_star = (0..n)
        .min_by(|&a, &b| (values[a] - target).abs().total_cmp(&(values[b] - target).abs()))
        .expect("nonempty spectrum");
    let lambda_m = values[m_star];
    let delta = target - lambda_m;
    let q = q_raw + delta * delta;

    let side = |range: std::ops::Range<usize>| {
        let mass: f64 = range.clone().map(|i| z[i] * z[i]).sum();
        if mass > 0.0 {
            let e1 = range
                .clone()
                .map(|i| (values[i] - lambda_m) * z[i] * z[i])
                .sum::<f64>()
                / mass;
            let e2 = range
                .map(|i| (values[i] - lambda_m).powi(2) * z[i] * z[i])
                .sum::<f64>()
                / mass;
            (mass, Some(e1), Some(e2))
        } else {
            (0.0, None, None)
        }
    };
    let (a, eps1_plus, eps2_plus) = side(0..m_star);
    let (c, eps1_minus, eps2_minus) = side(m_star + 1..n);
    let b_measured = z[m_star] * z[m_star];

    let mut reason = None;
    let close = values
        .iter()
        .filter(|&&l| (l - target).abs() < CLUSTER_GAP)
        .count();
    if close >= 2 {
        reason = Some(format!(
            "{close} eigenvalues within {CLUSTER_GAP:e} of the target"
        ));
    } else if eps1_plus.is_some_and(|e| e <= 0.0)
        || eps1_minus.is_some_and(|e| e >= 0.0)
        || eps2_plus.is_some_and(|e| e <= 0.0)
        || eps2_minus.is_some_and(|e| e <= 0.0)
    {
        reason = Some("nonpositive ε denominator".into());
    }

    let min_opt = |u: Option<f64>, v: Option<f64>| match (u, v) {
        (Some(u), Some(v)) => Some(u.min(v)),
        (u, v) => u.or(v),
    };
    let eps2 = min_opt(eps2_plus, eps2_minus);
    let eps1 = min_opt(eps1_plus, eps1_minus.map(|e| -e));
    let b_lower_bound = 1.0 - eps2.map_or(0.0, |e| q / e) - eps1.map_or(0.0, |e| delta.abs() / e);

    Ok(ConcentrationReport {
        d_s,
        x: x_stat,
        y: y_stat,
        target,
        m_star,
        lambda_m,
        delta,
        q,
        eps1_plus,
        eps1_minus,
        eps2_plus,
        eps2_minus,
        a,
        b: b_measured,
        c,
        b_lower_bound,
        applicable: reason.is_none(),
        reason,
    })
}

/// Spectral norm of the change in the rank-one expected value caused by
/// adding degrees `khat`, and its closed-form upper bound.
pub fn delta_k_exact_and_bound(k: &[f64], khat: &[f64]) -> Result<(f64, f64)> {
    if k.len() != khat.len() {
        return Err(Error::Shape(format!(
            "degree vectors of lengths {} and {}",
            k.len(),
            khat.len()
        )));
    }
    check_dense(k.len(), DENSE_LIMIT)?;
    let (k1, h1) = (norm1(k), norm1(khat));
    if !(k1 > 0.0) {
        return Err(Error::InvalidParameter("degree vector k is zero".into()));
    }
    let n = k.len();
    let sum: Vec<f64> = k.iter().zip(khat).map(|(a, b)| a + b).collect();
    let delta = DMatrix::from_fn(n, n, |i, j| k[i] * k[j] / k1 - sum[i] * sum[j] / (k1 + h1));
    let exact = symmetric_spectral_norm(&delta);
    let (k2, h2) = (norm2(k), norm2(khat));
    let bound = (h1 * k2 * k2 + 2.0 * k1 * k2 * h2 + k1 * h2 * h2) / (k1 * k1);
    Ok((exact, bound))
}
