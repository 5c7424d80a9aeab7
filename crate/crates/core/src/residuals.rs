//! Matrix-free residuals operators `B = A − E[A]` and their eigenanalysis.
//!
//! The expected value is always held as a low-rank product `U Wᵀ`, so a
//! matvec costs `O(M + N r)` and no dense `N × N` array is ever formed.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{NoiseModel, RmatModel};
use crate::graph::{Csr, Graph};
use crate::lanczos::largest_eigenpairs;
use crate::linalg::{sorted_eigen, LinearOperator, Negated};

pub use crate::lanczos::{EigenPairs, LanczosOptions};

/// Column-major `N × r` factor pair with `E[A] = U Wᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactors {
    n: usize,
    rank: usize,
    u: Vec<f64>,
    w: Vec<f64>,
}

impl LowRankFactors {
    pub fn new(n: usize, rank: usize, u: Vec<f64>, w: Vec<f64>) -> Result<LowRankFactors> {
        if u.len() != n * rank || w.len() != n * rank {
            return Err(Error::Shape(format!(
                "factors of length {} and {} do not form {n} × {rank} arrays",
                u.len(),
                w.len()
            )));
        }
        Ok(LowRankFactors { n, rank, u, w })
    }

    pub fn zero(n: usize) -> LowRankFactors {
        LowRankFactors {
            n,
            rank: 0,
            u: Vec::new(),
            w: Vec::new(),
        }
    }

    /// `E[A] = u wᵀ`.
    pub fn rank_one(u: Vec<f64>, w: Vec<f64>) -> Result<LowRankFactors> {
        let n = u.len();
        Self::new(n, 1, u, w)
    }

    /// Every entry equal to `p`, self-pairs included.
    pub fn erdos_renyi(n: usize, p: f64) -> LowRankFactors {
        LowRankFactors {
            n,
            rank: 1,
            u: vec![p; n],
            w: vec![1.0; n],
        }
    }

    /// `d dᵀ / Σd`.
    pub fn chung_lu(weights: &[f64]) -> Result<LowRankFactors> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("expected degrees sum to zero".into()));
        }
        Self::rank_one(weights.to_vec(), weights.iter().map(|d| d / total).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn u_col(&self, r: usize) -> &[f64] {
        &self.u[r * self.n..(r + 1) * self.n]
    }

    pub fn w_col(&self, r: usize) -> &[f64] {
        &self.w[r * self.n..(r + 1) * self.n]
    }

    /// Entry `(i, j)` of `U Wᵀ`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        (0..self.rank)
            .map(|r| self.u[r * self.n + i] * self.w[r * self.n + j])
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let u = DMatrix::from_column_slice(self.n, self.rank, &self.u);
        let w = DMatrix::from_column_slice(self.n, self.rank, &self.w);
        u * w.transpose()
    }
}

/// `B = A − U Wᵀ`, applied matrix-free.
#[derive(Debug, Clone)]
pub struct ResidualsOperator {
    adjacency: Arc<Csr>,
    expected: LowRankFactors,
}

impl ResidualsOperator {
    pub fn adjacency(&self) -> &Csr {
        &self.adjacency
    }

    pub fn expected(&self) -> &LowRankFactors {
        &self.expected
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        y
    }

    /// Dense copy of `B`; for oracles and small problems only.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut b = -self.expected.to_dense();
        for i in 0..n {
            for &j in self.adjacency.row(i) {
                b[(i, j as usize)] += 1.0;
            }
        }
        b
    }
}

impl LinearOperator for ResidualsOperator {
    fn dim(&self) -> usize {
        self.adjacency.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.adjacency.spmv(x, y);
        for r in 0..self.expected.rank {
            let c: f64 = self.expected.w_col(r).iter().zip(x).map(|(a, b)| a * b).sum();
            if c != 0.0 {
                for (yi, ui) in y.iter_mut().zip(self.expected.u_col(r)) {
                    *yi -= c * ui;
                }
            }
        }
    }
}

/// The modularity matrix `A − k kᵀ / Vol(G)`.
pub fn modularity_operator(g: &Graph) -> Result<ResidualsOperator> {
    let deg = g.degrees();
    if deg.volume == 0 {
        return Err(Error::EmptyGraph);
    }
    let vol = deg.volume as f64;
    let k = deg.as_f64();
    let w = k.iter().map(|x| x / vol).collect();
    Ok(ResidualsOperator {
        adjacency: Arc::new(g.csr().clone()),
        expected: LowRankFactors::rank_one(k, w)?,
    })
}

/// `A − U Wᵀ` for a known (or externally fitted) expected value.
pub fn exact_operator(g: &Graph, expected: LowRankFactors) -> Result<ResidualsOperator> {
    if expected.n() != g.n() {
        return Err(Error::Shape(format!(
            "expected-value factors have {} rows for a graph with {} vertices",
            expected.n(),
            g.n()
        )));
    }
    Ok(ResidualsOperator {
        adjacency: Arc::new(g.csr().clone()),
        expected,
    })
}

/// Best rank-`r` symmetric approximation of the R-MAT probability matrix,
/// from its dense eigendecomposition (terms ordered by `|λ|`).
pub fn rmat_expected_factors(model: &RmatModel, rank: usize) -> Result<LowRankFactors> {
    model.validate()?;
    let n = model.n();
    if rank > n {
        return Err(Error::InvalidParameter(format!(
            "rank {rank} exceeds dimension {n}"
        )));
    }
    let p = DMatrix::from_fn(n, n, |i, j| model.undirected_probability(i, j));
    let (values, vectors) = sorted_eigen(p);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    let mut u = Vec::with_capacity(n * rank);
    let mut w = Vec::with_capacity(n * rank);
    for &k in order.iter().take(rank) {
        let col = vectors.column(k);
        u.extend(col.iter().map(|x| x * values[k]));
        w.extend(col.iter().copied());
    }
    LowRankFactors::new(n, rank, u, w)
}

/// How `E[A]` is obtained when a noise model is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
#[derive(Default)]
pub enum ExpectedValueMode {
    /// Observed degrees, i.e. the modularity matrix.
    #[default]
    EstimatedRank1,
    /// The model's own expected value. ER and CL are exactly rank one; R-MAT
    /// is truncated to `rank` terms.
    Exact {
        #[serde(default = "default_rank")]
        rank: usize,
    },
}

fn default_rank() -> usize {
    100
}

/// Builds residuals operators for many graphs drawn from one model, sharing
/// the (possibly expensive) exact factors.
#[derive(Debug, Clone)]
pub struct ResidualsBuilder {
    factors: Option<LowRankFactors>,
}

impl ResidualsBuilder {
    pub fn new(model: &NoiseModel, mode: ExpectedValueMode) -> Result<ResidualsBuilder> {
        let factors = match mode {
            ExpectedValueMode::EstimatedRank1 => None,
            ExpectedValueMode::Exact { rank } => Some(match model {
                NoiseModel::Er { n, p } => LowRankFactors::erdos_renyi(*n, *p),
                NoiseModel::Cl { weights } => LowRankFactors::chung_lu(weights)?,
                NoiseModel::Rmat(m) => rmat_expected_factors(m, rank.min(m.n()))?,
            }),
        };
        Ok(ResidualsBuilder { factors })
    }

    pub fn modularity() -> ResidualsBuilder {
        ResidualsBuilder { factors: None }
    }

    pub fn operator(&self, g: &Graph) -> Result<ResidualsOperator> {
        match &self.factors {
            None => modularity_operator(g),
            Some(f) => exact_operator(g, f.clone()),
        }
    }
}

/// Top-`m` eigenpairs of a residuals operator.
pub fn top_eigenpairs(op: &ResidualsOperator, m: usize, opts: &LanczosOptions) -> Result<EigenPairs> {
    if m >= op.dim() {
        return Err(Error::InvalidParameter(format!(
            "need m < N, got m = {m} for N = {}",
            op.dim()
        )));
    }
    largest_eigenpairs(op, m, opts)
}

/// `max(|λ_max|, |λ_min|)` from two extremal Lanczos runs.
pub fn spectral_norm<Op: LinearOperator + ?Sized>(op: &Op, opts: &LanczosOptions) -> Result<f64> {
    if op.dim() == 0 {
        return Ok(0.0);
    }
    let top = largest_eigenpairs(op, 1, opts)?.values[0];
    let bottom = -largest_eigenpairs(&Negated(op), 1, opts)?.values[0];
    Ok(top.abs().max(bottom.abs()))
}

const EIGS_MAGIC: &[u8; 8] = b"SSEIGS01";

/// Eigenvalue table as CSV: `index,eigenvalue,residual,l1_norm`.
pub fn write_eigenvalues_csv<W: Write>(eigs: &EigenPairs, mut out: W) -> Result<()> {
    writeln!(out, "index,eigenvalue,residual,l1_norm")?;
    for (i, (v, r)) in eigs.values.iter().zip(&eigs.residuals).enumerate() {
        let l1 = crate::linalg::norm1(&eigs.vectors[i]);
        writeln!(out, "{},{:.17e},{:.6e},{:.17e}", i + 1, v, r, l1)?;
    }
    Ok(())
}

/// Eigenvectors as CSV: one row per vertex, one column per eigenvector.
pub fn write_eigenvectors_csv<W: Write>(eigs: &EigenPairs, mut out: W) -> Result<()> {
    let header: Vec<String> = (1..=eigs.len()).map(|i| format!("u{i}")).collect();
    writeln!(out, "vertex,{}", header.join(","))?;
    for v in 0..eigs.dim() {
        write!(out, "{v}")?;
        for vec in &eigs.vectors {
            write!(out, ",{:.17e}", vec[v])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Binary dump: magic, `N` and `m` as little-endian u64, the `m`
/// eigenvalues, then the vectors column-major, all little-endian f64.
pub fn write_eigs_binary<W: Write>(eigs: &EigenPairs, mut out: W) -> Result<()> {
    out.write_all(EIGS_MAGIC)?;
    out.write_all(&(eigs.dim() as u64).to_le_bytes())?;
    out.write_all(&(eigs.len() as u64).to_le_bytes())?;
    for v in &eigs.values {
        out.write_all(&v.to_le_bytes())?;
    }
    for vec in &eigs.vectors {
        for x in vec {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a dump written by [`write_eigs_binary`]; residuals are not stored.
pub fn read_eigs_binary(bytes: &[u8]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let bad = || Error::Shape("truncated or malformed eigenpair dump".into());
    if bytes.len() < 24 || &bytes[..8] != EIGS_MAGIC {
        return Err(bad());
    }
    let word = |k: usize| u64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
    let (n, m) = (word(1) as usize, word(2) as usize);
    if bytes.len() != 24 + 8 * (m + n * m) {
        return Err(bad());
    }
    let f = |k: usize| f64::from_le_bytes(bytes[24 + 8 * k..32 + 8 * k].try_into().unwrap());
    let values = (0..m).map(f).collect();
    let vectors = (0..m)
        .map(|c| (0..n).map(|r| f(m + c * n + r)).collect())
        .collect();
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::RMAT_DEFAULT_BASE;
    use crate::linalg::{norm2, to_dense};

    fn k3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn ones_vector_is_in_the_null_space() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 2), (3, 4), (0, 5), (1, 5)]).unwrap();
        let b = modularity_operator(&g).unwrap();
        let y = b.matvec(&[1.0; 6]);
        assert!(norm2(&y) < 1e-12);
    }

    #[test]
    fn k3_matvec_by_hand() {
        let b = modularity_operator(&k3()).unwrap();
        let y = b.matvec(&[1.0, -1.0, 0.0]);
        let expect = [-1.0, 1.0, 0.0];
        for i in 0..3 {
            assert!((y[i] - expect[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn single_edge_spectrum() {
        // B = [[-½, ½], [½, -½]]: eigenvalues 0 on (1, 1) and −1 on (1, −1).
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let b = modularity_operator(&g).unwrap();
        let eig = top_eigenpairs(&b, 1, &LanczosOptions::default()).unwrap();
        assert!(eig.values[0].abs() < 1e-12);
        let u = &eig.vectors[0];
        assert!((u[0] - u[1]).abs() < 1e-12);
        let norm = spectral_norm(&b, &LanczosOptions::default()).unwrap();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_graph_has_no_modularity() {
        assert!(matches!(
            modularity_operator(&Graph::empty(4)),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn exact_operator_cases() {
        let empty = Graph::empty(5);
        let b = exact_operator(&empty, LowRankFactors::erdos_renyi(5, 0.2)).unwrap();
        let x = [1.0, 2.0, 0.0, -1.0, 3.0];
        let y = b.matvec(&x);
        for v in y {
            assert!((v + 0.2 * 5.0).abs() < 1e-14);
        }

        let g = k3();
        let a = exact_operator(&g, LowRankFactors::zero(3)).unwrap();
        assert_eq!(a.matvec(&[1.0, 0.0, 0.0]), vec![0.0, 1.0, 1.0]);

        let k = g.degrees().as_f64();
        let cl = exact_operator(&g, LowRankFactors::chung_lu(&k).unwrap()).unwrap();
        let md = modularity_operator(&g).unwrap();
        assert_eq!(to_dense(&cl), to_dense(&md));

        assert!(exact_operator(&g, LowRankFactors::zero(4)).is_err());
        assert!(LowRankFactors::new(3, 1, vec![0.0; 3], vec![0.0; 2]).is_err());
    }

    #[test]
    fn complete_and_star_spectra() {
        let k4 = Graph::from_edges(4, (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j)))).unwrap();
        let a = exact_operator(&k4, LowRankFactors::zero(4)).unwrap();
        let eig = top_eigenpairs(&a, 1, &LanczosOptions::default()).unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-10);

        let leaves = 9;
        let star = Graph::from_edges(leaves + 1, (1..=leaves).map(|l| (0, l))).unwrap();
        let a = exact_operator(&star, LowRankFactors::zero(leaves + 1)).unwrap();
        let eig = top_eigenpairs(&a, 1, &LanczosOptions::default()).unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-10);
        assert!((spectral_norm(&a, &LanczosOptions::default()).unwrap() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn rmat_factors_rank_checks() {
        let rank_one = RmatModel {
            base: [0.36, 0.24, 0.24, 0.16],
            levels: 4,
            iterations: 1,
            keep_diagonal: true,
        };
        // With t = 1 the probability matrix is the Kronecker power itself,
        // which has rank one when the base does.
        let f = rmat_expected_factors(&rank_one, 1).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let p = rank_one.undirected_probability(i, j);
                assert!((f.entry(i, j) - p).abs() < 1e-10);
            }
        }
        let model = RmatModel::new(RMAT_DEFAULT_BASE, 4, 12).unwrap();
        assert!(rmat_expected_factors(&model, 17).is_err());
    }

    #[test]
    fn binary_dump_round_trips() {
        let eigs = EigenPairs {
            values: vec![2.0, -1.0],
            vectors: vec![vec![0.6, 0.8, 0.0], vec![0.0, 0.0, 1.0]],
            residuals: vec![0.0, 0.0],
            tol: 1e-8,
        };
        let mut buf = Vec::new();
        write_eigs_binary(&eigs, &mut buf).unwrap();
        let (values, vectors) = read_eigs_binary(&buf).unwrap();
        assert_eq!(values, eigs.values);
        assert_eq!(vectors, eigs.vectors);
        assert!(read_eigs_binary(&buf[..buf.len() - 1]).is_err());
    }
}
