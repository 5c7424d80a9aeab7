//! Sparse principal component of a residuals matrix via the penalized
//! semidefinite relaxation
//!
//! ```text
//! maximize  tr(B X) − λ 1ᵀ|X|1   subject to  X ⪰ 0, tr X = 1,
//! ```
//!
//! solved by projected subgradient ascent on the spectahedron.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::detection::{identify_threshold, DetectionOutcome};
use crate::error::{Error, Result};
use crate::lanczos::{largest_eigenpairs, LanczosOptions};
use crate::linalg::{norm1, sorted_eigen, DenseSymmetric};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepSize {
    /// `η_k = η₀/√k` with `η₀` the reciprocal Frobenius norm of the first subgradient.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpcaConfig {
    pub lambda: f64,
    pub step_size: StepSize,
    pub max_iters: usize,
    pub obj_tol: f64,
}

impl Default for SpcaConfig {
    fn default() -> Self {
        SpcaConfig {
            lambda: 0.0,
            step_size: StepSize::Auto,
            max_iters: 500,
            obj_tol: 1e-6,
        }
    }
}

impl SpcaConfig {
    pub fn with_lambda(lambda: f64) -> SpcaConfig {
        SpcaConfig {
            lambda,
            ..SpcaConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let step_ok = match self.step_size {
            StepSize::Auto => true,
            StepSize::Fixed(eta) => eta > 0.0 && eta.is_finite(),
        };
        if !(self.lambda >= 0.0 && self.lambda.is_finite())
            || !step_ok
            || self.max_iters == 0
            || !(self.obj_tol > 0.0)
        {
            return Err(Error::InvalidParameter(format!(
                "bad sparse PCA settings {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpcaResult {
    pub x_matrix: DMatrix<f64>,
    /// Unit principal eigenvector of `x_matrix`.
    pub x_hat: Vec<f64>,
    /// Objective value of every iterate, starting with `X₀`.
    pub objective_trace: Vec<f64>,
    pub best_objective: f64,
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let tau = simplex_threshold(v);
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

/// The shift `τ` with `Σ max(v_i − τ, 0) = 1`.
fn simplex_threshold(v: &[f64]) -> f64 {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = u[0] - 1.0;
    for (j, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    tau
}

/// Low-rank iterate `Σ w_i v_i v_iᵀ`.
struct Spectral {
    weights: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

impl Spectral {
    fn to_dense(&self, n: usize) -> DMatrix<f64> {
        let scale: Vec<f64> = self.weights.iter().map(|w| w.max(0.0).sqrt()).collect();
        let v = DMatrix::from_fn(n, self.weights.len(), |i, k| scale[k] * self.vectors[k][i]);
        &v * v.transpose()
    }

    fn principal(&self) -> Vec<f64> {
        let k = (0..self.weights.len())
            .max_by(|&a, &b| self.weights[a].total_cmp(&self.weights[b]).then(b.cmp(&a)))
            .expect("nonempty spectrum");
        self.vectors[k].clone()
    }
}

fn full_projection(s: &DMatrix<f64>) -> Spectral {
    let (values, vectors) = sorted_eigen(s.clone());
    let weights = project_simplex(&values);
    let keep: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    Spectral {
        weights: keep.iter().map(|&i| weights[i]).collect(),
        vectors: keep
            .iter()
            .map(|&i| vectors.column(i).iter().copied().collect())
            .collect(),
    }
}

/// Projection onto `{X ⪰ 0, tr X = 1}` via a full eigendecomposition.
pub fn project_spectahedron(s: &DMatrix<f64>) -> DMatrix<f64> {
    full_projection(s).to_dense(s.nrows())
}

/// Same projection from the top `r` eigenpairs only, growing `r` until the
/// `r`-th eigenvalue lies at or below the simplex shift (so every discarded
/// eigenvalue would be clipped to zero anyway).
fn partial_projection(s: &DMatrix<f64>, start_rank: usize, warm: &[f64]) -> Spectral {
    let n = s.nrows();
    let mut r = start_rank.max(2);
    while 8 * r < n {
        let opts = LanczosOptions {
            tol: 1e-11,
            max_restarts: 50,
            start: Some(warm.to_vec()),
            ..LanczosOptions::default()
        };
        let Ok(eig) = largest_eigenpairs(&DenseSymmetric(s), r, &opts) else {
            break;
        };
        let tau = simplex_threshold(&eig.values);
        if eig.values[r - 1] <= tau {
            let mut out = Spectral {
                weights: Vec::new(),
                vectors: Vec::new(),
            };
            for (lam, v) in eig.values.iter().zip(eig.vectors) {
                if lam - tau > 0.0 {
                    out.weights.push(lam - tau);
                    out.vectors.push(v);
                }
            }
            return out;
        }
        r *= 2;
    }
    full_projection(s)
}

/// `tr(B X) − λ Σ|X_ij|`.
pub fn objective(b: &DMatrix<f64>, x: &DMatrix<f64>, lambda: f64) -> f64 {
    let (mut tr, mut l1) = (0.0, 0.0);
    for (bij, xij) in b.as_slice().iter().zip(x.as_slice()) {
        tr += bij * xij;
        l1 += xij.abs();
    }
    tr - lambda * l1
}

/// Projected subgradient ascent from the top eigenvector of `B`; returns the
/// best iterate seen.
pub fn solve_spca(b: &DMatrix<f64>, cfg: &SpcaConfig) -> Result<SpcaResult> {
    cfg.validate()?;
    let n = b.nrows();
    if n == 0 || b.ncols() != n {
        return Err(Error::Shape(format!(
            "{} × {} residuals matrix",
            b.nrows(),
            b.ncols()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sparse PCA input"));
    }

    let top = if n <= 3 {
        let (_, vecs) = sorted_eigen(b.clone());
        vecs.column(0).iter().copied().collect()
    } else {
        let opts = LanczosOptions::default().with_tol(1e-12);
        largest_eigenpairs(&DenseSymmetric(b), 1, &opts)?
            .vectors
            .remove(0)
    };
    let mut current = Spectral {
        weights: vec![1.0],
        vectors: vec![top],
    };
    let mut x = current.to_dense(n);
    let mut obj = objective(b, &x, cfg.lambda);
    let mut trace = vec![obj];
    let mut best = (obj, x.clone(), current.principal());

    let mut eta0 = None;
    let mut y = DMatrix::zeros(n, n);
    for k in 1..=cfg.max_iters {
        // Subgradient B − λ sign(X), with sign(0) = 0.
        let mut gnorm2 = 0.0;
        for ((gy, &bij), &xij) in y.as_mut_slice().iter_mut().zip(b.as_slice()).zip(x.as_slice()) {
            let sign = if xij > 0.0 {
                1.0
            } else if xij < 0.0 {
                -1.0
            } else {
                0.0
            };
            *gy = bij - cfg.lambda * sign;
            gnorm2 += *gy * *gy;
        }
        let eta = match cfg.step_size {
            StepSize::Fixed(eta) => eta,
            StepSize::Auto => {
                let e0 = *eta0.get_or_insert(if gnorm2 > 0.0 { 1.0 / gnorm2.sqrt() } else { 1.0 });
                e0 / (k as f64).sqrt()
            }
        };
        for (gy, &xij) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
            *gy = xij + eta * *gy;
        }
        // Symmetrize against rounding before the eigensolve.
        for j in 0..n {
            for i in 0..j {
                let avg = 0.5 * (y[(i, j)] + y[(j, i)]);
                y[(i, j)] = avg;
                y[(j, i)] = avg;
            }
        }
        let warm = current.principal();
        current = partial_projection(&y, current.weights.len() + 1, &warm);
        x = current.to_dense(n);
        let next = objective(b, &x, cfg.lambda);
        trace.push(next);
        if next > best.0 {
            best = (next, x.clone(), current.principal());
        }
        let done = (next - obj).abs() < cfg.obj_tol;
        obj = next;
        if done {
            break;
        }
    }

    let (best_objective, x_matrix, mut x_hat) = best;
    let scale = x_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
    x_hat.iter_mut().for_each(|v| *v /= scale);
    Ok(SpcaResult {
        x_matrix,
        x_hat,
        objective_trace: trace,
        best_objective,
    })
}

/// `‖x̂‖₁`; small values indicate a localized component.
pub fn stat_sparse_pca(res: &SpcaResult) -> f64 {
    norm1(&res.x_hat)
}

/// Thresholds the sparse principal component.
pub fn identify_sparse(res: &SpcaResult, frac: f64) -> Result<DetectionOutcome> {
    identify_threshold(&res.x_hat, frac)
}
