//! Restarted Lanczos for the algebraically largest eigenpairs of a symmetric
//! operator.
//!
//! Thick-restart variant with full (twice-iterated classical Gram–Schmidt)
//! reorthogonalization. After each restart the wanted Ritz vectors are kept
//! together with the residual direction, which makes the projected matrix an
//! arrowhead block followed by a tridiagonal tail; it is small and solved
//! densely.

use nalgebra::{DMatrix, DMatrixView, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, sorted_eigen, LinearOperator};
use crate::rng::RngSeed;

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    pub tol: f64,
    pub max_restarts: usize,
    /// Krylov basis size; defaults to `max(2m + 1, m + 20)` capped at `N`.
    pub basis_size: Option<usize>,
    pub seed: u64,
    /// Overrides the seeded random start vector.
    pub start: Option<Vec<f64>>,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-8,
            max_restarts: 200,
            basis_size: None,
            seed: 0,
            start: None,
        }
    }
}

impl LanczosOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// The top `m` eigenpairs, eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// `‖B u_i − λ_i u_i‖₂` measured after convergence.
    pub residuals: Vec<f64>,
    pub tol: f64,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }
}

struct Basis {
    n: usize,
    data: Vec<f64>,
}

impl Basis {
    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n..(j + 1) * self.n]
    }

    fn view(&self, cols: usize) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data[..cols * self.n], self.n, cols)
    }

    /// Removes the components of `w` along columns `0..cols`, twice.
    fn orthogonalize(&self, w: &mut [f64], cols: usize) {
        if cols == 0 {
            return;
        }
        let v = self.view(cols);
        for _ in 0..2 {
            let wv = DVector::from_column_slice(w);
            let h = v.tr_mul(&wv);
            let proj = v * h;
            for (wi, pi) in w.iter_mut().zip(proj.iter()) {
                *wi -= pi;
            }
        }
    }
}

fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let nv = norm2(&v);
        if nv > 0.0 {
            v.iter_mut().for_each(|x| *x /= nv);
            return v;
        }
    }
}

/// Computes the `m` algebraically largest eigenpairs of `op`.
pub fn largest_eigenpairs<Op: LinearOperator + ?Sized>(
    op: &Op,
    m: usize,
    opts: &LanczosOptions,
) -> Result<EigenPairs> {
    let n = op.dim();
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "requested {m} eigenpairs of a {n}-dimensional operator"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let ncv = opts
        .basis_size
        .unwrap_or_else(|| (2 * m + 1).max(m + 20))
        .max(m + 1)
        .min(n);
    let keep = (m + ((ncv - m) / 2).max(1)).min(ncv - 1);

    let mut rng = RngSeed::new(opts.seed, 0x1a2c_705).rng();
    let mut basis = Basis {
        n,
        data: vec![0.0; n * (ncv + 1)],
    };
    let start = match &opts.start {
        Some(s) if s.len() == n && norm2(s) > 0.0 => {
            let ns = norm2(s);
            s.iter().map(|x| x / ns).collect()
        }
        Some(s) if s.len() != n => {
            return Err(Error::Shape(format!(
                "start vector has length {} for dimension {n}",
                s.len()
            )))
        }
        _ => random_unit(&mut rng, n),
    };
    basis.col_mut(0).copy_from_slice(&start);

    let mut t = DMatrix::<f64>::zeros(ncv, ncv);
    let mut w = vec![0.0; n];
    let mut kept = 0usize;
    let mut scale = 0.0f64;
    let mut restarts = 0usize;

    loop {
        let mut last_beta = 0.0;
        for j in kept..ncv {
            op.apply(basis.col(j), &mut w);
            let alpha = dot(basis.col(j), &w);
            t[(j, j)] = alpha;
            scale = scale.max(alpha.abs());
            basis.orthogonalize(&mut w, j + 1);
            let mut beta = norm2(&w);
            if j + 1 == n || beta <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                // Invariant subspace: continue from a fresh direction
                // orthogonal to everything so far.
                beta = 0.0;
                if j + 1 < n {
                    let mut fresh;
                    loop {
                        fresh = random_unit(&mut rng, n);
                        basis.orthogonalize(&mut fresh, j + 1);
                        let nf = norm2(&fresh);
                        if nf > 1e-8 {
                            fresh.iter_mut().for_each(|x| *x /= nf);
                            break;
                        }
                    }
                    w.copy_from_slice(&fresh);
                } else {
                    w.iter_mut().for_each(|x| *x = 0.0);
                }
            } else {
                w.iter_mut().for_each(|x| *x /= beta);
                scale = scale.max(beta);
            }
            basis.col_mut(j + 1).copy_from_slice(&w);
            if j + 1 < ncv {
                t[(j, j + 1)] = beta;
                t[(j + 1, j)] = beta;
            }
            last_beta = beta;
        }

        let (theta, y) = sorted_eigen(t.clone());
        let estimates: Vec<f64> = (0..ncv).map(|i| (last_beta * y[(ncv - 1, i)]).abs()).collect();
        let accept = |i: usize, r: f64| r <= opts.tol * theta[i].abs().max(1.0);
        let converged = (0..m).all(|i| accept(i, estimates[i]));

        if converged {
            let ritz = basis.view(ncv) * y.columns(0, m);
            let mut values = Vec::with_capacity(m);
            let mut vectors = Vec::with_capacity(m);
            let mut residuals = Vec::with_capacity(m);
            let mut au = vec![0.0; n];
            for i in 0..m {
                let mut u: Vec<f64> = ritz.column(i).iter().copied().collect();
                let nu = norm2(&u);
                u.iter_mut().for_each(|x| *x /= nu);
                let pivot = u
                    .iter()
                    .copied()
                    .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
                if pivot < 0.0 {
                    u.iter_mut().for_each(|x| *x = -*x);
                }
                op.apply(&u, &mut au);
                let lambda = dot(&u, &au);
                let r = au
                    .iter()
                    .zip(&u)
                    .map(|(a, b)| (a - lambda * b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                values.push(lambda);
                vectors.push(u);
                residuals.push(r);
            }
            if (0..m).all(|i| residuals[i] <= opts.tol * values[i].abs().max(1.0)) {
                return Ok(EigenPairs {
                    values,
                    vectors,
                    residuals,
                    tol: opts.tol,
                });
            }
            if restarts >= opts.max_restarts {
                return Err(no_convergence(restarts, residuals));
            }
        }

        restarts += 1;
        if restarts > opts.max_restarts {
            return Err(no_convergence(opts.max_restarts, estimates[..m].to_vec()));
        }

        // Thick restart: keep the leading Ritz vectors and the residual
        // direction; the projected matrix becomes arrowhead.
        let ritz = basis.view(ncv) * y.columns(0, keep);
        let residual_dir = basis.col(ncv).to_vec();
        basis.data[..n * keep].copy_from_slice(ritz.as_slice());
        basis.col_mut(keep).copy_from_slice(&residual_dir);
        t.fill(0.0);
        for i in 0..keep {
            t[(i, i)] = theta[i];
            let s = last_beta * y[(ncv - 1, i)];
            t[(i, keep)] = s;
            t[(keep, i)] = s;
        }
        kept = keep;
    }
}

fn no_convergence(restarts: usize, residuals: Vec<f64>) -> Error {
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    Error::NoConvergence {
        restarts,
        worst_residual: worst,
        residuals,
    }
}
