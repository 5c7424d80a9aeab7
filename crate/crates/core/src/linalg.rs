//! Small linear-algebra helpers shared by the eigensolver, the sparse-PCA
//! solver and the dense oracles.

use nalgebra::{DMatrix, SymmetricEigen};

/// A symmetric linear map applied without materializing its matrix.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = Op · x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// `−Op`, used to reach the algebraically smallest eigenvalues.
pub struct Negated<'a, T: ?Sized>(pub &'a T);

impl<T: LinearOperator + ?Sized> LinearOperator for Negated<'_, T> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y);
        for v in y.iter_mut() {
            *v = -*v;
        }
    }
}

/// Dense symmetric matrix as an operator.
pub struct DenseSymmetric<'a>(pub &'a DMatrix<f64>);

impl LinearOperator for DenseSymmetric<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        // Column-major storage: accumulate columns, y = Σ_j x_j · col_j.
        let n = self.0.nrows();
        let data = self.0.as_slice();
        y.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let col = &data[j * n..(j + 1) * n];
            for (yi, &a) in y.iter_mut().zip(col) {
                *yi += a * xj;
            }
        }
    }
}

/// Materializes any operator column by column.
pub fn to_dense<Op: LinearOperator + ?Sized>(op: &Op) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        m.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    m
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Full symmetric eigendecomposition with eigenvalues sorted descending.
/// Only the lower triangle of `m` is read.
pub fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), m);
    }
    match to_faer(&m).self_adjoint_eigen(faer::Side::Lower) {
        Ok(eig) => {
            let (s, u) = (eig.S().column_vector(), eig.U());
            let values = (0..n).map(|k| s[n - 1 - k]).collect();
            (values, DMatrix::from_fn(n, n, |i, k| u[(i, n - 1 - k)]))
        }
        Err(_) => {
            let eig = SymmetricEigen::new(m);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let mut vectors = DMatrix::zeros(n, n);
            for (dst, &src) in order.iter().enumerate() {
                vectors.set_column(dst, &eig.eigenvectors.column(src));
            }
            (values, vectors)
        }
    }
}

/// Eigenvalues of a symmetric matrix in descending order.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut values = match to_faer(m).self_adjoint_eigenvalues(faer::Side::Lower) {
        Ok(v) => v,
        Err(_) => m.clone().symmetric_eigenvalues().iter().copied().collect(),
    };
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Spectral norm of a symmetric matrix by dense eigensolve.
pub fn symmetric_spectral_norm(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m)
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Largest singular value of an arbitrary dense matrix, via the smaller of
/// `M Mᵀ` and `Mᵀ M`.
pub fn largest_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() <= m.ncols() {
        m * m.transpose()
    } else {
        m.transpose() * m
    };
    symmetric_eigenvalues(&gram)
        .first()
        .copied()
        .unwrap_or(0.0)
        .max(0.0)
        .sqrt()
}
