//! Direct factorizations backed by `faer`.

use faer::linalg::solvers::PartialPivLu;
use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{PhiFemError, Result};
use crate::linalg::csr::CsrMatrix;

pub fn to_faer_dense(a: &CsrMatrix) -> Mat<f64> {
    let mut m = Mat::<f64>::zeros(a.n_rows(), a.n_cols());
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            m[(i, c)] = v;
        }
    }
    m
}

fn to_col(b: &[f64]) -> Mat<f64> {
    Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i])
}

fn from_col(m: &Mat<f64>) -> Result<Vec<f64>> {
    let x: Vec<f64> = (0..m.nrows()).map(|i| m[(i, 0)]).collect();
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(PhiFemError::SingularMatrix)
    }
}

/// An LU factorization able to solve with `A` and with `Aᵀ`.
pub enum DirectSolver {
    Dense(PartialPivLu<f64>),
    Sparse(Lu<usize, f64>),
}

impl std::fmt::Debug for DirectSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DirectSolver::Dense(_) => f.write_str("DirectSolver::Dense"),
            DirectSolver::Sparse(_) => f.write_str("DirectSolver::Sparse"),
        }
    }
}

impl DirectSolver {
    pub fn dense(a: &CsrMatrix) -> Result<Self> {
        square(a)?;
        let lu = to_faer_dense(a).partial_piv_lu();
        let n = a.n_rows();
        // partial pivoting leaves exact zeros on the diagonal of U when singular
        let u = lu.U();
        if (0..n).any(|i| u[(i, i)] == 0.0 || !u[(i, i)].is_finite()) {
            return Err(PhiFemError::SingularMatrix);
        }
        Ok(DirectSolver::Dense(lu))
    }

    pub fn sparse(a: &CsrMatrix) -> Result<Self> {
        square(a)?;
        let mut triplets = Vec::with_capacity(a.nnz());
        for i in 0..a.n_rows() {
            let (cols, vals) = a.row(i);
            triplets.extend(cols.iter().zip(vals).map(|(&c, &v)| Triplet::new(i, c, v)));
        }
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.n_rows(), a.n_cols(), &triplets)
            .map_err(|e| PhiFemError::InvalidArgument(format!("{e:?}")))?;
        let lu = m.sp_lu().map_err(|_| PhiFemError::SingularMatrix)?;
        Ok(DirectSolver::Sparse(lu))
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let rhs = to_col(b);
        let x = match self {
            DirectSolver::Dense(lu) => lu.solve(&rhs),
            DirectSolver::Sparse(lu) => lu.solve(&rhs),
        };
        from_col(&x)
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        let rhs = to_col(b);
        let x = match self {
            DirectSolver::Dense(lu) => lu.solve_transpose(&rhs),
            DirectSolver::Sparse(lu) => lu.solve_transpose(&rhs),
        };
        from_col(&x)
    }
}

fn square(a: &CsrMatrix) -> Result<()> {
    if a.n_rows() != a.n_cols() {
        return Err(PhiFemError::DimensionMismatch { expected: a.n_rows(), got: a.n_cols() });
    }
    Ok(())
}

/// All singular values of `A`, descending, from a dense SVD.
pub fn dense_singular_values(a: &CsrMatrix) -> Result<Vec<f64>> {
    to_faer_dense(a).singular_values().map_err(|_| PhiFemError::NoConvergence { iterations: 0, residual: f64::NAN })
}
