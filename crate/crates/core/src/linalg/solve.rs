use std::fmt;

use crate::error::{PhiFemError, Result};
use crate::linalg::csr::{norm2, CsrMatrix};
use crate::linalg::direct::DirectSolver;
use crate::linalg::krylov::{gmres, GmresOptions, Ilu0};

/// Largest dimension handled by the dense LU path.
pub const DENSE_THRESHOLD: usize = 5000;

const REFINEMENT_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    DenseLu,
    GmresIlu,
    /// Sparse LU taken after GMRES failed to reach the tolerance.
    SparseLu,
}

impl fmt::Display for SolverMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverMethod::DenseLu => "dense-lu",
            SolverMethod::GmresIlu => "gmres-ilu0",
            SolverMethod::SparseLu => "sparse-lu",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub dense_threshold: usize,
    pub gmres: GmresOptions,
    /// Retry with a sparse direct factorization when GMRES stalls.
    pub direct_fallback: bool,
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, dense_threshold: DENSE_THRESHOLD, gmres: GmresOptions { tol, ..Default::default() }, direct_fallback: true }
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::with_tol(1e-12)
    }
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub solution: Vec<f64>,
    /// Krylov iterations; 0 on direct paths.
    pub iterations: usize,
    pub relative_residual: f64,
    pub method: SolverMethod,
}

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let bn = norm2(b);
    if bn == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / bn
    }
}

/// Direct solve followed by a few steps of iterative refinement.
fn direct_solve(a: &CsrMatrix, b: &[f64], solver: &DirectSolver, tol: f64) -> Result<(Vec<f64>, f64)> {
    let mut x = solver.solve(b)?;
    let mut rel = relative_residual(a, &x, b);
    for _ in 0..REFINEMENT_STEPS {
        if rel <= tol {
            break;
        }
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let dx = solver.solve(&r)?;
        let cand: Vec<f64> = x.iter().zip(&dx).map(|(u, d)| u + d).collect();
        let cand_rel = relative_residual(a, &cand, b);
        if cand_rel >= rel {
            break;
        }
        x = cand;
        rel = cand_rel;
    }
    Ok((x, rel))
}

pub fn solve(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<SolverReport> {
    if a.n_rows() != a.n_cols() {
        return Err(PhiFemError::DimensionMismatch { expected: a.n_rows(), got: a.n_cols() });
    }
    if b.len() != a.n_rows() {
        return Err(PhiFemError::DimensionMismatch { expected: a.n_rows(), got: b.len() });
    }
    if !(opts.tol > 0.0 && opts.tol <= 1e-6) {
        return Err(PhiFemError::InvalidArgument(format!("solver tolerance {} outside (0, 1e-6]", opts.tol)));
    }
    let n = a.n_rows();

    if n <= opts.dense_threshold {
        let lu = DirectSolver::dense(a)?;
        let (x, rel) = direct_solve(a, b, &lu, opts.tol)?;
        if rel > opts.tol {
            return Err(PhiFemError::NoConvergence { iterations: 0, residual: rel });
        }
        return Ok(SolverReport { solution: x, iterations: 0, relative_residual: rel, method: SolverMethod::DenseLu });
    }

    let krylov = Ilu0::new(a).map(|ilu| gmres(a, b, None, &ilu, GmresOptions { tol: opts.tol, ..opts.gmres }));
    match krylov {
        Ok(out) if out.converged => {
            return Ok(SolverReport {
                solution: out.x,
                iterations: out.iterations,
                relative_residual: out.relative_residual,
                method: SolverMethod::GmresIlu,
            })
        }
        Ok(out) if !opts.direct_fallback => {
            return Err(PhiFemError::NoConvergence { iterations: out.iterations, residual: out.relative_residual })
        }
        Err(e) if !opts.direct_fallback => return Err(e),
        _ => {}
    }
    let lu = DirectSolver::sparse(a)?;
    let (x, rel) = direct_solve(a, b, &lu, opts.tol)?;
    if rel > opts.tol {
        return Err(PhiFemError::NoConvergence { iterations: 0, residual: rel });
    }
    Ok(SolverReport { solution: x, iterations: 0, relative_residual: rel, method: SolverMethod::SparseLu })
}
