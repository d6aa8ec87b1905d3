//! 2-norm condition number `κ(A) = σ_max / σ_min` of a non-symmetric matrix.
//!
//! `σ_max` comes from power iteration on `AᵀA`, `σ_min` from power iteration
//! on `(AᵀA)⁻¹ = A⁻¹A⁻ᵀ`, realized by one solve with `Aᵀ` and one with `A`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PhiFemError, Result};
use crate::linalg::csr::{norm2, CsrMatrix};
use crate::linalg::direct::{dense_singular_values, DirectSolver};
use crate::linalg::krylov::{gmres, GmresOptions, Ilu0};
use crate::linalg::solve::DENSE_THRESHOLD;

const START_SEED: u64 = 0x5eed_c0de;

#[derive(Debug, Clone, Copy)]
pub struct ConditionOptions {
    /// Relative change of the Rayleigh quotient at which an iteration stops.
    pub tol: f64,
    pub max_iters: usize,
    pub dense_threshold: usize,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iters: 10_000, dense_threshold: DENSE_THRESHOLD }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionEstimate {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub kappa: f64,
    pub iterations_max: usize,
    pub iterations_min: usize,
    /// Last relative Rayleigh-quotient change of each iteration.
    pub change_max: f64,
    pub change_min: f64,
    /// False when either iteration hit `max_iters`; the values are then partial.
    pub converged: bool,
}

enum InnerSolver {
    Direct(DirectSolver),
    Krylov { a: CsrMatrix, at: CsrMatrix, ilu: Ilu0, ilu_t: Ilu0, tol: f64 },
}

impl InnerSolver {
    fn new(a: &CsrMatrix, opts: &ConditionOptions) -> Result<Self> {
        if a.n_rows() <= opts.dense_threshold {
            return Ok(InnerSolver::Direct(DirectSolver::dense(a)?));
        }
        let at = a.transpose();
        Ok(InnerSolver::Krylov {
            ilu: Ilu0::new(a)?,
            ilu_t: Ilu0::new(&at)?,
            a: a.clone(),
            at,
            tol: (opts.tol / 100.0).max(1e-14),
        })
    }

    fn solve(&self, b: &[f64], transpose: bool) -> Result<Vec<f64>> {
        match self {
            InnerSolver::Direct(lu) if transpose => lu.solve_transpose(b),
            InnerSolver::Direct(lu) => lu.solve(b),
            InnerSolver::Krylov { a, at, ilu, ilu_t, tol } => {
                let (m, p) = if transpose { (at, ilu_t) } else { (a, ilu) };
                let out = gmres(m, b, None, p, GmresOptions { tol: *tol, ..Default::default() });
                if out.converged {
                    Ok(out.x)
                } else {
                    Err(PhiFemError::NoConvergence { iterations: out.iterations, residual: out.relative_residual })
                }
            }
        }
    }
}

fn start_vector(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let s = norm2(&v);
    v.into_iter().map(|x| x / s).collect()
}

/// Power iteration on a symmetric positive semidefinite operator given as a
/// closure; returns `(rayleigh, iterations, last relative change, converged)`.
fn power_iteration(
    n: usize,
    tol: f64,
    max_iters: usize,
    mut apply: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
) -> Result<(f64, usize, f64, bool)> {
    let mut v = start_vector(n);
    let mut prev = f64::NAN;
    let mut change = f64::INFINITY;
    for it in 1..=max_iters {
        let (rq, w) = apply(&v)?;
        let wn = norm2(&w);
        if wn == 0.0 || !wn.is_finite() {
            return Err(PhiFemError::SingularMatrix);
        }
        if prev.is_finite() {
            change = (rq - prev).abs() / rq.abs();
            if change <= tol {
                return Ok((rq, it, change, true));
            }
        }
        prev = rq;
        v = w.into_iter().map(|x| x / wn).collect();
    }
    Ok((prev, max_iters, change, false))
}

pub fn estimate_condition_number(a: &CsrMatrix, opts: &ConditionOptions) -> Result<ConditionEstimate> {
    if a.n_rows() != a.n_cols() {
        return Err(PhiFemError::DimensionMismatch { expected: a.n_rows(), got: a.n_cols() });
    }
    let n = a.n_rows();
    if n == 0 {
        return Err(PhiFemError::InvalidArgument("empty matrix".into()));
    }

    let (rq_max, it_max, ch_max, ok_max) = power_iteration(n, opts.tol, opts.max_iters, |v| {
        let av = a.matvec(v);
        let rq = av.iter().map(|x| x * x).sum::<f64>();
        Ok((rq, a.matvec_transpose(&av)))
    })?;

    let inner = InnerSolver::new(a, opts)?;
    let (rq_min, it_min, ch_min, ok_min) = power_iteration(n, opts.tol, opts.max_iters, |v| {
        let y = inner.solve(v, true)?;
        let rq = y.iter().map(|x| x * x).sum::<f64>();
        Ok((rq, inner.solve(&y, false)?))
    })?;

    let sigma_max = rq_max.sqrt();
    let sigma_min = 1.0 / rq_min.sqrt();
    Ok(ConditionEstimate {
        sigma_max,
        sigma_min,
        kappa: (sigma_max / sigma_min).max(1.0),
        iterations_max: it_max,
        iterations_min: it_min,
        change_max: ch_max,
        change_min: ch_min,
        converged: ok_max && ok_min,
    })
}

/// Exact `κ₂` from a dense SVD; cubic cost, meant as an oracle for small matrices.
pub fn dense_condition_number(a: &CsrMatrix) -> Result<f64> {
    let s = dense_singular_values(a)?;
    let (hi, lo) = (s[0], s[s.len() - 1]);
    if lo == 0.0 {
        return Err(PhiFemError::SingularMatrix);
    }
    Ok(hi / lo)
}
