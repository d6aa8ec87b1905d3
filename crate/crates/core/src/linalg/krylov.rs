//! Restarted GMRES with an ILU(0) right preconditioner.

use crate::error::{PhiFemError, Result};
use crate::linalg::csr::{dot, norm2, CsrMatrix};

/// Incomplete LU factorization on the sparsity pattern of `A`.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    values: Vec<f64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.n_rows();
        let row_ptr = a.row_ptr();
        let cols = a.col_idx();
        let mut values = a.values().to_vec();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            if let Ok(p) = cols[row_ptr[i]..row_ptr[i + 1]].binary_search(&i) {
                diag[i] = row_ptr[i] + p;
            } else {
                return Err(PhiFemError::SingularMatrix);
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for p in start..end {
                pos[cols[p]] = p;
            }
            for p in start..end {
                let k = cols[p];
                if k >= i {
                    break;
                }
                let pivot = values[diag[k]];
                if pivot == 0.0 || !pivot.is_finite() {
                    return Err(PhiFemError::SingularMatrix);
                }
                let factor = values[p] / pivot;
                values[p] = factor;
                for q in diag[k] + 1..row_ptr[k + 1] {
                    let j = cols[q];
                    let target = pos[j];
                    if target != usize::MAX {
                        values[target] -= factor * values[q];
                    }
                }
            }
            for p in start..end {
                pos[cols[p]] = usize::MAX;
            }
            if values[diag[i]] == 0.0 {
                return Err(PhiFemError::SingularMatrix);
            }
        }
        Ok(Self { lu: a.clone(), values, diag })
    }

    /// Solves `L U x = b` in place.
    pub fn apply(&self, x: &mut [f64]) {
        let rp = self.lu.row_ptr();
        let cols = self.lu.col_idx();
        let n = x.len();
        for i in 0..n {
            let mut s = x[i];
            for p in rp[i]..self.diag[i] {
                s -= self.values[p] * x[cols[p]];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for p in self.diag[i] + 1..rp[i + 1] {
                s -= self.values[p] * x[cols[p]];
            }
            x[i] = s / self.values[self.diag[i]];
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub tol: f64,
    pub restart: usize,
    pub max_iters: usize,
    /// Give up when the residual has not halved over this many restart cycles.
    pub stall_cycles: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { tol: 1e-10, restart: 150, max_iters: 6000, stall_cycles: 4 }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Right-preconditioned restarted GMRES for `A x = b` starting from `x0`.
/// Convergence is judged on the true residual at each restart.
pub fn gmres(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, precond: &Ilu0, opts: GmresOptions) -> GmresOutcome {
    let n = b.len();
    let b_norm = norm2(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if b_norm == 0.0 {
        return GmresOutcome { x: vec![0.0; n], iterations: 0, relative_residual: 0.0, converged: true };
    }
    let m = opts.restart.max(1);
    let mut iterations = 0;
    let mut best = (f64::INFINITY, x.clone());
    let mut history: Vec<f64> = Vec::new();

    loop {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        let rel = beta / b_norm;
        if rel < best.0 {
            best = (rel, x.clone());
        }
        history.push(best.0);
        let stalled = opts.stall_cycles > 0
            && history.len() > opts.stall_cycles
            && best.0 > 0.5 * history[history.len() - 1 - opts.stall_cycles];
        if rel <= opts.tol || iterations >= opts.max_iters || stalled {
            let (rel, x) = best;
            return GmresOutcome { x, iterations, relative_residual: rel, converged: rel <= opts.tol };
        }

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut steps = 0;
        let mut z = vec![0.0; n];

        for j in 0..m {
            z.copy_from_slice(&basis[j]);
            precond.apply(&mut z);
            let mut w = a.matvec(&z);
            for (i, vi) in basis.iter().enumerate() {
                let hij = dot(&w, vi);
                hess[i][j] = hij;
                w.iter_mut().zip(vi).for_each(|(wk, vk)| *wk -= hij * vk);
            }
            let wn = norm2(&w);
            hess[j + 1][j] = wn;
            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let denom = hess[j][j].hypot(hess[j + 1][j]);
            if denom == 0.0 {
                break;
            }
            cs[j] = hess[j][j] / denom;
            sn[j] = hess[j + 1][j] / denom;
            hess[j][j] = denom;
            hess[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            steps = j + 1;
            iterations += 1;
            if wn == 0.0 || (g[j + 1].abs() / b_norm) <= opts.tol * 0.5 || iterations >= opts.max_iters {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        if steps == 0 {
            let (rel, x) = best;
            return GmresOutcome { x, iterations, relative_residual: rel, converged: rel <= opts.tol };
        }

        let mut y = vec![0.0; steps];
        for i in (0..steps).rev() {
            let s: f64 = (i + 1..steps).map(|k| hess[i][k] * y[k]).sum();
            y[i] = (g[i] - s) / hess[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&basis) {
            update.iter_mut().zip(vi).for_each(|(u, v)| *u += yi * v);
        }
        precond.apply(&mut update);
        x.iter_mut().zip(&update).for_each(|(xi, ui)| *xi += ui);
        if x.iter().any(|v| !v.is_finite()) {
            let (rel, x) = best;
            return GmresOutcome { x, iterations, relative_residual: rel, converged: false };
        }
    }
}
