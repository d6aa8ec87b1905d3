//! Quadrature on the reference triangle and on edges.
//!
//! Triangle rules are conical (collapsed) Gauss products: the unit square is
//! mapped onto the reference triangle by `(u, v) -> (u, v (1 − u))` and a
//! Gauss–Legendre tensor rule integrates the pulled-back polynomial exactly.
//! All weights are positive and every point is strictly interior.
//! Edge rules are plain Gauss–Legendre on `[0, 1]`.

use std::f64::consts::PI;

use crate::error::{PhiFemError, Result};

/// Largest polynomial degree the rule constructors accept.
pub const MAX_EXACTNESS: usize = 20;

/// Points in barycentric coordinates (`D = 3` for triangles, `D = 2` for edges)
/// with weights summing to the reference measure (1/2 and 1 respectively).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

pub type TriangleQuadrature = QuadratureRule<3>;
pub type EdgeQuadrature = QuadratureRule<2>;

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        // map [-1, 1] -> [0, 1], ascending
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn check_cap(exactness: usize) -> Result<()> {
    if exactness > MAX_EXACTNESS {
        return Err(PhiFemError::UnsupportedExactness { requested: exactness, cap: MAX_EXACTNESS });
    }
    Ok(())
}

pub fn triangle_quadrature(exactness: usize) -> Result<TriangleQuadrature> {
    check_cap(exactness)?;
    // the Jacobian (1 - u) adds one degree in u
    let nu = (exactness + 2).div_ceil(2);
    let nv = (exactness + 1).div_ceil(2).max(1);
    let (xu, wu) = gauss_legendre_unit(nu);
    let (xv, wv) = gauss_legendre_unit(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (&u, &au) in xu.iter().zip(&wu) {
        for (&v, &av) in xv.iter().zip(&wv) {
            let xi = u;
            let eta = v * (1.0 - u);
            points.push([1.0 - xi - eta, xi, eta]);
            weights.push(au * av * (1.0 - u));
        }
    }
    Ok(QuadratureRule { points, weights, exactness })
}

pub fn edge_quadrature(exactness: usize) -> Result<EdgeQuadrature> {
    check_cap(exactness)?;
    let n = (exactness + 1).div_ceil(2).max(1);
    let (x, w) = gauss_legendre_unit(n);
    Ok(QuadratureRule { points: x.iter().map(|&s| [1.0 - s, s]).collect(), weights: w, exactness })
}
