//! Nodal P_k Lagrange bases on the reference triangle.
//!
//! Basis functions are written in barycentric form,
//! `ψ_(a,b,c) = f_a(λ0) f_b(λ1) f_c(λ2)` with `f_m(t) = Π_{j<m} (k t − j)/(j + 1)`,
//! so values and derivatives of any order come from the product rule.
//! Reference coordinates are `(ξ, η)` with `λ0 = 1 − ξ − η`, `λ1 = ξ`, `λ2 = η`.

use crate::error::{PhiFemError, Result};
use crate::mesh::Point;

/// `dλ_i / d(ξ, η)`.
const DLAMBDA: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    degree: usize,
    multi_indices: Vec<[usize; 3]>,
}

/// Basis values and reference derivatives at a set of points, row-major by point.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n_points: usize,
    pub n_basis: usize,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
    pub hessians: Vec<[[f64; 2]; 2]>,
}

impl Tabulation {
    #[inline]
    pub fn value(&self, q: usize, i: usize) -> f64 {
        self.values[q * self.n_basis + i]
    }

    #[inline]
    pub fn grad(&self, q: usize, i: usize) -> [f64; 2] {
        self.grads[q * self.n_basis + i]
    }

    #[inline]
    pub fn hessian(&self, q: usize, i: usize) -> [[f64; 2]; 2] {
        self.hessians[q * self.n_basis + i]
    }
}

pub fn node_count(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

impl ReferenceElement {
    pub fn new(degree: usize) -> Result<Self> {
        if !(1..=3).contains(&degree) {
            return Err(PhiFemError::UnsupportedDegree(degree));
        }
        let k = degree;
        let mut mi = vec![[k, 0, 0], [0, k, 0], [0, 0, k]];
        // edge e joins local vertices (e+1)%3 -> (e+2)%3
        for e in 0..3 {
            let (a, b) = ((e + 1) % 3, (e + 2) % 3);
            for m in 1..k {
                let mut idx = [0; 3];
                idx[a] = k - m;
                idx[b] = m;
                mi.push(idx);
            }
        }
        for a in 1..k {
            for b in 1..k - a {
                let c = k - a - b;
                if c >= 1 {
                    mi.push([a, b, c]);
                }
            }
        }
        debug_assert_eq!(mi.len(), node_count(k));
        Ok(Self { degree, multi_indices: mi })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_basis(&self) -> usize {
        self.multi_indices.len()
    }

    /// Barycentric multi-indices `(a, b, c)` with `a + b + c = k`; node `i` sits
    /// at barycentric coordinates `multi_indices[i] / k`.
    pub fn multi_indices(&self) -> &[[usize; 3]] {
        &self.multi_indices
    }

    pub fn node_barycentric(&self, i: usize) -> [f64; 3] {
        let k = self.degree as f64;
        let [a, b, c] = self.multi_indices[i];
        [a as f64 / k, b as f64 / k, c as f64 / k]
    }

    /// Local nodes lying on edge `e` (opposite local vertex `e`).
    pub fn edge_nodes(&self, e: usize) -> Vec<usize> {
        (0..self.n_basis()).filter(|&i| self.multi_indices[i][e] == 0).collect()
    }

    /// Value, reference gradient and reference hessian of basis `i` at `bary`.
    pub fn eval_basis(&self, i: usize, bary: [f64; 3]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let k = self.degree;
        let mi = self.multi_indices[i];
        let f: [[f64; 3]; 3] = [
            univariate(k, mi[0], bary[0]),
            univariate(k, mi[1], bary[1]),
            univariate(k, mi[2], bary[2]),
        ];
        let value = f[0][0] * f[1][0] * f[2][0];
        let mut dl = [0.0; 3];
        let mut ddl = [[0.0; 3]; 3];
        for a in 0..3 {
            let mut d = 1.0;
            for (c, fc) in f.iter().enumerate() {
                d *= if c == a { fc[1] } else { fc[0] };
            }
            dl[a] = d;
            for b in 0..3 {
                let mut dd = 1.0;
                for (c, fc) in f.iter().enumerate() {
                    let order = usize::from(c == a) + usize::from(c == b);
                    dd *= fc[order];
                }
                ddl[a][b] = dd;
            }
        }
        let mut grad = [0.0; 2];
        let mut hess = [[0.0; 2]; 2];
        for a in 0..3 {
            for r in 0..2 {
                grad[r] += dl[a] * DLAMBDA[a][r];
            }
            for b in 0..3 {
                for r in 0..2 {
                    for s in 0..2 {
                        hess[r][s] += DLAMBDA[a][r] * ddl[a][b] * DLAMBDA[b][s];
                    }
                }
            }
        }
        (value, grad, hess)
    }

    pub fn tabulate(&self, points: &[[f64; 3]]) -> Tabulation {
        let n = self.n_basis();
        let mut tab = Tabulation {
            n_points: points.len(),
            n_basis: n,
            values: Vec::with_capacity(points.len() * n),
            grads: Vec::with_capacity(points.len() * n),
            hessians: Vec::with_capacity(points.len() * n),
        };
        for &p in points {
            for i in 0..n {
                let (v, g, h) = self.eval_basis(i, p);
                tab.values.push(v);
                tab.grads.push(g);
                tab.hessians.push(h);
            }
        }
        tab
    }
}

/// `[f, f', f'']` of `f_m(t) = Π_{j<m} (k t − j)/(j + 1)`.
fn univariate(k: usize, m: usize, t: f64) -> [f64; 3] {
    let mut f = [1.0, 0.0, 0.0];
    for j in 0..m {
        let g = (k as f64 * t - j as f64) / (j + 1) as f64;
        let dg = k as f64 / (j + 1) as f64;
        f = [f[0] * g, f[1] * g + f[0] * dg, f[2] * g + 2.0 * f[1] * dg];
    }
    f
}

/// Affine map from the reference triangle onto a physical triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    origin: Point,
    jac: [[f64; 2]; 2],
    inv_jac_t: [[f64; 2]; 2],
    det: f64,
}

impl ElementGeometry {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let jac = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        // J^{-T}
        let inv_jac_t = [[jac[1][1] / det, -jac[1][0] / det], [-jac[0][1] / det, jac[0][0] / det]];
        Self { origin: p0, jac, inv_jac_t, det }
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det.abs()
    }

    pub fn map(&self, bary: [f64; 3]) -> Point {
        let (xi, eta) = (bary[1], bary[2]);
        [
            self.origin[0] + self.jac[0][0] * xi + self.jac[0][1] * eta,
            self.origin[1] + self.jac[1][0] * xi + self.jac[1][1] * eta,
        ]
    }

    #[inline]
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        let m = &self.inv_jac_t;
        [m[0][0] * g[0] + m[0][1] * g[1], m[1][0] * g[0] + m[1][1] * g[1]]
    }

    /// `J^{-T} H J^{-1}`.
    #[inline]
    pub fn hessian(&self, h: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let m = &self.inv_jac_t;
        let mut tmp = [[0.0; 2]; 2];
        for r in 0..2 {
            for s in 0..2 {
                tmp[r][s] = m[r][0] * h[0][s] + m[r][1] * h[1][s];
            }
        }
        let mut out = [[0.0; 2]; 2];
        for r in 0..2 {
            for s in 0..2 {
                out[r][s] = tmp[r][0] * m[s][0] + tmp[r][1] * m[s][1];
            }
        }
        out
    }
}
