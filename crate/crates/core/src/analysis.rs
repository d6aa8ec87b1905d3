//! Reconstruction of `u_h = φh w_h`, relative error norms over the active
//! domain and estimated orders of convergence.

use crate::error::{PhiFemError, Result};
use crate::fem::basis::{ElementGeometry, ReferenceElement};
use crate::fem::dofmap::DofMap;
use crate::fem::quadrature::triangle_quadrature;
use crate::levelset::{ActiveDomain, AnalyticField, LevelSetField};
use crate::mesh::Point;

/// Relative tolerance when checking that consecutive mesh sizes halve.
const HALVING_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ProductSolution {
    phi: LevelSetField,
    w: Vec<f64>,
    dofs: DofMap,
    element: ReferenceElement,
}

impl ProductSolution {
    pub fn new(phi: LevelSetField, dofs: DofMap, w: Vec<f64>) -> Result<Self> {
        if w.len() != dofs.n_dofs() {
            return Err(PhiFemError::DimensionMismatch { expected: dofs.n_dofs(), got: w.len() });
        }
        let element = ReferenceElement::new(dofs.degree())?;
        Ok(Self { phi, w, dofs, element })
    }

    pub fn phi(&self) -> &LevelSetField {
        &self.phi
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    /// `(u_h, ∇u_h)` at barycentric coordinates `bary` of triangle `t`.
    pub fn eval(&self, t: usize, bary: [f64; 3]) -> Result<(f64, [f64; 2])> {
        let idx = self.dofs.dofs(t).ok_or(PhiFemError::InactiveTriangle(t))?;
        let geo = ElementGeometry::new(self.phi.mesh().triangle_vertices(t));
        let (ph, gph, _) = self.phi.eval(t, bary);
        let mut wv = 0.0;
        let mut wg = [0.0; 2];
        for (i, &g) in idx.iter().enumerate() {
            let (b, gr, _) = self.element.eval_basis(i, bary);
            let gr = geo.grad(gr);
            wv += self.w[g] * b;
            wg[0] += self.w[g] * gr[0];
            wg[1] += self.w[g] * gr[1];
        }
        Ok((ph * wv, [wv * gph[0] + ph * wg[0], wv * gph[1] + ph * wg[1]]))
    }

    /// `(u_h, ∇u_h)` at a physical point, or `None` outside the active mesh.
    pub fn eval_at_point(&self, p: Point) -> Option<(f64, [f64; 2])> {
        let (t, bary) = self.phi.mesh().locate(p);
        self.eval(t, bary).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub h: f64,
    pub n_dofs: usize,
    pub rel_l2: f64,
    pub rel_h1_semi: f64,
    pub err_l2: f64,
    pub err_h1_semi: f64,
    /// `‖u‖_0` and `|u|_1` over the integration domain.
    pub norm_l2: f64,
    pub norm_h1_semi: f64,
    pub exactness: usize,
}

/// Errors against an analytic solution (with gradient) over all active triangles.
pub fn compute_errors(sol: &ProductSolution, exact: &AnalyticField, domain: &ActiveDomain) -> Result<ErrorReport> {
    compute_errors_on(sol, exact, domain.active_triangles())
}

pub fn compute_errors_on(sol: &ProductSolution, exact: &AnalyticField, triangles: &[usize]) -> Result<ErrorReport> {
    if !exact.has_gradient() {
        return Err(PhiFemError::InvalidArgument("exact solution needs a gradient".into()));
    }
    compute_errors_against(sol, triangles, |p| {
        let v = exact.checked_value(p)?;
        let g = exact.gradient(p).expect("checked above");
        if !(g[0].is_finite() && g[1].is_finite()) {
            return Err(PhiFemError::NonFinite { x: p[0], y: p[1], value: g[0] + g[1] });
        }
        Ok((v, g))
    })
}

/// Errors against an arbitrary reference `p ↦ (u, ∇u)` over the given triangles.
pub fn compute_errors_against(
    sol: &ProductSolution,
    triangles: &[usize],
    reference: impl Fn(Point) -> Result<(f64, [f64; 2])>,
) -> Result<ErrorReport> {
    let exactness = 2 * (sol.dofs.degree() + sol.phi.degree()) + 2;
    let rule = triangle_quadrature(exactness)?;
    let mesh = sol.phi.mesh();
    let (mut e0, mut e1, mut n0, mut n1) = (0.0, 0.0, 0.0, 0.0);
    for &t in triangles {
        let geo = ElementGeometry::new(mesh.triangle_vertices(t));
        let jac = geo.det().abs();
        for (bary, w) in rule.points.iter().zip(&rule.weights) {
            let (uh, guh) = sol.eval(t, *bary)?;
            let (u, gu) = reference(geo.map(*bary))?;
            let wq = w * jac;
            e0 += wq * (u - uh).powi(2);
            e1 += wq * ((gu[0] - guh[0]).powi(2) + (gu[1] - guh[1]).powi(2));
            n0 += wq * u * u;
            n1 += wq * (gu[0] * gu[0] + gu[1] * gu[1]);
        }
    }
    if n0 == 0.0 || n1 == 0.0 {
        return Err(PhiFemError::ZeroNormalizer);
    }
    let (e0, e1, n0, n1) = (e0.sqrt(), e1.sqrt(), n0.sqrt(), n1.sqrt());
    Ok(ErrorReport {
        h: mesh.h(),
        n_dofs: sol.dofs.n_dofs(),
        rel_l2: e0 / n0,
        rel_h1_semi: e1 / n1,
        err_l2: e0,
        err_h1_semi: e1,
        norm_l2: n0,
        norm_h1_semi: n1,
        exactness,
    })
}

/// `log₂(e_coarse / e_fine)`.
pub fn eoc(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).log2()
}

/// `(eoc_l2, eoc_h1)` for each consecutive pair of a halving sequence.
pub fn estimated_orders(reports: &[ErrorReport]) -> Result<Vec<(f64, f64)>> {
    reports
        .windows(2)
        .enumerate()
        .map(|(i, p)| {
            if ((p[0].h / p[1].h) - 2.0).abs() > 2.0 * HALVING_TOL {
                return Err(PhiFemError::NonHalvingSequence(i + 1));
            }
            Ok((eoc(p[0].rel_l2, p[1].rel_l2), eoc(p[0].rel_h1_semi, p[1].rel_h1_semi)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BackgroundMesh, BoundingBox};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn mesh(n: usize) -> Arc<BackgroundMesh> {
        Arc::new(BackgroundMesh::new(BoundingBox::unit_square(), n, n).unwrap())
    }

    fn product(
        m: &Arc<BackgroundMesh>,
        l: usize,
        k: usize,
        phi: fn(Point) -> f64,
        w: fn(Point) -> f64,
    ) -> (ProductSolution, ActiveDomain) {
        let field = LevelSetField::interpolate(&AnalyticField::new(phi), m.clone(), l).unwrap();
        let domain = ActiveDomain::classify(&field).unwrap();
        let dofs = DofMap::new(m, domain.active_triangles(), k).unwrap();
        let coeffs = dofs.interpolate(w);
        (ProductSolution::new(field, dofs, coeffs).unwrap(), domain)
    }

    fn report(h: f64, l2: f64, h1: f64) -> ErrorReport {
        ErrorReport {
            h,
            n_dofs: 0,
            rel_l2: l2,
            rel_h1_semi: h1,
            err_l2: l2,
            err_h1_semi: h1,
            norm_l2: 1.0,
            norm_h1_semi: 1.0,
            exactness: 0,
        }
    }

    #[test]
    fn eval_unit_w_returns_levelset() {
        let m = mesh(3);
        let (sol, d) = product(&m, 2, 1, |p| p[0] * p[0] - p[1] + 0.5, |_| 1.0);
        let t = d.active_triangles()[0];
        let bary = [0.2, 0.3, 0.5];
        let (v, g) = sol.eval(t, bary).unwrap();
        let (pv, pg, _) = sol.phi().eval(t, bary);
        assert!((v - pv).abs() < 1e-15);
        assert!((g[0] - pg[0]).abs() < 1e-14 && (g[1] - pg[1]).abs() < 1e-14);
    }

    #[test]
    fn eval_product_rule_by_hand() {
        let m = mesh(2);
        let field = LevelSetField::interpolate(&AnalyticField::new(|p| p[0]), m.clone(), 1).unwrap();
        let all: Vec<usize> = (0..m.n_triangles()).collect();
        let dofs = DofMap::new(&m, &all, 1).unwrap();
        let w = dofs.interpolate(|p| p[0]);
        let sol = ProductSolution::new(field, dofs, w).unwrap();
        for t in all {
            let bary = [0.1, 0.6, 0.3];
            let p = ElementGeometry::new(m.triangle_vertices(t)).map(bary);
            let (v, g) = sol.eval(t, bary).unwrap();
            assert!((v - p[0] * p[0]).abs() < 1e-15);
            assert!((g[0] - 2.0 * p[0]).abs() < 1e-14 && g[1].abs() < 1e-14);
        }
    }

    #[test]
    fn eval_rejects_inactive_triangle() {
        let m = mesh(4);
        let (sol, d) = product(&m, 1, 1, |p| p[0] - 0.3, |_| 1.0);
        let outside = (0..m.n_triangles()).find(|&t| !d.is_active(t)).unwrap();
        assert_eq!(sol.eval(outside, [1.0 / 3.0; 3]).unwrap_err(), PhiFemError::InactiveTriangle(outside));
        assert!(sol.eval_at_point(m.barycenter(outside)).is_none());
    }

    #[test]
    fn zero_levelset_gives_zero() {
        let m = mesh(2);
        let field = LevelSetField::interpolate(&AnalyticField::constant(0.0), m.clone(), 2).unwrap();
        let dofs = DofMap::new(&m, &[0, 1], 2).unwrap();
        let w = dofs.interpolate(|p| 3.0 + p[0]);
        let sol = ProductSolution::new(field, dofs, w).unwrap();
        assert_eq!(sol.eval(1, [0.2, 0.2, 0.6]).unwrap(), (0.0, [0.0, 0.0]));
    }

    fn phi_exact(p: Point) -> f64 {
        0.2 - (p[0] - 0.5) * (p[0] - 0.45) - 0.8 * (p[1] - 0.5).powi(2)
    }

    fn w_exact(p: Point) -> f64 {
        1.0 + p[0] - 2.0 * p[1] * p[1] + 0.5 * p[0] * p[1]
    }

    #[test]
    fn planted_product_has_zero_error() {
        // φ quadratic and w quadratic are reproduced exactly for l, k ≥ 2; for
        // l or k = 1 use their affine parts
        fn phi1(p: Point) -> f64 {
            0.3 - p[0] + 0.2 * p[1]
        }
        fn w1(p: Point) -> f64 {
            1.0 + p[0] - 0.7 * p[1]
        }
        let m = mesh(5);
        for l in 1..=3 {
            for k in 1..=3 {
                let phi: fn(Point) -> f64 = if l == 1 { phi1 } else { phi_exact };
                let w: fn(Point) -> f64 = if k == 1 { w1 } else { w_exact };
                let (sol, d) = product(&m, l, k, phi, w);
                let h = 1e-6;
                let exact = AnalyticField::with_gradient(
                    move |p| phi(p) * w(p),
                    move |p| {
                        // both factors are at most quadratic, so central differences are exact up to rounding
                        let f = |q: Point| phi(q) * w(q);
                        [
                            (f([p[0] + h, p[1]]) - f([p[0] - h, p[1]])) / (2.0 * h),
                            (f([p[0], p[1] + h]) - f([p[0], p[1] - h])) / (2.0 * h),
                        ]
                    },
                );
                let r = compute_errors(&sol, &exact, &d).unwrap();
                assert!(r.rel_l2 < 1e-13, "l={l} k={k} {}", r.rel_l2);
                // the finite-difference gradient carries ~1e-10 rounding
                assert!(r.rel_h1_semi < 1e-8, "l={l} k={k} {}", r.rel_h1_semi);
                assert_eq!(r.exactness, 2 * (k + l) + 2);
            }
        }
    }

    #[test]
    fn planted_product_with_exact_gradient() {
        fn grad(p: Point) -> [f64; 2] {
            let (phi, w) = (phi_exact(p), w_exact(p));
            let gphi = [-(2.0 * p[0] - 0.95), -1.6 * (p[1] - 0.5)];
            let gw = [1.0 + 0.5 * p[1], -4.0 * p[1] + 0.5 * p[0]];
            [gphi[0] * w + phi * gw[0], gphi[1] * w + phi * gw[1]]
        }
        let m = mesh(4);
        for l in 2..=3 {
            for k in 2..=3 {
                let (sol, d) = product(&m, l, k, phi_exact, w_exact);
                let exact = AnalyticField::with_gradient(|p| phi_exact(p) * w_exact(p), grad);
                let r = compute_errors(&sol, &exact, &d).unwrap();
                assert!(r.rel_l2 < 1e-13 && r.rel_h1_semi < 1e-13, "{r:?}");
            }
        }
    }

    #[test]
    fn error_norms_of_a_known_difference() {
        // u_h = x·1 on the full unit square, exact u = x + 1:
        // ‖1‖ = 1, ‖x + 1‖² = 7/3, |u - u_h|_1 = 0
        let m = mesh(3);
        let (sol, d) = product(&m, 1, 1, |p| p[0] - 2.0, |_| 1.0);
        let exact = AnalyticField::with_gradient(|p| p[0] - 1.0, |_| [1.0, 0.0]);
        let r = compute_errors(&sol, &exact, &d).unwrap();
        assert!((r.err_l2 - 1.0).abs() < 1e-14);
        assert!((r.norm_l2 - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!(r.err_h1_semi.abs() < 1e-14);
        assert!((r.h - m.h()).abs() < 1e-16);
    }

    #[test]
    fn zero_normalizer_rejected() {
        let m = mesh(2);
        let (sol, d) = product(&m, 1, 1, |p| p[0] - 2.0, |_| 1.0);
        let zero = AnalyticField::with_gradient(|_| 0.0, |_| [0.0, 0.0]);
        assert_eq!(compute_errors(&sol, &zero, &d).unwrap_err(), PhiFemError::ZeroNormalizer);
        assert!(compute_errors(&sol, &AnalyticField::constant(1.0), &d).is_err());
    }

    #[test]
    fn restriction_is_monotone() {
        let m = mesh(6);
        let (sol, d) = product(&m, 2, 2, phi_exact, |p| 1.0 + p[0]);
        let exact = AnalyticField::with_gradient(|p| (p[0] * 3.0).sin(), |p| [3.0 * (p[0] * 3.0).cos(), 0.0]);
        let full = compute_errors(&sol, &exact, &d).unwrap();
        let active = d.active_triangles();
        for len in [1, active.len() / 3, active.len() / 2] {
            let part = compute_errors_on(&sol, &exact, &active[..len]).unwrap();
            assert!(part.err_l2 <= full.err_l2 && part.err_h1_semi <= full.err_h1_semi);
        }
    }

    #[test]
    fn eoc_examples() {
        assert_eq!(eoc(0.4, 0.1), 2.0);
        assert!((eoc(0.0887729, 0.0320170) - 1.47).abs() < 0.005);
        assert!((eoc(0.0067306, 0.0032979) - 1.03).abs() < 0.005);
        assert!((eoc(3.5724e-8, 2.1984e-9) - 4.02).abs() < 0.005);
        let r = estimated_orders(&[report(0.2, 0.4, 0.4), report(0.1, 0.1, 0.2)]).unwrap();
        assert_eq!(r, vec![(2.0, 1.0)]);
        assert!(estimated_orders(&[report(0.2, 0.4, 0.4)]).unwrap().is_empty());
    }

    #[test]
    fn eoc_rejects_non_halving() {
        let seq = [report(0.4, 1.0, 1.0), report(0.2, 0.5, 0.5), report(0.15, 0.2, 0.2)];
        assert_eq!(estimated_orders(&seq).unwrap_err(), PhiFemError::NonHalvingSequence(2));
    }

    proptest! {
        #[test]
        fn eoc_scale_invariant(e0 in 1e-8f64..1.0, ratio in 1.01f64..64.0, c in 1e-3f64..1e3) {
            let a = eoc(e0, e0 / ratio);
            let b = eoc(c * e0, c * e0 / ratio);
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}
