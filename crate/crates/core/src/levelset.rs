//! Level-set geometry: analytic fields, their Lagrange interpolants on the
//! background mesh, and the classification of the mesh into the active set,
//! cut triangles and ghost facets.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use crate::error::{PhiFemError, Result};
use crate::fem::basis::{ElementGeometry, ReferenceElement, Tabulation};
use crate::fem::dofmap::{node_key, node_position};
use crate::mesh::{BackgroundMesh, BoundaryFacet, Point};

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// A closed-form scalar field on the plane, optionally with its gradient.
#[derive(Clone)]
pub struct AnalyticField {
    value: ScalarFn,
    gradient: Option<GradientFn>,
}

impl fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticField").field("has_gradient", &self.gradient.is_some()).finish()
    }
}

impl AnalyticField {
    pub fn new(value: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Self { value: Arc::new(value), gradient: None }
    }

    pub fn with_gradient(
        value: impl Fn(Point) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        Self { value: Arc::new(value), gradient: Some(Arc::new(gradient)) }
    }

    pub fn constant(c: f64) -> Self {
        Self::with_gradient(move |_| c, |_| [0.0, 0.0])
    }

    #[inline]
    pub fn value(&self, p: Point) -> f64 {
        (self.value)(p)
    }

    pub fn gradient(&self, p: Point) -> Option<[f64; 2]> {
        self.gradient.as_ref().map(|g| g(p))
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Evaluates and rejects NaN or infinite results.
    pub fn checked_value(&self, p: Point) -> Result<f64> {
        let v = self.value(p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(PhiFemError::NonFinite { x: p[0], y: p[1], value: v })
        }
    }
}

/// Degree-`l` Lagrange interpolant of a level-set on the whole background mesh.
#[derive(Debug, Clone)]
pub struct LevelSetField {
    mesh: Arc<BackgroundMesh>,
    element: ReferenceElement,
    coefficients: Vec<f64>,
    stride: usize,
}

impl LevelSetField {
    pub fn interpolate(phi: &AnalyticField, mesh: Arc<BackgroundMesh>, degree: usize) -> Result<Self> {
        let element = ReferenceElement::new(degree)?;
        let (nx, ny) = mesh.n_cells();
        let stride = degree * nx + 1;
        let mut coefficients = Vec::with_capacity(stride * (degree * ny + 1));
        for j in 0..=degree * ny {
            for i in 0..stride {
                coefficients.push(phi.checked_value(node_position(&mesh, degree, (i, j)))?);
            }
        }
        Ok(Self { mesh, element, coefficients, stride })
    }

    /// Builds a field from nodal values laid out row-major on the refined grid.
    pub fn from_coefficients(mesh: Arc<BackgroundMesh>, degree: usize, coefficients: Vec<f64>) -> Result<Self> {
        let element = ReferenceElement::new(degree)?;
        let (nx, ny) = mesh.n_cells();
        let stride = degree * nx + 1;
        let expected = stride * (degree * ny + 1);
        if coefficients.len() != expected {
            return Err(PhiFemError::DimensionMismatch { expected, got: coefficients.len() });
        }
        Ok(Self { mesh, element, coefficients, stride })
    }

    pub fn mesh(&self) -> &Arc<BackgroundMesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.element.degree()
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.element
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Nodal value at refined-grid key `(i, j)`.
    pub fn nodal_value(&self, key: (usize, usize)) -> f64 {
        self.coefficients[key.1 * self.stride + key.0]
    }

    /// Coefficients of triangle `t` in reference-element node order.
    pub fn local_coefficients(&self, t: usize) -> Vec<f64> {
        self.element.multi_indices().iter().map(|&mi| self.nodal_value(node_key(&self.mesh, t, mi))).collect()
    }

    /// Value, physical gradient and physical hessian on triangle `t` at barycentric point `bary`.
    pub fn eval(&self, t: usize, bary: [f64; 3]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let geo = ElementGeometry::new(self.mesh.triangle_vertices(t));
        let c = self.local_coefficients(t);
        let mut v = 0.0;
        let mut g = [0.0; 2];
        let mut h = [[0.0; 2]; 2];
        for (i, ci) in c.iter().enumerate() {
            let (bv, bg, bh) = self.element.eval_basis(i, bary);
            v += ci * bv;
            let pg = geo.grad(bg);
            let ph = geo.hessian(bh);
            for r in 0..2 {
                g[r] += ci * pg[r];
                for s in 0..2 {
                    h[r][s] += ci * ph[r][s];
                }
            }
        }
        (v, g, h)
    }
}

/// Classification status of a background triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleStatus {
    Outside,
    Inside,
    Cut,
}

impl TriangleStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TriangleStatus::Outside => "outside",
            TriangleStatus::Inside => "inside",
            TriangleStatus::Cut => "cut",
        }
    }
}

/// The active mesh and its stabilization sets.
#[derive(Debug, Clone)]
pub struct ActiveDomain {
    mesh: Arc<BackgroundMesh>,
    status: Vec<TriangleStatus>,
    active: Vec<usize>,
    cut: Vec<usize>,
    ghost_facets: Vec<usize>,
    boundary_facets: Vec<BoundaryFacet>,
}

/// Barycentric lattice order used for sign tests of a degree-`l` field.
pub fn lattice_order(degree: usize) -> usize {
    (4 * degree).max(8)
}

fn lattice_points(order: usize) -> Vec<[f64; 3]> {
    let m = order as f64;
    let mut pts = Vec::new();
    for a in 0..=order {
        for b in 0..=order - a {
            let c = order - a - b;
            pts.push([a as f64 / m, b as f64 / m, c as f64 / m]);
        }
    }
    pts
}

fn lattice_range(tab: &Tabulation, coeffs: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for q in 0..tab.n_points {
        let v: f64 = coeffs.iter().enumerate().map(|(i, c)| c * tab.value(q, i)).sum();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

impl ActiveDomain {
    /// Classifies every background triangle by sampling `field` on a
    /// barycentric lattice: active when the sampled minimum is `< 0`, cut when
    /// it is active and the sampled maximum is `>= 0`.
    pub fn classify(field: &LevelSetField) -> Result<Self> {
        let mesh = field.mesh().clone();
        let l = field.degree();
        let tab = if l == 1 {
            // affine fields attain their extrema at the vertices
            field.element().tabulate(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        } else {
            field.element().tabulate(&lattice_points(lattice_order(l)))
        };

        let mut status = Vec::with_capacity(mesh.n_triangles());
        let mut active = Vec::new();
        let mut cut = Vec::new();
        for t in 0..mesh.n_triangles() {
            let (lo, hi) = lattice_range(&tab, &field.local_coefficients(t));
            let s = if lo < 0.0 {
                active.push(t);
                if hi >= 0.0 {
                    cut.push(t);
                    TriangleStatus::Cut
                } else {
                    TriangleStatus::Inside
                }
            } else {
                TriangleStatus::Outside
            };
            status.push(s);
        }
        if active.is_empty() {
            return Err(PhiFemError::EmptyActiveSet);
        }

        let ghost_facets = mesh
            .facets()
            .iter()
            .enumerate()
            .filter(|(_, f)| {
                f.is_interior()
                    && f.triangles.iter().all(|&t| status[t] != TriangleStatus::Outside)
                    && f.triangles.iter().any(|&t| status[t] == TriangleStatus::Cut)
            })
            .map(|(i, _)| i)
            .collect();
        let boundary_facets = mesh.submesh_boundary_facets(&active);
        Ok(Self { mesh, status, active, cut, ghost_facets, boundary_facets })
    }

    pub fn mesh(&self) -> &Arc<BackgroundMesh> {
        &self.mesh
    }

    pub fn status(&self, t: usize) -> TriangleStatus {
        self.status[t]
    }

    pub fn is_active(&self, t: usize) -> bool {
        self.status[t] != TriangleStatus::Outside
    }

    pub fn is_cut(&self, t: usize) -> bool {
        self.status[t] == TriangleStatus::Cut
    }

    /// Active triangles, ascending.
    pub fn active_triangles(&self) -> &[usize] {
        &self.active
    }

    /// Active triangles crossed by the discrete boundary, ascending.
    pub fn cut_triangles(&self) -> &[usize] {
        &self.cut
    }

    /// Active triangles that are not cut, ascending.
    pub fn interior_triangles(&self) -> Vec<usize> {
        self.active.iter().copied().filter(|&t| !self.is_cut(t)).collect()
    }

    /// Interior facets of the active mesh owned by at least one cut triangle, ascending.
    pub fn ghost_facets(&self) -> &[usize] {
        &self.ghost_facets
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.boundary_facets
    }

    /// CSV dump with columns `triangle_id,status`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "triangle_id,status")?;
        for (t, s) in self.status.iter().enumerate() {
            writeln!(w, "{t},{}", s.as_str())?;
        }
        Ok(())
    }
}
