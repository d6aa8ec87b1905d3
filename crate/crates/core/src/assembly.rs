//! Assembly of the stabilized product-form system
//!
//! ```text
//! a_h(w, v) = ∫_Ωh ∇(φh w)·∇(φh v) − ∫_∂Ωh ∂n(φh w) φh v
//!           + σ h Σ_{E ∈ ghost facets} ∫_E [∂n(φh w)][∂n(φh v)]
//!           + σ h² Σ_{T cut} ∫_T Δ(φh w) Δ(φh v)
//! l_h(v)    = ∫_Ωh f φh v − σ h² Σ_{T cut} ∫_T f Δ(φh v)
//! ```
//!
//! Every integrand is a piecewise polynomial except those containing `f`, so
//! the matrix is integrated exactly by the rules chosen in [`QuadraturePolicy`].

use crate::error::{PhiFemError, Result};
use crate::fem::basis::{ElementGeometry, ReferenceElement, Tabulation};
use crate::fem::dofmap::DofMap;
use crate::fem::quadrature::{edge_quadrature, triangle_quadrature, EdgeQuadrature, TriangleQuadrature};
use crate::levelset::{ActiveDomain, AnalyticField, LevelSetField};
use crate::linalg::CsrMatrix;
use crate::mesh::{BackgroundMesh, BoundaryFacet};

/// Quadrature exactness per term family for trial degree `k` and level-set degree `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadraturePolicy {
    pub volume: usize,
    pub facet: usize,
    pub load: usize,
}

impl QuadraturePolicy {
    pub fn new(k: usize, l: usize) -> Self {
        Self { volume: 2 * (k + l), facet: 2 * (k + l - 1), load: 2 * (k + l) + 2 }
    }
}

/// Dense row-major local matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl LocalMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    /// `vᵀ M w`.
    pub fn bilinear(&self, v: &[f64], w: &[f64]) -> f64 {
        (0..self.n).map(|i| v[i] * (0..self.n).map(|j| self.get(i, j) * w[j]).sum::<f64>()).sum()
    }

    fn mirror_upper(&mut self) {
        for i in 0..self.n {
            for j in 0..i {
                self.data[i * self.n + j] = self.data[j * self.n + i];
            }
        }
    }
}

/// `φh`, the products `φh ψ_i` and their derivatives at one quadrature point.
#[derive(Debug, Clone)]
struct ProductPoint {
    phi: f64,
    grad_phi: [f64; 2],
    lap_phi: f64,
    value: Vec<f64>,
    grad: Vec<[f64; 2]>,
    lap: Vec<f64>,
}

impl ProductPoint {
    fn new(n: usize) -> Self {
        Self { phi: 0.0, grad_phi: [0.0; 2], lap_phi: 0.0, value: vec![0.0; n], grad: vec![[0.0; 2]; n], lap: vec![0.0; n] }
    }

    fn fill(&mut self, geo: &ElementGeometry, phi_coeffs: &[f64], tab_l: &Tabulation, tab_k: &Tabulation, q: usize) {
        let mut v = 0.0;
        let mut g = [0.0; 2];
        let mut hsum = [[0.0; 2]; 2];
        for (i, c) in phi_coeffs.iter().enumerate() {
            v += c * tab_l.value(q, i);
            let gi = tab_l.grad(q, i);
            g[0] += c * gi[0];
            g[1] += c * gi[1];
            let hi = tab_l.hessian(q, i);
            for r in 0..2 {
                for s in 0..2 {
                    hsum[r][s] += c * hi[r][s];
                }
            }
        }
        let gp = geo.grad(g);
        let hp = geo.hessian(hsum);
        self.phi = v;
        self.grad_phi = gp;
        self.lap_phi = hp[0][0] + hp[1][1];
        for j in 0..tab_k.n_basis {
            let psi = tab_k.value(q, j);
            let dpsi = geo.grad(tab_k.grad(q, j));
            let hpsi = geo.hessian(tab_k.hessian(q, j));
            self.value[j] = v * psi;
            self.grad[j] = [psi * gp[0] + v * dpsi[0], psi * gp[1] + v * dpsi[1]];
            self.lap[j] = psi * self.lap_phi + 2.0 * (gp[0] * dpsi[0] + gp[1] * dpsi[1]) + v * (hpsi[0][0] + hpsi[1][1]);
        }
    }

    fn normal_derivative(&self, j: usize, n: [f64; 2]) -> f64 {
        self.grad[j][0] * n[0] + self.grad[j][1] * n[1]
    }
}

struct EdgeTables {
    /// `[local edge][direction]`; direction 0 runs from local vertex
    /// `(e+1)%3` to `(e+2)%3`, direction 1 the other way.
    k: Vec<[Tabulation; 2]>,
    l: Vec<[Tabulation; 2]>,
}

fn edge_points(rule: &EdgeQuadrature, e: usize, reverse: bool) -> Vec<[f64; 3]> {
    let (a, b) = if reverse { ((e + 2) % 3, (e + 1) % 3) } else { ((e + 1) % 3, (e + 2) % 3) };
    rule.points
        .iter()
        .map(|p| {
            let mut bary = [0.0; 3];
            bary[a] = p[0];
            bary[b] = p[1];
            bary
        })
        .collect()
}

/// Element and facet kernels sharing precomputed tabulations.
pub struct KernelContext<'a> {
    mesh: &'a BackgroundMesh,
    phi: &'a LevelSetField,
    element: ReferenceElement,
    sigma: f64,
    h: f64,
    policy: QuadraturePolicy,
    volume_rule: TriangleQuadrature,
    volume_k: Tabulation,
    volume_l: Tabulation,
    load_rule: TriangleQuadrature,
    load_k: Tabulation,
    load_l: Tabulation,
    edge_rule: EdgeQuadrature,
    edges: EdgeTables,
}

impl<'a> KernelContext<'a> {
    pub fn new(phi: &'a LevelSetField, k: usize, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(PhiFemError::InvalidArgument(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        let element = ReferenceElement::new(k)?;
        let mesh = phi.mesh().as_ref();
        let policy = QuadraturePolicy::new(k, phi.degree());
        let volume_rule = triangle_quadrature(policy.volume)?;
        let load_rule = triangle_quadrature(policy.load)?;
        let edge_rule = edge_quadrature(policy.facet)?;
        let mut edges = EdgeTables { k: Vec::new(), l: Vec::new() };
        for e in 0..3 {
            let fwd = edge_points(&edge_rule, e, false);
            let rev = edge_points(&edge_rule, e, true);
            edges.k.push([element.tabulate(&fwd), element.tabulate(&rev)]);
            edges.l.push([phi.element().tabulate(&fwd), phi.element().tabulate(&rev)]);
        }
        Ok(Self {
            mesh,
            phi,
            volume_k: element.tabulate(&volume_rule.points),
            volume_l: phi.element().tabulate(&volume_rule.points),
            load_k: element.tabulate(&load_rule.points),
            load_l: phi.element().tabulate(&load_rule.points),
            element,
            sigma,
            h: mesh.h(),
            policy,
            volume_rule,
            load_rule,
            edge_rule,
            edges,
        })
    }

    pub fn policy(&self) -> QuadraturePolicy {
        self.policy
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_local(&self) -> usize {
        self.element.n_basis()
    }

    fn geometry(&self, t: usize) -> ElementGeometry {
        ElementGeometry::new(self.mesh.triangle_vertices(t))
    }

    /// `M_ij = ∫_T ∇(φh ψ_j)·∇(φh ψ_i)`.
    pub fn element_product(&self, t: usize) -> LocalMatrix {
        let n = self.n_local();
        let geo = self.geometry(t);
        let c = self.phi.local_coefficients(t);
        let mut pt = ProductPoint::new(n);
        let mut m = LocalMatrix::zeros(n);
        for (q, w) in self.volume_rule.weights.iter().enumerate() {
            pt.fill(&geo, &c, &self.volume_l, &self.volume_k, q);
            let wq = w * geo.det().abs();
            for i in 0..n {
                for j in 0..n {
                    m.add(i, j, wq * (pt.grad[j][0] * pt.grad[i][0] + pt.grad[j][1] * pt.grad[i][1]));
                }
            }
        }
        m
    }

    /// `B_ij = ∫_E ∂n(φh ψ_j) φh ψ_i`, traces from the facet's active triangle.
    /// The bilinear form takes this term with a minus sign.
    pub fn boundary_term(&self, bf: &BoundaryFacet) -> LocalMatrix {
        let n = self.n_local();
        let t = bf.triangle;
        let geo = self.geometry(t);
        let c = self.phi.local_coefficients(t);
        let len = self.mesh.facet_length(bf.facet);
        let (tab_k, tab_l) = (&self.edges.k[bf.local_edge][0], &self.edges.l[bf.local_edge][0]);
        let mut pt = ProductPoint::new(n);
        let mut m = LocalMatrix::zeros(n);
        for (q, w) in self.edge_rule.weights.iter().enumerate() {
            pt.fill(&geo, &c, tab_l, tab_k, q);
            let wq = w * len;
            for i in 0..n {
                for j in 0..n {
                    m.add(i, j, wq * pt.normal_derivative(j, bf.normal) * pt.value[i]);
                }
            }
        }
        m
    }

    /// Ghost jump penalty on an interior facet. Returns the union of the
    /// global dofs of both incident triangles and the symmetric local matrix
    /// `σ h ∫_E [∂n(φh ψ_j)][∂n(φh ψ_i)]` on that union.
    ///
    /// The jump is `g|T⁺ − g|T⁻` with `T⁺` the lower-index triangle and the
    /// normal pointing out of `T⁺`.
    pub fn ghost_jump(&self, facet: usize, dofs: &DofMap) -> Result<(Vec<usize>, LocalMatrix)> {
        let fct = &self.mesh.facets()[facet];
        if !fct.is_interior() {
            return Err(PhiFemError::InvalidArgument(format!("facet {facet} is not interior")));
        }
        let (tp, tm) = (fct.triangles[0], fct.triangles[1]);
        let dp = dofs.dofs(tp).ok_or(PhiFemError::InactiveTriangle(tp))?;
        let dm = dofs.dofs(tm).ok_or(PhiFemError::InactiveTriangle(tm))?;
        let mut union: Vec<usize> = dp.to_vec();
        let minus_pos: Vec<usize> = dm
            .iter()
            .map(|g| {
                union.iter().position(|u| u == g).unwrap_or_else(|| {
                    union.push(*g);
                    union.len() - 1
                })
            })
            .collect();

        let e_p = self.mesh.local_edge(tp, facet).expect("adjacency");
        let e_m = self.mesh.local_edge(tm, facet).expect("adjacency");
        let normal = self.mesh.outward_normal(tp, e_p);
        let va = fct.vertices[0];
        let dir = |t: usize, e: usize| usize::from(self.mesh.triangles()[t][(e + 1) % 3] != va);
        let (dir_p, dir_m) = (dir(tp, e_p), dir(tm, e_m));

        let n = self.n_local();
        let (geo_p, geo_m) = (self.geometry(tp), self.geometry(tm));
        let (c_p, c_m) = (self.phi.local_coefficients(tp), self.phi.local_coefficients(tm));
        let (mut pt_p, mut pt_m) = (ProductPoint::new(n), ProductPoint::new(n));
        let len = self.mesh.facet_length(facet);
        let scale = self.sigma * self.h;
        let nu = union.len();
        let mut jump = vec![0.0; nu];
        let mut m = LocalMatrix::zeros(nu);
        for (q, w) in self.edge_rule.weights.iter().enumerate() {
            pt_p.fill(&geo_p, &c_p, &self.edges.l[e_p][dir_p], &self.edges.k[e_p][dir_p], q);
            pt_m.fill(&geo_m, &c_m, &self.edges.l[e_m][dir_m], &self.edges.k[e_m][dir_m], q);
            jump.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n {
                jump[i] += pt_p.normal_derivative(i, normal);
                jump[minus_pos[i]] -= pt_m.normal_derivative(i, normal);
            }
            let wq = w * len;
            for i in 0..nu {
                let wi = wq * jump[i];
                for j in i..nu {
                    m.add(i, j, wi * jump[j]);
                }
            }
        }
        m.mirror_upper();
        m.data.iter_mut().for_each(|v| *v *= scale);
        Ok((union, m))
    }

    /// `σ h² ∫_T Δ(φh ψ_j) Δ(φh ψ_i)`.
    pub fn ghost_laplacian(&self, t: usize) -> LocalMatrix {
        let n = self.n_local();
        let geo = self.geometry(t);
        let c = self.phi.local_coefficients(t);
        let mut pt = ProductPoint::new(n);
        let mut m = LocalMatrix::zeros(n);
        for (q, w) in self.volume_rule.weights.iter().enumerate() {
            pt.fill(&geo, &c, &self.volume_l, &self.volume_k, q);
            let wq = w * geo.det().abs();
            for i in 0..n {
                let wi = wq * pt.lap[i];
                for j in i..n {
                    m.add(i, j, wi * pt.lap[j]);
                }
            }
        }
        m.mirror_upper();
        let scale = self.sigma * self.h * self.h;
        m.data.iter_mut().for_each(|v| *v *= scale);
        m
    }

    /// Load contributions `∫_T f φh ψ_i` (when `core`) and
    /// `−σ h² ∫_T f Δ(φh ψ_i)` (when `ghost`).
    pub fn load(&self, t: usize, f: &AnalyticField, core: bool, ghost: bool) -> Result<Vec<f64>> {
        let n = self.n_local();
        let geo = self.geometry(t);
        let c = self.phi.local_coefficients(t);
        let mut pt = ProductPoint::new(n);
        let mut r_core = vec![0.0; n];
        let mut r_ghost = vec![0.0; n];
        for (q, w) in self.load_rule.weights.iter().enumerate() {
            pt.fill(&geo, &c, &self.load_l, &self.load_k, q);
            let fq = f.checked_value(geo.map(self.load_rule.points[q]))?;
            let wq = w * geo.det().abs() * fq;
            for i in 0..n {
                r_core[i] += wq * pt.value[i];
                r_ghost[i] += wq * pt.lap[i];
            }
        }
        let scale = self.sigma * self.h * self.h;
        Ok((0..n)
            .map(|i| {
                let a = if core { r_core[i] } else { 0.0 };
                let b = if ghost { scale * r_ghost[i] } else { 0.0 };
                a - b
            })
            .collect())
    }
}

/// Which parts of the stabilized forms to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terms {
    /// Volume, boundary and plain load terms.
    pub core: bool,
    /// Ghost penalty and its load compensation.
    pub ghost: bool,
}

impl Terms {
    pub const ALL: Terms = Terms { core: true, ghost: true };
    pub const CORE: Terms = Terms { core: true, ghost: false };
    pub const GHOST: Terms = Terms { core: false, ghost: true };
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssemblyStats {
    pub volume_kernels: usize,
    pub boundary_kernels: usize,
    pub ghost_facet_kernels: usize,
    pub ghost_cell_kernels: usize,
}

#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub sigma: f64,
    pub h: f64,
    pub dofs: DofMap,
    pub stats: AssemblyStats,
}

impl SparseSystem {
    pub fn n_dofs(&self) -> usize {
        self.rhs.len()
    }
}

pub fn assemble_system(
    domain: &ActiveDomain,
    phi: &LevelSetField,
    f: &AnalyticField,
    k: usize,
    sigma: f64,
) -> Result<SparseSystem> {
    assemble_terms(domain, phi, f, k, sigma, Terms::ALL)
}

/// Assembles the selected terms. With `sigma == 0` no ghost kernel is evaluated.
pub fn assemble_terms(
    domain: &ActiveDomain,
    phi: &LevelSetField,
    f: &AnalyticField,
    k: usize,
    sigma: f64,
    terms: Terms,
) -> Result<SparseSystem> {
    let mesh = domain.mesh();
    if mesh.n_triangles() != phi.mesh().n_triangles() || mesh.n_cells() != phi.mesh().n_cells() {
        return Err(PhiFemError::DimensionMismatch { expected: mesh.n_triangles(), got: phi.mesh().n_triangles() });
    }
    let ctx = KernelContext::new(phi, k, sigma)?;
    let dofs = DofMap::new(mesh, domain.active_triangles(), k)?;
    let n = dofs.n_dofs();
    let n_local = ctx.n_local();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut rhs = vec![0.0; n];
    let mut stats = AssemblyStats::default();
    let ghost = terms.ghost && sigma > 0.0;

    let scatter = |triplets: &mut Vec<(usize, usize, f64)>, idx: &[usize], m: &LocalMatrix, sign: f64| {
        for (i, &gi) in idx.iter().enumerate() {
            for (j, &gj) in idx.iter().enumerate() {
                triplets.push((gi, gj, sign * m.get(i, j)));
            }
        }
    };

    if terms.core {
        triplets.reserve(domain.active_triangles().len() * n_local * n_local);
        for &t in domain.active_triangles() {
            let idx = dofs.dofs(t).expect("active triangle has dofs");
            scatter(&mut triplets, idx, &ctx.element_product(t), 1.0);
            stats.volume_kernels += 1;
        }
        for bf in domain.boundary_facets() {
            let idx = dofs.dofs(bf.triangle).expect("boundary triangle is active");
            scatter(&mut triplets, idx, &ctx.boundary_term(bf), -1.0);
            stats.boundary_kernels += 1;
        }
    }
    if ghost {
        for &e in domain.ghost_facets() {
            let (idx, m) = ctx.ghost_jump(e, &dofs)?;
            scatter(&mut triplets, &idx, &m, 1.0);
            stats.ghost_facet_kernels += 1;
        }
        for &t in domain.cut_triangles() {
            let idx = dofs.dofs(t).expect("cut triangle is active");
            scatter(&mut triplets, idx, &ctx.ghost_laplacian(t), 1.0);
            stats.ghost_cell_kernels += 1;
        }
    }
    for &t in domain.active_triangles() {
        let cut_ghost = ghost && domain.is_cut(t);
        if !terms.core && !cut_ghost {
            continue;
        }
        let r = ctx.load(t, f, terms.core, cut_ghost)?;
        for (&g, v) in dofs.dofs(t).expect("active").iter().zip(r) {
            rhs[g] += v;
        }
    }

    let matrix = CsrMatrix::from_triplets(n, n, &triplets)?;
    Ok(SparseSystem { matrix, rhs, sigma, h: ctx.h(), dofs, stats })
}
