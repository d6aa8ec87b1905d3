//! Uniform Cartesian simplicial background mesh on a rectangle.
//!
//! Every cell of an `nx × ny` grid is split into two triangles along the
//! lower-left to upper-right diagonal. Cells are numbered row-major; cell `c`
//! owns triangles `2c` (below the diagonal) and `2c + 1` (above it).

use std::collections::HashMap;
use std::io::{self, Write};

use crate::error::{PhiFemError, Result};

pub type Point = [f64; 2];

/// Axis-aligned rectangle `(x_min, y_min, x_max, y_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self { x_min, y_min, x_max, y_max }
    }

    pub fn unit_square() -> Self {
        Self::new(0.0, 0.0, 1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

/// An edge of the mesh together with the triangles sharing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    /// Vertex indices, smaller index first.
    pub vertices: [usize; 2],
    /// Incident triangles in ascending order (one for boundary facets, two otherwise).
    pub triangles: Vec<usize>,
}

impl Facet {
    pub fn is_interior(&self) -> bool {
        self.triangles.len() == 2
    }
}

/// A facet on the boundary of a triangle sub-collection, seen from its unique
/// incident triangle in that collection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFacet {
    pub facet: usize,
    pub triangle: usize,
    /// Local edge index inside `triangle` (edge `e` is opposite local vertex `e`).
    pub local_edge: usize,
    /// Outward unit normal with respect to `triangle`.
    pub normal: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct BackgroundMesh {
    bbox: BoundingBox,
    nx: usize,
    ny: usize,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    facets: Vec<Facet>,
    triangle_facets: Vec<[usize; 3]>,
    h: f64,
}

impl BackgroundMesh {
    pub fn new(bbox: BoundingBox, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(PhiFemError::InvalidMesh(format!("cell counts must be positive, got ({nx}, {ny})")));
        }
        let finite = [bbox.x_min, bbox.y_min, bbox.x_max, bbox.y_max].iter().all(|v| v.is_finite());
        if !finite || !(bbox.x_max > bbox.x_min) || !(bbox.y_max > bbox.y_min) {
            return Err(PhiFemError::InvalidMesh(format!("degenerate box {bbox:?}")));
        }

        let dx = bbox.width() / nx as f64;
        let dy = bbox.height() / ny as f64;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([bbox.x_min + i as f64 * dx, bbox.y_min + j as f64 * dy]);
            }
        }

        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }

        let mut facets: Vec<Facet> = Vec::with_capacity(3 * nx * ny + nx + ny);
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * nx * ny + nx + ny);
        let mut triangle_facets = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0usize; 3];
            for (e, slot) in local.iter_mut().enumerate() {
                let a = tri[(e + 1) % 3];
                let b = tri[(e + 2) % 3];
                let key = (a.min(b), a.max(b));
                let f = *lookup.entry(key).or_insert_with(|| {
                    facets.push(Facet { vertices: [key.0, key.1], triangles: Vec::with_capacity(2) });
                    facets.len() - 1
                });
                facets[f].triangles.push(t);
                *slot = f;
            }
            triangle_facets.push(local);
        }

        let h = (dx * dx + dy * dy).sqrt().max(dx).max(dy);
        Ok(Self { bbox, nx, ny, vertices, triangles, facets, triangle_facets, h })
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    pub fn n_cells(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (self.bbox.width() / self.nx as f64, self.bbox.height() / self.ny as f64)
    }

    /// Longest triangle edge, i.e. the cell diagonal.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Facets of triangle `t`; entry `e` is the edge opposite local vertex `e`.
    pub fn triangle_facets(&self, t: usize) -> [usize; 3] {
        self.triangle_facets[t]
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Grid coordinates `(i, j)` of a vertex.
    pub fn vertex_grid_index(&self, v: usize) -> (usize, usize) {
        (v % (self.nx + 1), v / (self.nx + 1))
    }

    pub fn triangle_vertices(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_vertices(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn barycenter(&self, t: usize) -> Point {
        let [p0, p1, p2] = self.triangle_vertices(t);
        [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0]
    }

    /// Local edge index of facet `f` inside triangle `t`, if `t` owns it.
    pub fn local_edge(&self, t: usize, f: usize) -> Option<usize> {
        self.triangle_facets[t].iter().position(|&g| g == f)
    }

    /// Outward unit normal of local edge `e` of triangle `t`.
    pub fn outward_normal(&self, t: usize, e: usize) -> [f64; 2] {
        let p = self.triangle_vertices(t);
        let a = p[(e + 1) % 3];
        let b = p[(e + 2) % 3];
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = d[0].hypot(d[1]);
        let mut n = [d[1] / len, -d[0] / len];
        let opp = p[e];
        if (opp[0] - a[0]) * n[0] + (opp[1] - a[1]) * n[1] > 0.0 {
            n = [-n[0], -n[1]];
        }
        n
    }

    pub fn facet_length(&self, f: usize) -> f64 {
        let [a, b] = self.facets[f].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        (pb[0] - pa[0]).hypot(pb[1] - pa[1])
    }

    /// Every facet with exactly one incident triangle in `active`, sorted by
    /// facet index, with the outward normal relative to the active region.
    pub fn submesh_boundary_facets(&self, active: &[usize]) -> Vec<BoundaryFacet> {
        let mut is_active = vec![false; self.triangles.len()];
        for &t in active {
            is_active[t] = true;
        }
        let mut out = Vec::new();
        for (f, facet) in self.facets.iter().enumerate() {
            let mut inside = facet.triangles.iter().copied().filter(|&t| is_active[t]);
            if let (Some(t), None) = (inside.next(), inside.next()) {
                let e = self.local_edge(t, f).expect("facet/triangle adjacency is consistent");
                out.push(BoundaryFacet { facet: f, triangle: t, local_edge: e, normal: self.outward_normal(t, e) });
            }
        }
        out
    }

    /// Triangle containing `p` and the barycentric coordinates of `p` in it.
    /// Points on shared edges resolve to one of the candidates; points outside
    /// the box are clamped to the nearest cell.
    pub fn locate(&self, p: Point) -> (usize, [f64; 3]) {
        let (dx, dy) = self.cell_size();
        let fx = (p[0] - self.bbox.x_min) / dx;
        let fy = (p[1] - self.bbox.y_min) / dy;
        let i = (fx.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (fy.floor().max(0.0) as usize).min(self.ny - 1);
        let (sx, sy) = (fx - i as f64, fy - j as f64);
        let cell = j * self.nx + i;
        let t = if sy <= sx { 2 * cell } else { 2 * cell + 1 };
        (t, self.barycentric(t, p))
    }

    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [p0, p1, p2] = self.triangle_vertices(t);
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let l1 = ((p[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p[1] - p0[1])) / det;
        let l2 = ((p1[0] - p0[0]) * (p[1] - p0[1]) - (p[0] - p0[0]) * (p1[1] - p0[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Plain-text dump: `v x y` per vertex, then `t i j k` per triangle.
    pub fn write_debug<W: Write>(&self, mut w: W) -> io::Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "t {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}
