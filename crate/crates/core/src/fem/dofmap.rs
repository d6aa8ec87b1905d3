use crate::error::{PhiFemError, Result};
use crate::fem::basis::ReferenceElement;
use crate::mesh::{BackgroundMesh, Point};

/// Integer key of a degree-`k` Lagrange node on the `k`-times refined grid.
/// Keys are `(i, j)` with physical position `box_min + (i dx, j dy) / k`.
pub fn node_key(mesh: &BackgroundMesh, t: usize, multi_index: [usize; 3]) -> (usize, usize) {
    let tri = mesh.triangles()[t];
    let mut key = (0, 0);
    for (v, m) in tri.iter().zip(multi_index) {
        let (i, j) = mesh.vertex_grid_index(*v);
        key.0 += m * i;
        key.1 += m * j;
    }
    key
}

pub fn node_position(mesh: &BackgroundMesh, degree: usize, key: (usize, usize)) -> Point {
    let (dx, dy) = mesh.cell_size();
    let b = mesh.bbox();
    [b.x_min + key.0 as f64 * dx / degree as f64, b.y_min + key.1 as f64 * dy / degree as f64]
}

/// Continuous P_k numbering restricted to a set of triangles.
///
/// Dofs are sorted by `(j, i)` grid key, i.e. row by row from the bottom,
/// which keeps the matrix bandwidth proportional to one grid row.
#[derive(Debug, Clone)]
pub struct DofMap {
    degree: usize,
    n_dofs: usize,
    triangles: Vec<usize>,
    position: Vec<usize>,
    cell_dofs: Vec<usize>,
    n_local: usize,
    coordinates: Vec<Point>,
}

impl DofMap {
    pub fn new(mesh: &BackgroundMesh, triangles: &[usize], degree: usize) -> Result<Self> {
        if triangles.is_empty() {
            return Err(PhiFemError::EmptyActiveSet);
        }
        let elem = ReferenceElement::new(degree)?;
        let n_local = elem.n_basis();
        let mut keys: Vec<(usize, usize)> = Vec::with_capacity(triangles.len() * n_local);
        for &t in triangles {
            if t >= mesh.n_triangles() {
                return Err(PhiFemError::InvalidArgument(format!("triangle index {t} out of range")));
            }
            for &mi in elem.multi_indices() {
                keys.push(node_key(mesh, t, mi));
            }
        }
        let local_keys = keys.clone();
        keys.sort_unstable_by_key(|&(i, j)| (j, i));
        keys.dedup();

        let cell_dofs: Vec<usize> = local_keys
            .iter()
            .map(|&(i, j)| keys.binary_search_by_key(&(j, i), |&(a, b)| (b, a)).expect("key was inserted"))
            .collect();
        let mut position = vec![usize::MAX; mesh.n_triangles()];
        for (p, &t) in triangles.iter().enumerate() {
            position[t] = p;
        }
        let coordinates = keys.iter().map(|&k| node_position(mesh, degree, k)).collect();
        Ok(Self {
            degree,
            n_dofs: keys.len(),
            triangles: triangles.to_vec(),
            position,
            cell_dofs,
            n_local,
            coordinates,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn triangles(&self) -> &[usize] {
        &self.triangles
    }

    pub fn contains(&self, t: usize) -> bool {
        self.position.get(t).is_some_and(|&p| p != usize::MAX)
    }

    /// Global dofs of triangle `t` in reference-element order.
    pub fn dofs(&self, t: usize) -> Option<&[usize]> {
        let p = *self.position.get(t)?;
        (p != usize::MAX).then(|| &self.cell_dofs[p * self.n_local..(p + 1) * self.n_local])
    }

    pub fn coordinates(&self) -> &[Point] {
        &self.coordinates
    }

    /// Nodal interpolant of `f` in this space.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.coordinates.iter().map(|&p| f(p)).collect()
    }
}
