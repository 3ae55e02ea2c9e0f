use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial dimension of the voxel grid. Two-dimensional grids are plane stress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Two,
    Three,
}

impl Dimension {
    /// Displacement components per node.
    pub const fn ndim(self) -> usize {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }

    /// Nodes per element (quad or hexahedron).
    pub const fn nodes_per_element(self) -> usize {
        match self {
            Dimension::Two => 4,
            Dimension::Three => 8,
        }
    }

    /// Displacement DOFs per element.
    pub const fn element_dofs(self) -> usize {
        self.ndim() * self.nodes_per_element()
    }

    /// Independent stress components: [σx, σy, τxy] or [σx, σy, σz, τxy, τxz, τyz].
    pub const fn stress_components(self) -> usize {
        match self {
            Dimension::Two => 3,
            Dimension::Three => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

/// Corner offsets of the reference element in VTK order.
pub(crate) const HEX_CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Structured grid of identical box elements.
///
/// Nodes are numbered x-fastest, then y, then z; elements likewise. Nodal DOF
/// `c` of node `n` is `n * ndim + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelMesh {
    dim: Dimension,
    elems: [usize; 3],
    element_size: [f64; 3],
    thickness: f64,
    fixed: Vec<bool>,
    fixed_dofs: Vec<usize>,
}

impl VoxelMesh {
    /// `dims` has two entries for a plane-stress grid and three for a solid grid.
    /// `thickness` is only used in 2D.
    pub fn new(dims: &[usize], element_size: &[f64], thickness: f64) -> Result<Self> {
        let dim = match dims.len() {
            2 => Dimension::Two,
            3 => Dimension::Three,
            n => {
                return Err(Error::InvalidInput(format!(
                    "grid needs 2 or 3 element counts, got {n}"
                )))
            }
        };
        if element_size.len() != dims.len() {
            return Err(Error::InvalidInput(format!(
                "element_size has {} entries but dims has {}",
                element_size.len(),
                dims.len()
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidInput("zero elements along an axis".into()));
        }
        if element_size.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidInput(
                "element edge lengths must be strictly positive".into(),
            ));
        }
        let mut elems = [1; 3];
        let mut size = [1.0; 3];
        elems[..dims.len()].copy_from_slice(dims);
        size[..dims.len()].copy_from_slice(element_size);
        let thickness = match dim {
            Dimension::Two => {
                if !(thickness > 0.0 && thickness.is_finite()) {
                    return Err(Error::InvalidInput(
                        "plane-stress thickness must be strictly positive".into(),
                    ));
                }
                thickness
            }
            Dimension::Three => 1.0,
        };
        let mut mesh = VoxelMesh {
            dim,
            elems,
            element_size: size,
            thickness,
            fixed: Vec::new(),
            fixed_dofs: Vec::new(),
        };
        mesh.fixed = vec![false; mesh.n_dofs()];
        Ok(mesh)
    }

    pub fn dimension(&self) -> Dimension {
        self.dim
    }

    pub fn ndim(&self) -> usize {
        self.dim.ndim()
    }

    /// Element counts per axis; the z entry is 1 in 2D.
    pub fn element_counts(&self) -> [usize; 3] {
        self.elems
    }

    /// Node counts per axis; the z entry is 1 in 2D.
    pub fn node_counts(&self) -> [usize; 3] {
        match self.dim {
            Dimension::Two => [self.elems[0] + 1, self.elems[1] + 1, 1],
            Dimension::Three => [self.elems[0] + 1, self.elems[1] + 1, self.elems[2] + 1],
        }
    }

    /// Element edge lengths; the z entry is 1 in 2D.
    pub fn element_size(&self) -> [f64; 3] {
        self.element_size
    }

    /// Out-of-plane thickness (2D); 1 in 3D.
    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn element_volume(&self) -> f64 {
        let [hx, hy, hz] = self.element_size;
        match self.dim {
            Dimension::Two => hx * hy * self.thickness,
            Dimension::Three => hx * hy * hz,
        }
    }

    pub fn n_elements(&self) -> usize {
        self.elems.iter().product()
    }

    pub fn n_nodes(&self) -> usize {
        self.node_counts().iter().product()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes() * self.ndim()
    }

    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.node_counts();
        i + nx * (j + ny * k)
    }

    pub fn node_ijk(&self, node: usize) -> [usize; 3] {
        let [nx, ny, _] = self.node_counts();
        [node % nx, (node / nx) % ny, node / (nx * ny)]
    }

    pub fn element_ijk(&self, e: usize) -> [usize; 3] {
        let [ex, ey, _] = self.elems;
        [e % ex, (e / ex) % ey, e / (ex * ey)]
    }

    pub fn element_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.elems[0] * (j + self.elems[1] * k)
    }

    pub fn node_coords(&self, node: usize) -> [f64; 3] {
        let ijk = self.node_ijk(node);
        let mut x = [0.0; 3];
        for a in 0..self.ndim() {
            x[a] = ijk[a] as f64 * self.element_size[a];
        }
        x
    }

    pub fn element_center(&self, e: usize) -> [f64; 3] {
        let ijk = self.element_ijk(e);
        let mut x = [0.0; 3];
        for a in 0..self.ndim() {
            x[a] = (ijk[a] as f64 + 0.5) * self.element_size[a];
        }
        x
    }

    /// Corner nodes of element `e` in VTK order (first 4 entries in 2D).
    pub fn element_nodes(&self, e: usize) -> [usize; 8] {
        let [i, j, k] = self.element_ijk(e);
        let mut out = [0; 8];
        for (slot, c) in HEX_CORNERS
            .iter()
            .take(self.dim.nodes_per_element())
            .enumerate()
        {
            out[slot] = self.node_index(i + c[0], j + c[1], k + c[2]);
        }
        out
    }

    /// Global DOFs of element `e`, node-major; writes `element_dofs()` entries.
    pub fn element_dofs_into(&self, e: usize, out: &mut [usize]) {
        let nd = self.ndim();
        let nodes = self.element_nodes(e);
        for a in 0..self.dim.nodes_per_element() {
            for c in 0..nd {
                out[a * nd + c] = nodes[a] * nd + c;
            }
        }
    }

    pub fn element_dofs(&self, e: usize) -> Vec<usize> {
        let mut v = vec![0; self.dim.element_dofs()];
        self.element_dofs_into(e, &mut v);
        v
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.fixed[dof]
    }

    pub fn fixed_mask(&self) -> &[bool] {
        &self.fixed
    }

    /// Sorted constrained DOF indices.
    pub fn fixed_dofs(&self) -> &[usize] {
        &self.fixed_dofs
    }

    pub fn fix_dof(&mut self, dof: usize) -> Result<()> {
        if dof >= self.n_dofs() {
            return Err(Error::InvalidInput(format!(
                "fixed DOF {dof} out of range (DOF count {})",
                self.n_dofs()
            )));
        }
        if !self.fixed[dof] {
            self.fixed[dof] = true;
            let pos = self.fixed_dofs.partition_point(|&d| d < dof);
            self.fixed_dofs.insert(pos, dof);
        }
        Ok(())
    }

    /// Zero the constrained entries of a DOF vector.
    pub fn zero_fixed(&self, x: &mut [f64]) {
        for &d in &self.fixed_dofs {
            x[d] = 0.0;
        }
    }

    /// Elements incident to `node`.
    pub fn node_elements(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let [i, j, k] = self.node_ijk(node);
        let nd = self.ndim();
        let elems = self.elems;
        let kk: &[isize] = if nd == 3 { &[-1, 0] } else { &[0] };
        let mut out = Vec::with_capacity(8);
        for &dk in kk {
            for dj in [-1isize, 0] {
                for di in [-1isize, 0] {
                    let (ei, ej, ek) = (i as isize + di, j as isize + dj, k as isize + dk);
                    if ei < 0 || ej < 0 || ek < 0 {
                        continue;
                    }
                    let (ei, ej, ek) = (ei as usize, ej as usize, ek as usize);
                    if ei >= elems[0] || ej >= elems[1] || ek >= elems[2] {
                        continue;
                    }
                    out.push(self.element_index(ei, ej, ek));
                }
            }
        }
        out.into_iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cube_counts() {
        let m = VoxelMesh::new(&[1, 1, 1], &[1.0, 1.0, 1.0], 1.0).unwrap();
        assert_eq!(m.n_nodes(), 8);
        assert_eq!(m.n_dofs(), 24);
        assert_eq!(m.n_elements(), 1);
    }

    #[test]
    fn plane_grid_counts() {
        let m = VoxelMesh::new(&[5, 25], &[0.01, 0.01], 0.01).unwrap();
        assert_eq!(m.n_nodes(), 6 * 26);
        assert_eq!(m.n_dofs(), 6 * 26 * 2);
        assert_eq!(m.element_nodes(0)[..4], [0, 1, 7, 6]);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(VoxelMesh::new(&[0, 2, 2], &[1.0; 3], 1.0).is_err());
        assert!(VoxelMesh::new(&[1, 2, 2], &[1.0, -1.0, 1.0], 1.0).is_err());
        assert!(VoxelMesh::new(&[2], &[1.0], 1.0).is_err());
        assert!(VoxelMesh::new(&[2, 2], &[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn fixed_dofs_stay_sorted_and_in_range() {
        let mut m = VoxelMesh::new(&[1, 1], &[1.0, 1.0], 1.0).unwrap();
        m.fix_dof(5).unwrap();
        m.fix_dof(1).unwrap();
        m.fix_dof(5).unwrap();
        assert_eq!(m.fixed_dofs(), &[1, 5]);
        assert!(m.fix_dof(8).is_err());
    }

    #[test]
    fn node_elements_of_interior_node() {
        let m = VoxelMesh::new(&[2, 2, 2], &[1.0; 3], 1.0).unwrap();
        let centre = m.node_index(1, 1, 1);
        assert_eq!(m.node_elements(centre).count(), 8);
        assert_eq!(m.node_elements(0).collect::<Vec<_>>(), vec![0]);
    }
}
