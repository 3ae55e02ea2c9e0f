use std::fmt;

use serde::{Deserialize, Serialize};

use super::mesh::{Axis, VoxelMesh};
use super::selector::{NodeBox, NodeSelector};
use crate::error::{Error, Result};

/// Signed axis direction such as `-y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
    #[serde(rename = "+z")]
    PosZ,
    #[serde(rename = "-z")]
    NegZ,
}

impl Direction {
    pub fn axis(self) -> Axis {
        match self {
            Direction::PosX | Direction::NegX => Axis::X,
            Direction::PosY | Direction::NegY => Axis::Y,
            Direction::PosZ | Direction::NegZ => Axis::Z,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Direction::PosX | Direction::PosY | Direction::PosZ => 1.0,
            _ => -1.0,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign() > 0.0 { '+' } else { '-' };
        let a = ["x", "y", "z"][self.axis().index()];
        write!(f, "{s}{a}")
    }
}

/// Total force `magnitude` (N) along `axis`, shared among the selected nodes
/// by tributary weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointLoad {
    pub at: NodeSelector,
    pub axis: Axis,
    pub magnitude: f64,
}

/// Uniform traction of `magnitude` (Pa) over a face region, acting along `direction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacePressure {
    pub at: NodeSelector,
    pub magnitude: f64,
    pub direction: Direction,
}

/// Load definition as written in a problem file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSpec {
    /// Uniform temperature rise above the stress-free reference (°C).
    #[serde(default)]
    pub delta_t: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub point: Vec<PointLoad>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pressure: Vec<FacePressure>,
}

/// A single nodal force contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodalForce {
    pub dof: usize,
    pub value: f64,
}

/// Loads resolved onto a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadCase {
    pub delta_t: f64,
    /// Nodal contributions in definition order.
    pub forces: Vec<NodalForce>,
    /// Sorted, deduplicated nodes carrying a structural load.
    pub loaded_nodes: Vec<usize>,
    n_dofs: usize,
}

impl LoadCase {
    pub fn new(n_dofs: usize, delta_t: f64) -> Self {
        LoadCase {
            delta_t,
            forces: Vec::new(),
            loaded_nodes: Vec::new(),
            n_dofs,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    /// Dense structural load vector.
    pub fn structural(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.n_dofs];
        for nf in &self.forces {
            f[nf.dof] += nf.value;
        }
        f
    }

    pub fn has_structural_load(&self) -> bool {
        self.forces.iter().any(|f| f.value != 0.0)
    }

    /// Multiply every structural force by `c` (temperature untouched).
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for f in &mut out.forces {
            f.value *= c;
        }
        out
    }

    fn push(&mut self, mesh: &VoxelMesh, node: usize, axis: usize, value: f64) {
        let dof = node * mesh.ndim() + axis;
        if mesh.is_fixed(dof) {
            log::warn!("load applied to constrained DOF {dof} (node {node}) has no effect");
        }
        self.forces.push(NodalForce { dof, value });
        if let Err(pos) = self.loaded_nodes.binary_search(&node) {
            self.loaded_nodes.insert(pos, node);
        }
    }

    pub fn add_point(&mut self, mesh: &VoxelMesh, load: &PointLoad) -> Result<()> {
        let axis = check_axis(mesh, load.axis)?;
        let region = load.at.resolve(mesh)?;
        let h = mesh.element_size();
        let weights: Vec<f64> = region
            .iter()
            .map(|ijk| {
                (0..mesh.ndim())
                    .filter(|&a| !region.is_flat(a))
                    .map(|a| region.tributary(a, ijk[a], h[a]))
                    .product()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        for (node, w) in region.nodes(mesh).zip(&weights) {
            self.push(mesh, node, axis, load.magnitude * w / total);
        }
        Ok(())
    }

    pub fn add_pressure(&mut self, mesh: &VoxelMesh, load: &FacePressure) -> Result<()> {
        let axis = check_axis(mesh, load.direction.axis())?;
        let Some(face) = load.at.face else {
            return Err(Error::InvalidInput(format!(
                "pressure selector `{}` must name a face",
                load.at
            )));
        };
        let region = load.at.resolve(mesh)?;
        let h = mesh.element_size();
        let in_face: Vec<usize> = (0..mesh.ndim()).filter(|&a| a != face.axis()).collect();
        if in_face.iter().any(|&a| region.is_flat(a)) {
            return Err(Error::InvalidInput(format!(
                "pressure region `{}` has zero area",
                load.at
            )));
        }
        let p = load.magnitude * load.direction.sign();
        let t = if mesh.ndim() == 2 { mesh.thickness() } else { 1.0 };
        for (node, ijk) in region.nodes(mesh).zip(region.iter()) {
            let area: f64 = in_face
                .iter()
                .map(|&a| region.tributary(a, ijk[a], h[a]))
                .product::<f64>()
                * t;
            self.push(mesh, node, axis, p * area);
        }
        Ok(())
    }
}

/// Area of a resolved face region (thickness-weighted in 2D).
pub fn face_area(mesh: &VoxelMesh, region: &NodeBox, face_axis: usize) -> f64 {
    let h = mesh.element_size();
    let t = if mesh.ndim() == 2 { mesh.thickness() } else { 1.0 };
    (0..mesh.ndim())
        .filter(|&a| a != face_axis)
        .map(|a| (region.hi[a] - region.lo[a]) as f64 * h[a])
        .product::<f64>()
        * t
}

fn check_axis(mesh: &VoxelMesh, axis: Axis) -> Result<usize> {
    let a = axis.index();
    if a >= mesh.ndim() {
        return Err(Error::InvalidInput(format!(
            "load along z on a {}D grid",
            mesh.ndim()
        )));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::selector::Face;

    #[test]
    fn point_load_shares_total() {
        let m = VoxelMesh::new(&[4, 4, 2], &[0.1, 0.2, 0.3], 1.0).unwrap();
        let mut lc = LoadCase::new(m.n_dofs(), 0.0);
        lc.add_point(
            &m,
            &PointLoad {
                at: NodeSelector::face(Face::YMax),
                axis: Axis::Y,
                magnitude: -1e5,
            },
        )
        .unwrap();
        let total: f64 = lc.forces.iter().map(|f| f.value).sum();
        assert!((total + 1e5).abs() < 1e-9);
        assert_eq!(lc.loaded_nodes.len(), 15);
        // corner node carries a quarter of an interior node's share
        let corner = lc.forces[0].value;
        let interior = lc.forces[6].value;
        assert!((interior / corner - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_node_point_load() {
        let m = VoxelMesh::new(&[2, 2], &[1.0, 1.0], 0.1).unwrap();
        let mut lc = LoadCase::new(m.n_dofs(), 0.0);
        lc.add_point(
            &m,
            &PointLoad {
                at: NodeSelector::node(2, 2, 0),
                axis: Axis::X,
                magnitude: 3.0,
            },
        )
        .unwrap();
        let f = lc.structural();
        assert_eq!(f[8 * 2], 3.0);
        assert_eq!(f.iter().filter(|v| **v != 0.0).count(), 1);
    }

    #[test]
    fn pressure_needs_face_and_area() {
        let m = VoxelMesh::new(&[2, 2, 2], &[1.0; 3], 1.0).unwrap();
        let mut lc = LoadCase::new(m.n_dofs(), 0.0);
        let no_face = FacePressure {
            at: NodeSelector::default(),
            magnitude: 1.0,
            direction: Direction::NegY,
        };
        assert!(lc.add_pressure(&m, &no_face).is_err());
        let line = FacePressure {
            at: NodeSelector::face(Face::YMax).with_range(0, 1, 1),
            magnitude: 1.0,
            direction: Direction::NegY,
        };
        assert!(lc.add_pressure(&m, &line).is_err());
    }

    #[test]
    fn direction_round_trip() {
        #[derive(Serialize, Deserialize)]
        struct W {
            d: Direction,
        }
        let w: W = toml::from_str("d = \"-z\"").unwrap();
        assert_eq!(w.d, Direction::NegZ);
        assert_eq!(w.d.to_string(), "-z");
    }
}
