use std::fmt;

use serde::{Deserialize, Serialize};

use super::mesh::{Dimension, VoxelMesh};
use crate::error::{Error, Result};

/// Boundary face of the box-shaped domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Face {
    #[serde(rename = "x-min")]
    XMin,
    #[serde(rename = "x-max")]
    XMax,
    #[serde(rename = "y-min")]
    YMin,
    #[serde(rename = "y-max")]
    YMax,
    #[serde(rename = "z-min")]
    ZMin,
    #[serde(rename = "z-max")]
    ZMax,
}

impl Face {
    pub fn axis(self) -> usize {
        match self {
            Face::XMin | Face::XMax => 0,
            Face::YMin | Face::YMax => 1,
            Face::ZMin | Face::ZMax => 2,
        }
    }

    pub fn is_max(self) -> bool {
        matches!(self, Face::XMax | Face::YMax | Face::ZMax)
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Face::XMin => "x-min",
            Face::XMax => "x-max",
            Face::YMin => "y-min",
            Face::YMax => "y-max",
            Face::ZMin => "z-min",
            Face::ZMax => "z-max",
        };
        f.write_str(s)
    }
}

/// Axis-aligned node selection: an optional boundary face intersected with
/// optional inclusive node-index ranges per axis.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSelector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face: Option<Face>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<[usize; 2]>,
}

impl NodeSelector {
    pub fn face(face: Face) -> Self {
        NodeSelector {
            face: Some(face),
            ..Default::default()
        }
    }

    pub fn node(i: usize, j: usize, k: usize) -> Self {
        NodeSelector {
            face: None,
            i: Some([i, i]),
            j: Some([j, j]),
            k: Some([k, k]),
        }
    }

    pub fn with_range(mut self, axis: usize, lo: usize, hi: usize) -> Self {
        let r = Some([lo, hi]);
        match axis {
            0 => self.i = r,
            1 => self.j = r,
            _ => self.k = r,
        }
        self
    }

    fn range(&self, axis: usize) -> Option<[usize; 2]> {
        [self.i, self.j, self.k][axis]
    }

    /// Resolve against a mesh into an inclusive box of node indices.
    pub fn resolve(&self, mesh: &VoxelMesh) -> Result<NodeBox> {
        let counts = mesh.node_counts();
        if mesh.dimension() == Dimension::Two {
            if matches!(self.face, Some(Face::ZMin | Face::ZMax)) {
                return Err(Error::InvalidInput(format!(
                    "selector `{self}` uses a z face on a 2D grid"
                )));
            }
        }
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            hi[a] = counts[a] - 1;
        }
        if let Some(face) = self.face {
            let a = face.axis();
            let v = if face.is_max() { counts[a] - 1 } else { 0 };
            lo[a] = v;
            hi[a] = v;
        }
        for a in 0..3 {
            if let Some([l, h]) = self.range(a) {
                lo[a] = lo[a].max(l);
                hi[a] = hi[a].min(h);
            }
            if lo[a] > hi[a] {
                return Err(Error::EmptySelector(self.to_string()));
            }
        }
        Ok(NodeBox { lo, hi })
    }
}

impl fmt::Display for NodeSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(face) = self.face {
            parts.push(face.to_string());
        }
        for (name, r) in ["i", "j", "k"].iter().zip([self.i, self.j, self.k]) {
            if let Some([l, h]) = r {
                parts.push(format!("{name}={l}..={h}"));
            }
        }
        if parts.is_empty() {
            f.write_str("all")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

/// Inclusive box of lattice node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl NodeBox {
    pub fn len(&self) -> usize {
        (0..3).map(|a| self.hi[a] - self.lo[a] + 1).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lattice indices in node-number order.
    pub fn iter(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let (lo, hi) = (self.lo, self.hi);
        (lo[2]..=hi[2]).flat_map(move |k| {
            (lo[1]..=hi[1]).flat_map(move |j| (lo[0]..=hi[0]).map(move |i| [i, j, k]))
        })
    }

    pub fn nodes<'a>(&'a self, mesh: &'a VoxelMesh) -> impl Iterator<Item = usize> + 'a {
        self.iter().map(|[i, j, k]| mesh.node_index(i, j, k))
    }

    /// Tributary length of lattice index `i` along `axis` (half cells at the ends).
    pub fn tributary(&self, axis: usize, i: usize, h: f64) -> f64 {
        let (lo, hi) = (self.lo[axis] as f64, self.hi[axis] as f64);
        let x = i as f64;
        h * ((x + 0.5).min(hi) - (x - 0.5).max(lo))
    }

    pub fn is_flat(&self, axis: usize) -> bool {
        self.lo[axis] == self.hi[axis]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_selects_a_layer() {
        let m = VoxelMesh::new(&[5, 25], &[0.01, 0.01], 0.01).unwrap();
        let b = NodeSelector::face(Face::YMin).resolve(&m).unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(b.nodes(&m).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn range_outside_grid_is_empty() {
        let m = VoxelMesh::new(&[2, 2, 2], &[1.0; 3], 1.0).unwrap();
        let s = NodeSelector::face(Face::XMax).with_range(1, 7, 9);
        assert!(matches!(s.resolve(&m), Err(Error::EmptySelector(_))));
    }

    #[test]
    fn z_face_rejected_in_2d() {
        let m = VoxelMesh::new(&[2, 2], &[1.0; 2], 1.0).unwrap();
        assert!(NodeSelector::face(Face::ZMax).resolve(&m).is_err());
    }

    #[test]
    fn tributary_lengths_sum_to_extent() {
        let b = NodeBox {
            lo: [0, 2, 0],
            hi: [4, 6, 0],
        };
        let sx: f64 = (0..=4).map(|i| b.tributary(0, i, 0.5)).sum();
        let sy: f64 = (2..=6).map(|j| b.tributary(1, j, 0.5)).sum();
        assert!((sx - 2.0).abs() < 1e-15);
        assert!((sy - 2.0).abs() < 1e-15);
        assert_eq!(b.tributary(0, 0, 0.5), 0.25);
    }

    #[test]
    fn selector_toml_shape() {
        let s: NodeSelector = toml::from_str("face = \"x-min\"\nj = [0, 3]").unwrap();
        assert_eq!(s, NodeSelector::face(Face::XMin).with_range(1, 0, 3));
        assert!(toml::from_str::<NodeSelector>("face = \"x-left\"").is_err());
    }
}
