//! Design domain, material, loads, supports and the design field.

mod design;
mod loads;
mod material;
mod mesh;
mod selector;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub use design::{volume_fraction, DesignField};
pub use loads::{face_area, Direction, FacePressure, LoadCase, LoadSpec, NodalForce, PointLoad};
pub use material::Material;
pub use mesh::{Axis, Dimension, VoxelMesh};
pub(crate) use mesh::HEX_CORNERS;
pub use selector::{Face, NodeBox, NodeSelector};

use crate::error::{Error, Result};
use crate::fem::{ElementKernels, SparsePattern};

/// Grid geometry as written in a problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Two entries for plane stress, three for solids.
    pub dims: Vec<usize>,
    pub element_size: Vec<f64>,
    /// Out-of-plane thickness for 2D grids.
    pub thickness: f64,
}

/// Constrained displacement components on a node selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Support {
    pub at: NodeSelector,
    #[serde(default = "all_axes")]
    pub dofs: Vec<Axis>,
}

fn all_axes() -> Vec<Axis> {
    Axis::ALL.to_vec()
}

impl Support {
    pub fn clamp(at: NodeSelector) -> Self {
        Support { at, dofs: all_axes() }
    }
}

/// Resolve supports and loads onto a new grid.
pub fn build_grid(
    grid: &GridSpec,
    supports: &[Support],
    loads: &LoadSpec,
) -> Result<(VoxelMesh, LoadCase)> {
    let mut mesh = VoxelMesh::new(&grid.dims, &grid.element_size, grid.thickness)?;
    let nd = mesh.ndim();
    for s in supports {
        let region = s.at.resolve(&mesh)?;
        let nodes: Vec<usize> = region.nodes(&mesh).collect();
        for axis in &s.dofs {
            let a = axis.index();
            if a >= nd {
                if mesh.dimension() == Dimension::Two && *axis == Axis::Z {
                    continue;
                }
                return Err(Error::InvalidInput(format!("support axis {a} out of range")));
            }
            for &n in &nodes {
                mesh.fix_dof(n * nd + a)?;
            }
        }
    }
    let mut lc = LoadCase::new(mesh.n_dofs(), loads.delta_t);
    for p in &loads.point {
        lc.add_point(&mesh, p)?;
    }
    for p in &loads.pressure {
        lc.add_pressure(&mesh, p)?;
    }
    Ok((mesh, lc))
}

/// Which elements are frozen solid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonDesign {
    /// One layer of elements touching loaded or supported nodes.
    #[default]
    Auto,
    None,
    #[serde(skip)]
    Explicit(Vec<bool>),
}

/// One layer of elements around loaded nodes and constrained nodes.
pub fn auto_non_design(mesh: &VoxelMesh, loads: &LoadCase) -> Vec<bool> {
    let mut mask = vec![false; mesh.n_elements()];
    let nd = mesh.ndim();
    let mut mark = |node: usize| {
        for e in mesh.node_elements(node) {
            mask[e] = true;
        }
    };
    for &n in &loads.loaded_nodes {
        mark(n);
    }
    let mut last = usize::MAX;
    for &dof in mesh.fixed_dofs() {
        let n = dof / nd;
        if n != last {
            mark(n);
            last = n;
        }
    }
    mask
}

/// A fully resolved analysis problem: grid, material, loads, reference-element
/// kernels and the non-design mask. Immutable once built.
#[derive(Debug)]
pub struct Model {
    mesh: VoxelMesh,
    material: Material,
    loads: LoadCase,
    kernels: ElementKernels,
    non_design: Vec<bool>,
    f_st: Vec<f64>,
    eps_th: Vec<f64>,
    fe_th: Vec<f64>,
    pattern: OnceLock<SparsePattern>,
}

impl Model {
    pub fn new(
        mesh: VoxelMesh,
        material: Material,
        loads: LoadCase,
        non_design: NonDesign,
    ) -> Result<Self> {
        let errs = material.violations();
        if !errs.is_empty() {
            return Err(Error::InvalidInput(errs.join("; ")));
        }
        if loads.n_dofs() != mesh.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_dofs(),
                got: loads.n_dofs(),
            });
        }
        if !(loads.delta_t.is_finite()) {
            return Err(Error::InvalidInput("delta_t must be finite".into()));
        }
        let non_design = match non_design {
            NonDesign::Auto => auto_non_design(&mesh, &loads),
            NonDesign::None => vec![false; mesh.n_elements()],
            NonDesign::Explicit(m) => {
                if m.len() != mesh.n_elements() {
                    return Err(Error::DimensionMismatch {
                        expected: mesh.n_elements(),
                        got: m.len(),
                    });
                }
                m
            }
        };
        let kernels = ElementKernels::new(&mesh, &material);
        let eps_th = kernels.thermal_strain(&material, loads.delta_t);
        let fe_th = kernels.thermal_load(&eps_th);
        let mut f_st = loads.structural();
        mesh.zero_fixed(&mut f_st);
        Ok(Model {
            mesh,
            material,
            loads,
            kernels,
            non_design,
            f_st,
            eps_th,
            fe_th,
            pattern: OnceLock::new(),
        })
    }

    /// Same grid and supports with different loads.
    pub fn with_loads(&self, loads: LoadCase) -> Result<Self> {
        Model::new(
            self.mesh.clone(),
            self.material,
            loads,
            NonDesign::Explicit(self.non_design.clone()),
        )
    }

    pub fn mesh(&self) -> &VoxelMesh {
        &self.mesh
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn loads(&self) -> &LoadCase {
        &self.loads
    }

    pub fn kernels(&self) -> &ElementKernels {
        &self.kernels
    }

    pub fn non_design(&self) -> &[bool] {
        &self.non_design
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_dofs()
    }

    /// Structural load vector with constrained entries zeroed.
    pub fn structural_load(&self) -> &[f64] {
        &self.f_st
    }

    pub fn thermal_strain(&self) -> &[f64] {
        &self.eps_th
    }

    /// Thermal load of one fully present element (element-local).
    pub fn element_thermal_load(&self) -> &[f64] {
        &self.fe_th
    }

    pub fn full_design(&self) -> DesignField {
        DesignField::full(self.non_design.clone())
    }

    pub(crate) fn pattern(&self) -> &SparsePattern {
        self.pattern.get_or_init(|| SparsePattern::new(&self.mesh))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip_2d() -> (GridSpec, Vec<Support>) {
        (
            GridSpec {
                dims: vec![5, 25],
                element_size: vec![0.01, 0.01],
                thickness: 0.01,
            },
            vec![Support::clamp(NodeSelector::face(Face::YMin))],
        )
    }

    #[test]
    fn bottom_edge_fixed_2d() {
        let (g, s) = strip_2d();
        let (mesh, _) = build_grid(&g, &s, &LoadSpec::default()).unwrap();
        assert_eq!(mesh.fixed_dofs().len(), 12);
        assert!(mesh.fixed_dofs().iter().all(|&d| d < mesh.n_dofs()));
    }

    #[test]
    fn column_element_edges() {
        let g = GridSpec {
            dims: vec![10, 50, 2],
            element_size: vec![0.05 / 10.0, 0.25 / 50.0, 0.01 / 2.0],
            thickness: 1.0,
        };
        let mesh = VoxelMesh::new(&g.dims, &g.element_size, 1.0).unwrap();
        let h = mesh.element_size();
        assert!(h.iter().all(|v| (v - 0.005).abs() < 1e-15));
    }

    #[test]
    fn empty_selector_is_an_error() {
        let (g, _) = strip_2d();
        let bad = vec![Support::clamp(NodeSelector::face(Face::YMin).with_range(0, 40, 50))];
        assert!(matches!(
            build_grid(&g, &bad, &LoadSpec::default()),
            Err(Error::EmptySelector(_))
        ));
    }

    #[test]
    fn load_on_fixed_dof_is_not_fatal() {
        let (g, s) = strip_2d();
        let loads = LoadSpec {
            delta_t: 0.0,
            point: vec![PointLoad {
                at: NodeSelector::node(0, 0, 0),
                axis: Axis::Y,
                magnitude: 1.0,
            }],
            pressure: vec![],
        };
        let (mesh, lc) = build_grid(&g, &s, &loads).unwrap();
        let model = Model::new(mesh, Material::steel(), lc, NonDesign::Auto).unwrap();
        assert!(model.structural_load().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn pressure_total_is_preserved() {
        let g = GridSpec {
            dims: vec![3, 5, 4],
            element_size: vec![0.013, 0.02, 0.007],
            thickness: 1.0,
        };
        let loads = LoadSpec {
            delta_t: 0.0,
            point: vec![],
            pressure: vec![FacePressure {
                at: NodeSelector::face(Face::YMax),
                magnitude: 2.5e6,
                direction: Direction::NegY,
            }],
        };
        let (mesh, lc) = build_grid(&g, &[], &loads).unwrap();
        let region = loads.pressure[0].at.resolve(&mesh).unwrap();
        let total = -2.5e6 * face_area(&mesh, &region, 1);
        let sum: f64 = lc.forces.iter().map(|f| f.value).sum();
        assert!(((sum - total) / total).abs() < 1e-12);
    }

    #[test]
    fn auto_mask_covers_supports_and_loads() {
        let (g, s) = strip_2d();
        let loads = LoadSpec {
            delta_t: 0.0,
            point: vec![PointLoad {
                at: NodeSelector::node(5, 25, 0),
                axis: Axis::X,
                magnitude: 1.0,
            }],
            pressure: vec![],
        };
        let (mesh, lc) = build_grid(&g, &s, &loads).unwrap();
        let mask = auto_non_design(&mesh, &lc);
        assert_eq!(mask.iter().filter(|m| **m).count(), 5 + 1);
        assert!(mask[mesh.element_index(4, 24, 0)]);
    }

    #[test]
    fn rebuilding_is_deterministic() {
        let (g, s) = strip_2d();
        let loads = LoadSpec {
            delta_t: 10.0,
            point: vec![PointLoad {
                at: NodeSelector::face(Face::YMax),
                axis: Axis::X,
                magnitude: 7.0,
            }],
            pressure: vec![],
        };
        let a = build_grid(&g, &s, &loads).unwrap();
        let b = build_grid(&g, &s, &loads).unwrap();
        assert_eq!(a, b);
    }
}
