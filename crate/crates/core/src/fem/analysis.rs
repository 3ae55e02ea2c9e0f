use rayon::prelude::*;

use super::operator::gather;
use super::solver::{dot, SolverConfig, StiffnessSystem};
use crate::error::{Error, Result};
use crate::model::{DesignField, Model};

/// Per-element stiffness scales: occupancy for present elements, `ersatz` for void.
pub fn stiffness_scale(occupancy: &[f64], ersatz: f64) -> Vec<f64> {
    occupancy
        .iter()
        .map(|&x| if x > 0.0 { x } else { ersatz })
        .collect()
}

/// Global thermal load `Σ_e s_e f_th,e` (constrained entries zeroed).
pub fn thermal_load_vector(model: &Model, scale: &[f64]) -> Vec<f64> {
    let mesh = model.mesh();
    let fe = model.element_thermal_load();
    let ne = fe.len();
    let mut out = vec![0.0; mesh.n_dofs()];
    if fe.iter().all(|v| *v == 0.0) {
        return out;
    }
    let mut buf = vec![0.0; mesh.n_elements() * ne];
    buf.par_chunks_mut(ne).enumerate().for_each(|(e, b)| {
        for (o, v) in b.iter_mut().zip(fe) {
            *o = scale[e] * v;
        }
    });
    gather(mesh, &buf, &mut out);
    mesh.zero_fixed(&mut out);
    out
}

/// Element center stresses `x_e D (B0 d_e − ε_th)`, flattened per element.
/// Elements with zero occupancy carry zero stress.
pub fn recover_stress(model: &Model, occupancy: &[f64], d: &[f64]) -> Vec<f64> {
    let mesh = model.mesh();
    let k = model.kernels();
    let ns = k.stress_components();
    let ne = k.element_dofs();
    let eps = model.thermal_strain();
    let mut sigma = vec![0.0; mesh.n_elements() * ns];
    sigma.par_chunks_mut(ns).enumerate().for_each(|(e, s)| {
        let x = occupancy[e];
        if x == 0.0 {
            return;
        }
        let mut dofs = [0usize; 24];
        mesh.element_dofs_into(e, &mut dofs[..ne]);
        let mut de = [0.0; 24];
        for a in 0..ne {
            de[a] = d[dofs[a]];
        }
        k.center_stress(&de[..ne], eps, s);
        s.iter_mut().for_each(|v| *v *= x);
    });
    sigma
}

/// Compliance `fᵀd`.
pub fn compliance(f: &[f64], d: &[f64]) -> f64 {
    dot(f, d)
}

/// Static thermo-elastic state of one design.
#[derive(Debug, Clone)]
pub struct StaticState {
    /// Nodal displacements.
    pub d: Vec<f64>,
    /// Total load `f_st + f_th`.
    pub f: Vec<f64>,
    /// Element center stresses, `stress_components` per element.
    pub sigma: Vec<f64>,
    pub compliance: f64,
}

/// Factorized stiffness plus the static solution for one design.
#[derive(Debug)]
pub struct Analysis<'m> {
    pub system: StiffnessSystem<'m>,
    pub occupancy: Vec<f64>,
    pub state: StaticState,
}

impl<'m> Analysis<'m> {
    /// Solve K d = f_st + f_th for the given element occupancies (1 present, 0 void).
    pub fn new(model: &'m Model, occupancy: Vec<f64>, config: &SolverConfig) -> Result<Self> {
        if occupancy.len() != model.n_elements() {
            return Err(Error::DimensionMismatch {
                expected: model.n_elements(),
                got: occupancy.len(),
            });
        }
        let scale = stiffness_scale(&occupancy, config.ersatz_eps);
        let f_th = thermal_load_vector(model, &scale);
        let system = StiffnessSystem::new(model, scale, *config)?;
        let f: Vec<f64> = model
            .structural_load()
            .iter()
            .zip(&f_th)
            .map(|(a, b)| a + b)
            .collect();
        let d = system.solve(&f)?;
        let sigma = recover_stress(model, &occupancy, &d);
        let compliance = compliance(&f, &d);
        Ok(Analysis {
            system,
            occupancy,
            state: StaticState {
                d,
                f,
                sigma,
                compliance,
            },
        })
    }

    pub fn for_design(model: &'m Model, design: &DesignField, config: &SolverConfig) -> Result<Self> {
        Analysis::new(model, design.occupancy(), config)
    }

    pub fn model(&self) -> &'m Model {
        self.system.model()
    }

    /// `dᵀ K d`, equal to the compliance up to solver tolerance.
    pub fn energy_norm(&self) -> Result<f64> {
        let mut kd = vec![0.0; self.state.d.len()];
        self.system.matvec(&self.state.d, &mut kd)?;
        Ok(dot(&self.state.d, &kd))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        build_grid, Axis, Face, GridSpec, LoadSpec, Material, NodeSelector, NonDesign, Support,
    };

    #[test]
    fn statically_determinate_heating_is_stress_free() {
        let g = GridSpec {
            dims: vec![3, 4, 2],
            element_size: vec![0.01, 0.02, 0.01],
            thickness: 1.0,
        };
        // 3-2-1 supports
        let supports = vec![
            Support::clamp(NodeSelector::node(0, 0, 0)),
            Support {
                at: NodeSelector::node(3, 0, 0),
                dofs: vec![Axis::Y, Axis::Z],
            },
            Support {
                at: NodeSelector::node(0, 4, 0),
                dofs: vec![Axis::Z],
            },
        ];
        let loads = LoadSpec {
            delta_t: 100.0,
            ..Default::default()
        };
        let (mesh, lc) = build_grid(&g, &supports, &loads).unwrap();
        let mat = Material::new(2e11, 0.3, 1e-5).unwrap();
        let m = Model::new(mesh, mat, lc, NonDesign::None).unwrap();
        let a = Analysis::new(&m, vec![1.0; m.n_elements()], &SolverConfig::default()).unwrap();
        let bound = 1e-6 * mat.e * mat.alpha * 100.0;
        assert!(a.state.sigma.iter().all(|s| s.abs() < bound));
    }

    #[test]
    fn compliance_forms_agree() {
        let g = GridSpec {
            dims: vec![2, 8],
            element_size: vec![0.01, 0.01],
            thickness: 0.01,
        };
        let loads: LoadSpec = toml::from_str(
            "delta_t = 150.0\n[[point]]\nat = { face = \"y-max\" }\naxis = \"y\"\nmagnitude = -1000.0",
        )
        .unwrap();
        let (mesh, lc) = build_grid(
            &g,
            &[Support::clamp(NodeSelector::face(Face::YMin))],
            &loads,
        )
        .unwrap();
        let m = Model::new(mesh, Material::steel(), lc, NonDesign::None).unwrap();
        let mut occ = vec![1.0; m.n_elements()];
        occ[5] = 0.0;
        let a = Analysis::new(&m, occ, &SolverConfig::default()).unwrap();
        let dkd = a.energy_norm().unwrap();
        assert!(((a.state.compliance - dkd) / dkd).abs() < 1e-8);
        assert!(a.state.compliance > 0.0);
        let ns = 3;
        assert!(a.state.sigma[5 * ns..6 * ns].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn no_loads_no_compliance() {
        let g = GridSpec {
            dims: vec![2, 2],
            element_size: vec![1.0, 1.0],
            thickness: 1.0,
        };
        let (mesh, lc) = build_grid(
            &g,
            &[Support::clamp(NodeSelector::face(Face::XMin))],
            &LoadSpec::default(),
        )
        .unwrap();
        let m = Model::new(mesh, Material::steel(), lc, NonDesign::None).unwrap();
        let a = Analysis::new(&m, vec![1.0; 4], &SolverConfig::default()).unwrap();
        assert_eq!(a.state.compliance, 0.0);
    }
}
