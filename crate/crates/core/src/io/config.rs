use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::buckling::EigenConfig;
use crate::error::{Error, Result};
use crate::fem::{SolverConfig, SolverMethod};
use crate::model::{build_grid, GridSpec, LoadSpec, Material, Model, NodeSelector, NonDesign, Support};
use crate::optimizer::OptimizerSettings;

const BLOCKS: [&str; 6] = ["mesh", "material", "loads", "constraints", "solver", "output"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshBlock {
    /// Element counts: two entries for plane stress, three for solids.
    pub dims: Vec<usize>,
    pub element_size: Vec<f64>,
    /// Out-of-plane thickness of 2D grids.
    #[serde(default = "unit")]
    pub thickness: f64,
    #[serde(default)]
    pub non_design: NonDesign,
    pub supports: Vec<Support>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsBlock {
    pub a1: f64,
    pub a2: f64,
    pub v_target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default)]
    pub method: SolverMethod,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_eig_tol")]
    pub eig_tol: f64,
    #[serde(default = "default_krylov")]
    pub krylov_dim: usize,
    #[serde(default)]
    pub filter_radius: f64,
    #[serde(default = "default_ersatz")]
    pub ersatz_eps: f64,
    #[serde(default = "default_dv0")]
    pub dv0: f64,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            method: SolverMethod::default(),
            rel_tol: default_rel_tol(),
            max_iters: default_max_iters(),
            eig_tol: default_eig_tol(),
            krylov_dim: default_krylov(),
            filter_radius: 0.0,
            ersatz_eps: default_ersatz(),
            dv0: default_dv0(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Vtk,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
    /// Write a topology snapshot every this many accepted iterations; 0 keeps
    /// only the final one.
    #[serde(default)]
    pub export_every: usize,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: default_directory(),
            formats: default_formats(),
            export_every: 0,
        }
    }
}

fn unit() -> f64 {
    1.0
}
fn default_rel_tol() -> f64 {
    SolverConfig::default().rel_tol
}
fn default_max_iters() -> usize {
    SolverConfig::default().max_iters
}
fn default_eig_tol() -> f64 {
    EigenConfig::default().tol
}
fn default_krylov() -> usize {
    EigenConfig::default().krylov_dim
}
fn default_ersatz() -> f64 {
    SolverConfig::default().ersatz_eps
}
fn default_dv0() -> f64 {
    OptimizerSettings::default().dv0
}
fn default_directory() -> PathBuf {
    PathBuf::from("output")
}
fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Vtk, OutputFormat::Csv]
}

/// A complete problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub mesh: MeshBlock,
    pub material: Material,
    pub loads: LoadSpec,
    pub constraints: ConstraintsBlock,
    pub solver: SolverBlock,
    pub output: OutputBlock,
}

fn block<T: DeserializeOwned>(table: &toml::Table, name: &str, errors: &mut Vec<String>) -> Option<T> {
    match table.get(name) {
        None => {
            errors.push(format!("missing block [{name}]"));
            None
        }
        Some(v) => match v.clone().try_into::<T>() {
            Ok(t) => Some(t),
            Err(e) => {
                errors.push(format!("[{name}]: {}", e.to_string().trim()));
                None
            }
        },
    }
}

/// Parse and validate a problem file's text, reporting every problem found.
pub fn parse_problem_str(text: &str) -> Result<ProblemSpec> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![format!("syntax: {}", e.to_string().trim())]))?;
    let mut errors = Vec::new();
    for key in table.keys() {
        if !BLOCKS.contains(&key.as_str()) {
            errors.push(format!("unknown block [{key}]"));
        }
    }
    let mesh = block::<MeshBlock>(&table, "mesh", &mut errors);
    let material = block::<Material>(&table, "material", &mut errors);
    let loads = block::<LoadSpec>(&table, "loads", &mut errors);
    let constraints = block::<ConstraintsBlock>(&table, "constraints", &mut errors);
    let solver = block::<SolverBlock>(&table, "solver", &mut errors);
    let output = block::<OutputBlock>(&table, "output", &mut errors);
    match (mesh, material, loads, constraints, solver, output) {
        (Some(mesh), Some(material), Some(loads), Some(constraints), Some(solver), Some(output))
            if errors.is_empty() =>
        {
            let spec = ProblemSpec {
                mesh,
                material,
                loads,
                constraints,
                solver,
                output,
            };
            let problems = spec.violations();
            if problems.is_empty() {
                Ok(spec)
            } else {
                Err(Error::Config(problems))
            }
        }
        (mesh, material, _, constraints, solver, _) => {
            if let Some(m) = material {
                errors.extend(m.violations().into_iter().map(|v| format!("material: {v}")));
            }
            if let Some(c) = constraints {
                errors.extend(constraint_violations(&c));
            }
            if let Some(s) = solver {
                errors.extend(solver_violations(&s));
            }
            if let Some(m) = mesh {
                errors.extend(mesh_violations(&m));
            }
            Err(Error::Config(errors))
        }
    }
}

/// Read and validate a problem file.
pub fn parse_problem_config(path: &Path) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_problem_str(&text)
}

fn constraint_violations(c: &ConstraintsBlock) -> Vec<String> {
    let mut v = Vec::new();
    if !(c.a1 > 0.0 && c.a1.is_finite()) {
        v.push(format!("constraints.a1 = {} must be positive", c.a1));
    }
    if !(c.a2 > 0.0 && c.a2.is_finite()) {
        v.push(format!("constraints.a2 = {} must be positive", c.a2));
    }
    if !(c.v_target > 0.0 && c.v_target <= 1.0) {
        v.push(format!("constraints.v_target = {} must lie in (0, 1]", c.v_target));
    }
    v
}

fn solver_violations(s: &SolverBlock) -> Vec<String> {
    let mut v = SolverConfig {
        method: s.method,
        rel_tol: s.rel_tol,
        max_iters: s.max_iters,
        ersatz_eps: s.ersatz_eps,
    }
    .violations();
    if !(s.eig_tol > 0.0 && s.eig_tol < 1.0) {
        v.push(format!("solver.eig_tol = {} must satisfy 0 < eig_tol < 1", s.eig_tol));
    }
    if s.krylov_dim < 4 {
        v.push(format!("solver.krylov_dim = {} must be >= 4", s.krylov_dim));
    }
    if !(s.filter_radius >= 0.0 && s.filter_radius.is_finite()) {
        v.push(format!("solver.filter_radius = {} must be >= 0", s.filter_radius));
    }
    if !(s.dv0 > 0.0 && s.dv0 <= 0.05) {
        v.push(format!("solver.dv0 = {} must lie in (0, 0.05]", s.dv0));
    }
    v
}

fn mesh_violations(m: &MeshBlock) -> Vec<String> {
    let mut v = Vec::new();
    if !(m.dims.len() == 2 || m.dims.len() == 3) {
        v.push(format!("mesh.dims has {} entries; expected 2 or 3", m.dims.len()));
    }
    if m.element_size.len() != m.dims.len() {
        v.push(format!(
            "mesh.element_size has {} entries; mesh.dims has {}",
            m.element_size.len(),
            m.dims.len()
        ));
    }
    if m.dims.iter().any(|&d| d == 0) {
        v.push("mesh.dims entries must be >= 1".into());
    }
    if m.element_size.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
        v.push("mesh.element_size entries must be positive".into());
    }
    if !(m.thickness > 0.0 && m.thickness.is_finite()) {
        v.push(format!("mesh.thickness = {} must be positive", m.thickness));
    }
    if m.supports.is_empty() {
        v.push("mesh.supports is empty; at least one support is required".into());
    }
    v
}

impl ProblemSpec {
    /// Every violated range or consistency constraint.
    pub fn violations(&self) -> Vec<String> {
        let mut v = mesh_violations(&self.mesh);
        v.extend(self.material.violations().into_iter().map(|s| format!("material: {s}")));
        v.extend(constraint_violations(&self.constraints));
        v.extend(solver_violations(&self.solver));
        if self.output.formats.is_empty() {
            v.push("output.formats is empty".into());
        }
        if v.is_empty() {
            if let Err(e) = build_grid(&self.grid_spec(), &self.mesh.supports, &self.loads) {
                v.push(format!("mesh/loads: {e}"));
            }
        }
        v
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            dims: self.mesh.dims.clone(),
            element_size: self.mesh.element_size.clone(),
            thickness: self.mesh.thickness,
        }
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.dims.iter().product()
    }

    pub fn build_model(&self) -> Result<Model> {
        let (mesh, loads) = build_grid(&self.grid_spec(), &self.mesh.supports, &self.loads)?;
        Model::new(mesh, self.material, loads, self.mesh.non_design.clone())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            method: self.solver.method,
            rel_tol: self.solver.rel_tol,
            max_iters: self.solver.max_iters,
            ersatz_eps: self.solver.ersatz_eps,
        }
    }

    pub fn eigen_config(&self, seed: Option<u64>) -> EigenConfig {
        let d = EigenConfig::default();
        EigenConfig {
            tol: self.solver.eig_tol,
            krylov_dim: self.solver.krylov_dim,
            seed: seed.unwrap_or(d.seed),
            ..d
        }
    }

    pub fn optimizer_settings(&self, seed: Option<u64>) -> OptimizerSettings {
        OptimizerSettings {
            a1: self.constraints.a1,
            a2: self.constraints.a2,
            v_target: self.constraints.v_target,
            dv0: self.solver.dv0,
            filter_radius: self.solver.filter_radius,
            solver: self.solver_config(),
            eigen: self.eigen_config(seed),
            ..OptimizerSettings::default()
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidInput(format!("cannot serialize problem: {e}")))
    }

    /// The same physical problem on a grid with at most `max_elements`
    /// elements, obtained by dividing every element count by the smallest
    /// sufficient integer factor. Node ranges are mapped proportionally.
    pub fn coarsened(&self, max_elements: usize) -> ProblemSpec {
        let max_elements = max_elements.max(1);
        let dims = &self.mesh.dims;
        let reduce = |f: usize| -> Vec<usize> {
            dims.iter()
                .map(|&d| ((d as f64 / f as f64).round() as usize).max(1))
                .collect()
        };
        let mut f = 1;
        let mut new_dims = dims.clone();
        while new_dims.iter().product::<usize>() > max_elements && new_dims.iter().any(|&d| d > 1) {
            f += 1;
            new_dims = reduce(f);
        }
        if new_dims == *dims {
            return self.clone();
        }
        let mut out = self.clone();
        out.mesh.element_size = self
            .mesh
            .element_size
            .iter()
            .zip(dims.iter().zip(&new_dims))
            .map(|(&h, (&d, &n))| h * d as f64 / n as f64)
            .collect();
        let map = |sel: &NodeSelector| -> NodeSelector {
            let scale = |r: Option<[usize; 2]>, axis: usize| {
                r.map(|[lo, hi]| {
                    if axis >= dims.len() {
                        return [lo, hi];
                    }
                    let s = new_dims[axis] as f64 / dims[axis] as f64;
                    [(lo as f64 * s).round() as usize, (hi as f64 * s).round() as usize]
                })
            };
            NodeSelector {
                face: sel.face,
                i: scale(sel.i, 0),
                j: scale(sel.j, 1),
                k: scale(sel.k, 2),
            }
        };
        for s in &mut out.mesh.supports {
            s.at = map(&s.at);
        }
        for p in &mut out.loads.point {
            p.at = map(&p.at);
        }
        for p in &mut out.loads.pressure {
            p.at = map(&p.at);
        }
        out.mesh.dims = new_dims;
        out
    }
}

/// Output directory: the command-line value, else `THERMOBUCK_OUTPUT_DIR`,
/// else the problem file's setting.
pub fn resolve_output_dir(flag: Option<&Path>, spec: &ProblemSpec) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os("THERMOBUCK_OUTPUT_DIR") {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => spec.output.directory.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
[mesh]
dims = [4, 6]
element_size = [0.01, 0.01]
thickness = 0.01
supports = [{ at = { face = "y-min" } }]

[material]
E = 2e11
nu = 0.3
alpha = 1.1e-5

[loads]
delta_t = 10.0
point = [{ at = { face = "y-max", i = [2, 2] }, axis = "y", magnitude = -1000.0 }]

[constraints]
a1 = 2.5
a2 = 0.6
v_target = 0.5

[solver]

[output]
"#;

    #[test]
    fn parses_with_defaults() {
        let p = parse_problem_str(SMALL).unwrap();
        assert_eq!(p.solver, SolverBlock::default());
        assert_eq!(p.output, OutputBlock::default());
        assert_eq!(p.mesh.non_design, NonDesign::Auto);
        let m = p.build_model().unwrap();
        assert_eq!(m.n_elements(), 24);
    }

    #[test]
    fn empty_file_lists_every_block() {
        let Err(Error::Config(errs)) = parse_problem_str("") else {
            panic!("expected config error")
        };
        for b in BLOCKS {
            assert!(errs.iter().any(|e| e.contains(&format!("[{b}]"))), "{errs:?}");
        }
    }

    #[test]
    fn collects_range_errors_and_unknown_keys() {
        let text = SMALL
            .replace("nu = 0.3", "nu = 0.7")
            .replace("a2 = 0.6", "a2 = -1.0\ntypo = 1");
        let Err(Error::Config(errs)) = parse_problem_str(&text) else {
            panic!("expected config error")
        };
        assert!(errs.iter().any(|e| e.contains("nu")), "{errs:?}");
        assert!(errs.iter().any(|e| e.contains("typo")), "{errs:?}");
        let text = SMALL.replace("[output]", "[outptu]");
        let Err(Error::Config(errs)) = parse_problem_str(&text) else {
            panic!("expected config error")
        };
        assert!(errs.iter().any(|e| e.contains("unknown block [outptu]")), "{errs:?}");
        assert!(errs.iter().any(|e| e.contains("missing block [output]")), "{errs:?}");
    }

    #[test]
    fn range_error_with_valid_structure() {
        let text = SMALL.replace("v_target = 0.5", "v_target = 1.5");
        let Err(Error::Config(errs)) = parse_problem_str(&text) else {
            panic!("expected config error")
        };
        assert_eq!(errs.len(), 1, "{errs:?}");
    }

    #[test]
    fn bad_selector_is_reported() {
        let text = SMALL.replace("i = [2, 2]", "i = [9, 9]");
        assert!(matches!(parse_problem_str(&text), Err(Error::Config(_))));
    }

    #[test]
    fn round_trip() {
        let p = parse_problem_str(SMALL).unwrap();
        let text = p.to_toml_string().unwrap();
        assert_eq!(parse_problem_str(&text).unwrap(), p);
    }

    #[test]
    fn coarsening_maps_ranges() {
        let p = parse_problem_str(SMALL).unwrap();
        let c = p.coarsened(6);
        assert_eq!(c.mesh.dims, vec![2, 3]);
        assert_eq!(c.mesh.element_size, vec![0.02, 0.02]);
        assert_eq!(c.loads.point[0].at.i, Some([1, 1]));
        assert_eq!(p.coarsened(100), p);
        c.build_model().unwrap();
    }

    #[test]
    fn output_dir_precedence() {
        let p = parse_problem_str(SMALL).unwrap();
        let flag = PathBuf::from("flagged");
        assert_eq!(resolve_output_dir(Some(&flag), &p), flag);
    }
}
