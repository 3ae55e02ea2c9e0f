//! Problem files, shipped fixtures and result export.

mod config;
mod fixtures;
mod history;
mod vtk;

pub use config::{
    parse_problem_config, parse_problem_str, resolve_output_dir, ConstraintsBlock, MeshBlock,
    OutputBlock, OutputFormat, ProblemSpec, SolverBlock,
};
pub use fixtures::{fixture, fixture_text, load_problem, FIXTURES, LARGE_FIXTURES};
pub use history::{export_history, read_history};
pub use vtk::{
    export_vtk, split_components, stress_component_names, write_vtk, FieldLocation, VtkField,
};
