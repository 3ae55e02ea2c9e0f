//! Element kernels, assembly-free operators and the static thermo-elastic solve.

mod analysis;
mod kernels;
mod operator;
mod solver;

pub use analysis::{
    compliance, recover_stress, stiffness_scale, thermal_load_vector, Analysis, StaticState,
};
pub use kernels::{ds_dsigma, elasticity, stress_tensor, thermal_strain, ElementKernels};
pub use operator::{geometric_matvec, stiffness_diagonal, stiffness_matvec};
pub(crate) use operator::gather;
pub use solver::{SolverConfig, SolverMethod, SparsePattern, StiffnessSystem};
pub(crate) use solver::{dot, norm};
