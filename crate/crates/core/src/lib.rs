//! Volume-minimizing topology optimization on voxel grids under thermo-elastic
//! compliance and linear buckling constraints.
//!
//! The pipeline is: [`model`] builds the grid, loads and supports; [`fem`]
//! solves the static thermo-elastic problem; [`buckling`] finds the critical
//! load factor; [`sensitivity`] computes per-element topological derivatives;
//! [`optimizer`] evolves the topology; [`io`] reads problem files and writes
//! results.

pub mod buckling;
pub mod error;
pub mod fem;
pub mod io;
pub mod model;
pub mod optimizer;
pub mod sensitivity;

pub use error::{Error, Result};
