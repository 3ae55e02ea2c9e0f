use crate::buckling::{solve_buckling, EigenConfig};
use crate::error::{Error, Result};
use crate::fem::{Analysis, SolverConfig};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdQuantity {
    Lambda,
    Compliance,
}

/// Central difference of λ or J under scaling element `e`'s stiffness,
/// thermal load and stress by `1 ± h`. Re-solves with tightened tolerances.
#[allow(clippy::too_many_arguments)]
pub fn finite_difference(
    model: &Model,
    occupancy: &[f64],
    quantity: FdQuantity,
    e: usize,
    h: f64,
    solver: &SolverConfig,
    eigen: &EigenConfig,
    start: Option<&[f64]>,
) -> Result<f64> {
    if !(1e-6..=1e-2).contains(&h) {
        return Err(Error::InvalidInput(format!(
            "finite-difference step {h} outside [1e-6, 1e-2]"
        )));
    }
    if e >= occupancy.len() {
        return Err(Error::InvalidInput(format!("element {e} out of range")));
    }
    if occupancy[e] <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "element {e} is void; presence differences need a present element"
        )));
    }
    let solver = SolverConfig {
        rel_tol: solver.rel_tol.min(1e-10),
        ..*solver
    };
    let eigen = EigenConfig {
        tol: eigen.tol.min(1e-10),
        ..*eigen
    };
    let eval = |sign: f64| -> Result<f64> {
        let mut occ = occupancy.to_vec();
        occ[e] *= 1.0 + sign * h;
        let a = Analysis::new(model, occ, &solver)?;
        match quantity {
            FdQuantity::Compliance => Ok(a.state.compliance),
            FdQuantity::Lambda => Ok(solve_buckling(&a, &eigen, start)?.lambda),
        }
    };
    let plus = eval(1.0)?;
    let minus = eval(-1.0)?;
    Ok((plus - minus) / (2.0 * h * occupancy[e]))
}
