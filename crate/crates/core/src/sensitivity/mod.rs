//! Per-element topological sensitivities of the buckling load factor and the
//! compliance, a finite-difference oracle and radial filtering.
//!
//! Derivatives are taken with respect to element presence `x_e` at the current
//! design: `∂K/∂x_e = k_e`, `∂f/∂x_e = f_th,e` and `∂σ_e/∂x_e = D(B0 d_e − ε_th)`
//! for present elements. Void elements keep their ersatz state; their stress is
//! identically zero, so only the stiffness and thermal-load terms act on them.

mod buckling;
mod fd;
mod filter;

pub use buckling::{
    adjoint_mu, adjoint_w, ksigma_mode_contraction, lambda_sensitivity_adjoint,
    lambda_sensitivity_adjoint_with, lambda_sensitivity_direct, mode_contractions,
    stress_sensitivity_direct, AdjointVectors,
};
pub use fd::{finite_difference, FdQuantity};
pub use filter::RadialFilter;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::fem::Analysis;
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivityKind {
    BucklingDirect,
    BucklingAdjoint,
    Compliance,
    Combined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityField {
    pub values: Vec<f64>,
    pub kind: SensitivityKind,
    pub filtered: bool,
}

impl SensitivityField {
    pub fn new(values: Vec<f64>, kind: SensitivityKind) -> Self {
        SensitivityField {
            values,
            kind,
            filtered: false,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `∂K/∂x_e`: the unscaled element stiffness, identical for every element.
pub fn dk_per_element(model: &Model) -> &DMatrix<f64> {
    &model.kernels().k_e
}

/// Gather element `e`'s entries of a global DOF vector (constrained DOFs as zero).
pub(crate) fn gather_element(model: &Model, x: &[f64], e: usize, out: &mut [f64]) {
    let mesh = model.mesh();
    let ne = out.len();
    let mut dofs = [0usize; 24];
    mesh.element_dofs_into(e, &mut dofs[..ne]);
    for (o, &d) in out.iter_mut().zip(&dofs[..ne]) {
        *o = if mesh.is_fixed(d) { 0.0 } else { x[d] };
    }
}

/// `J′_e = 2 d_eᵀ f_th,e − d_eᵀ k_e d_e`.
pub fn compliance_sensitivity(analysis: &Analysis) -> SensitivityField {
    let model = analysis.model();
    let k = model.kernels();
    let fe = model.element_thermal_load();
    let ne = k.element_dofs();
    let d = &analysis.state.d;
    let values = (0..model.n_elements())
        .into_par_iter()
        .map(|e| {
            let mut de = [0.0; 24];
            let mut kd = [0.0; 24];
            gather_element(model, d, e, &mut de[..ne]);
            k.k_apply(&de[..ne], &mut kd[..ne]);
            let mut s = 0.0;
            for a in 0..ne {
                s += 2.0 * de[a] * fe[a] - de[a] * kd[a];
            }
            s
        })
        .collect();
    SensitivityField::new(values, SensitivityKind::Compliance)
}

/// `max_e |a_e − b_e| / max_e |a_e|`.
pub fn max_relative_discrepancy(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
