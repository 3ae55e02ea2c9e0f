//! Dense-assembly oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use thermobuck::model::{
    build_grid, Axis, Face, GridSpec, LoadSpec, Material, Model, NodeSelector, NonDesign,
    PointLoad, Support,
};

/// Grid of 1 cm cells clamped at y-min with 100 kN of compression on y-max.
pub fn cube(dims: &[usize], delta_t: f64) -> Model {
    let grid = GridSpec {
        dims: dims.to_vec(),
        element_size: vec![0.01; dims.len()],
        thickness: 0.01,
    };
    let loads = LoadSpec {
        delta_t,
        point: vec![PointLoad {
            at: NodeSelector::face(Face::YMax),
            axis: Axis::Y,
            magnitude: -1e5,
        }],
        pressure: vec![],
    };
    let (mesh, lc) = build_grid(
        &grid,
        &[Support::clamp(NodeSelector::face(Face::YMin))],
        &loads,
    )
    .unwrap();
    Model::new(mesh, Material::steel(), lc, NonDesign::None).unwrap()
}


/// Dense K from the element matrices; constrained rows/columns replaced by identity.
pub fn dense_k(model: &Model, scale: &[f64]) -> DMatrix<f64> {
    let mesh = model.mesh();
    let n = mesh.n_dofs();
    let ke = &model.kernels().k_e;
    let mut k = DMatrix::zeros(n, n);
    for e in 0..mesh.n_elements() {
        let dofs = mesh.element_dofs(e);
        for (a, &i) in dofs.iter().enumerate() {
            for (b, &j) in dofs.iter().enumerate() {
                k[(i, j)] += scale[e] * ke[(a, b)];
            }
        }
    }
    for &d in mesh.fixed_dofs() {
        k.row_mut(d).fill(0.0);
        k.column_mut(d).fill(0.0);
        k[(d, d)] = 1.0;
    }
    k
}

pub fn dense_ksigma(model: &Model, sigma: &[f64]) -> DMatrix<f64> {
    let mesh = model.mesh();
    let n = mesh.n_dofs();
    let kern = model.kernels();
    let ns = kern.stress_components();
    let mut k = DMatrix::zeros(n, n);
    for e in 0..mesh.n_elements() {
        let ks = kern.geometric_stiffness_from_g(&sigma[e * ns..(e + 1) * ns]);
        let dofs = mesh.element_dofs(e);
        for (a, &i) in dofs.iter().enumerate() {
            for (b, &j) in dofs.iter().enumerate() {
                k[(i, j)] += ks[(a, b)];
            }
        }
    }
    for &d in mesh.fixed_dofs() {
        k.row_mut(d).fill(0.0);
        k.column_mut(d).fill(0.0);
    }
    k
}

/// Smallest positive λ of `K v = λ (−Kσ) v` on the free DOFs by a dense
/// symmetric reduction with the Cholesky factor of K.
pub fn dense_lambda(model: &Model, scale: &[f64], sigma: &[f64]) -> f64 {
    let mesh = model.mesh();
    let free: Vec<usize> = (0..mesh.n_dofs()).filter(|&d| !mesh.is_fixed(d)).collect();
    let k = dense_k(model, scale).select_rows(&free).select_columns(&free);
    let ks = dense_ksigma(model, sigma).select_rows(&free).select_columns(&free);
    let l = k.cholesky().unwrap().l();
    let linv = l.clone().try_inverse().unwrap();
    let m = &linv * (-ks) * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let theta = SymmetricEigen::new(m).eigenvalues.max();
    assert!(theta > 0.0);
    1.0 / theta
}
