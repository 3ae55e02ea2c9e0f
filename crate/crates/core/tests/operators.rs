mod common;

use common::{cube, dense_k, dense_ksigma, dense_lambda};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermobuck::buckling::{solve_buckling, EigenConfig};
use thermobuck::fem::{geometric_matvec, stiffness_matvec, Analysis, SolverConfig};

fn occupancy(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| if rng.random_bool(0.8) { 1.0 } else { 0.0 })
        .collect()
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}

#[test]
fn matrix_free_products_match_dense_assembly() {
    for (dims, seed) in [(vec![3usize, 3, 3], 1u64), (vec![2, 3], 2), (vec![3, 2, 2], 3)] {
        let model = cube(&dims, 150.0);
        let n = model.n_dofs();
        let occ = occupancy(model.n_elements(), seed);
        let a = Analysis::new(&model, occ, &SolverConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 10);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

        let mut y = vec![0.0; n];
        stiffness_matvec(&model, a.system.scale(), &x, &mut y).unwrap();
        let dense = dense_k(&model, a.system.scale()) * DVector::from_column_slice(&x);
        assert!(rel(&y, dense.as_slice()) < 1e-12, "K on {dims:?}");

        geometric_matvec(&model, &a.state.sigma, &x, &mut y).unwrap();
        let dense = dense_ksigma(&model, &a.state.sigma) * DVector::from_column_slice(&x);
        assert!(rel(&y, dense.as_slice()) < 1e-12, "Ksigma on {dims:?}");
    }
}

#[test]
fn eigenvalue_matches_dense_generalized_solve() {
    for (dims, dt) in [(vec![3usize, 3, 3], 0.0), (vec![3, 3, 3], 150.0), (vec![2, 3], 150.0)] {
        let model = cube(&dims, dt);
        let a = Analysis::new(&model, vec![1.0; model.n_elements()], &SolverConfig::default())
            .unwrap();
        let b = solve_buckling(&a, &EigenConfig::default(), None).unwrap();
        let oracle = dense_lambda(&model, a.system.scale(), &a.state.sigma);
        assert!(
            ((b.lambda - oracle) / oracle).abs() < 1e-8,
            "{dims:?} dt={dt}: {} vs {oracle}",
            b.lambda
        );
    }
}

#[test]
fn eigenvalue_with_voids_matches_dense() {
    let model = cube(&[3, 3, 3], 150.0);
    let mut occ = vec![1.0; model.n_elements()];
    occ[13] = 0.0;
    occ[4] = 0.0;
    let a = Analysis::new(&model, occ, &SolverConfig::default()).unwrap();
    let b = solve_buckling(&a, &EigenConfig::default(), None).unwrap();
    let oracle = dense_lambda(&model, a.system.scale(), &a.state.sigma);
    assert!(((b.lambda - oracle) / oracle).abs() < 1e-8);
}

#[test]
fn energy_and_work_agree() {
    let model = cube(&[2, 3, 2], 150.0);
    let a = Analysis::new(&model, vec![1.0; model.n_elements()], &SolverConfig::default()).unwrap();
    let e = a.energy_norm().unwrap();
    assert!(((a.state.compliance - e) / e).abs() < 1e-8);
}
