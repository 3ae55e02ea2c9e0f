use rayon::prelude::*;

use super::{gather_element, SensitivityField, SensitivityKind};
use crate::buckling::BucklingSolution;
use crate::error::{Error, Result};
use crate::fem::{gather, norm, Analysis};
use crate::model::Model;

/// Adjoint variables: `mu` per element and stress component, `w` per DOF.
#[derive(Debug, Clone)]
pub struct AdjointVectors {
    pub mu: Vec<f64>,
    pub w: Vec<f64>,
}

/// `v_eᵀ (∂Kσ/∂σ_ek) v_e` for every stress component of element `e`.
pub fn ksigma_mode_contraction(model: &Model, v: &[f64], e: usize) -> Vec<f64> {
    let k = model.kernels();
    let ne = k.element_dofs();
    let mut ve = [0.0; 24];
    gather_element(model, v, e, &mut ve[..ne]);
    let mut out = vec![0.0; k.stress_components()];
    k.mode_contraction(&ve[..ne], &mut out);
    out
}

/// Contractions for all elements, flattened (`n_el × stress_components`).
pub fn mode_contractions(model: &Model, v: &[f64]) -> Vec<f64> {
    let k = model.kernels();
    let ns = k.stress_components();
    let ne = k.element_dofs();
    let mut out = vec![0.0; model.n_elements() * ns];
    out.par_chunks_mut(ns).enumerate().for_each(|(e, c)| {
        let mut ve = [0.0; 24];
        gather_element(model, v, e, &mut ve[..ne]);
        k.mode_contraction(&ve[..ne], c);
    });
    out
}

fn denominator(solution: &BucklingSolution) -> Result<f64> {
    let den = solution.vt_ksigma_v;
    let vn = norm(&solution.v);
    if !(den.abs() >= 1e-12 * vn * vn) {
        return Err(Error::DegenerateDenominator { value: den });
    }
    Ok(den)
}

/// Element-local residual of the presence derivative of the equilibrium,
/// `f_th,e − k_e d_e`.
fn load_derivative(analysis: &Analysis, e: usize, out: &mut [f64]) {
    let model = analysis.model();
    let k = model.kernels();
    let ne = out.len();
    let mut de = [0.0; 24];
    gather_element(model, &analysis.state.d, e, &mut de[..ne]);
    k.k_apply(&de[..ne], out);
    for (o, f) in out.iter_mut().zip(model.element_thermal_load()) {
        *o = f - *o;
    }
}

/// `D (B0 d_e − ε_th)` for element e.
fn presence_stress(analysis: &Analysis, e: usize, out: &mut [f64]) {
    let model = analysis.model();
    let k = model.kernels();
    let ne = k.element_dofs();
    let mut de = [0.0; 24];
    gather_element(model, &analysis.state.d, e, &mut de[..ne]);
    k.center_stress(&de[..ne], model.thermal_strain(), out);
}

/// Stress sensitivities of every element with respect to `x_e`
/// (`n_el × stress_components`), from one auxiliary solve
/// `K d′ = f_th,e − k_e d_e`.
pub fn stress_sensitivity_direct(analysis: &Analysis, e: usize) -> Result<Vec<f64>> {
    let model = analysis.model();
    let mesh = model.mesh();
    let k = model.kernels();
    let ne = k.element_dofs();
    let ns = k.stress_components();
    if e >= mesh.n_elements() {
        return Err(Error::InvalidInput(format!("element {e} out of range")));
    }
    let mut r = [0.0; 24];
    load_derivative(analysis, e, &mut r[..ne]);
    let mut rhs = vec![0.0; mesh.n_dofs()];
    let mut dofs = [0usize; 24];
    mesh.element_dofs_into(e, &mut dofs[..ne]);
    for a in 0..ne {
        rhs[dofs[a]] += r[a];
    }
    let dprime = analysis.system.solve(&rhs)?;
    let mut out = vec![0.0; mesh.n_elements() * ns];
    let mut de = [0.0; 24];
    for (j, s) in out.chunks_mut(ns).enumerate() {
        let x = analysis.occupancy[j];
        if x == 0.0 {
            continue;
        }
        gather_element(model, &dprime, j, &mut de[..ne]);
        for (i, si) in s.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..ne {
                acc += k.db0[(i, a)] * de[a];
            }
            *si = x * acc;
        }
    }
    if analysis.occupancy[e] != 0.0 {
        let mut own = [0.0; 6];
        presence_stress(analysis, e, &mut own[..ns]);
        for (s, o) in out[e * ns..(e + 1) * ns].iter_mut().zip(&own[..ns]) {
            *s += o;
        }
    }
    Ok(out)
}

/// `λ′_e = −vᵀ(K′ + λKσ′)v / (vᵀKσv)` with one auxiliary solve per element.
pub fn lambda_sensitivity_direct(
    analysis: &Analysis,
    solution: &BucklingSolution,
) -> Result<SensitivityField> {
    let den = denominator(solution)?;
    let model = analysis.model();
    let k = model.kernels();
    let ne = k.element_dofs();
    let lam = solution.lambda;
    let c = mode_contractions(model, &solution.v);
    let values = (0..model.n_elements())
        .into_par_iter()
        .map(|e| -> Result<f64> {
            let sp = stress_sensitivity_direct(analysis, e)?;
            let mut ve = [0.0; 24];
            let mut kv = [0.0; 24];
            gather_element(model, &solution.v, e, &mut ve[..ne]);
            k.k_apply(&ve[..ne], &mut kv[..ne]);
            let vkv: f64 = ve[..ne].iter().zip(&kv[..ne]).map(|(a, b)| a * b).sum();
            let vksv: f64 = c.iter().zip(&sp).map(|(a, b)| a * b).sum();
            Ok(-(vkv + lam * vksv) / den)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SensitivityField::new(values, SensitivityKind::BucklingDirect))
}

/// `μ_e = −λ v_eᵀ(∂Kσ/∂σ_e)v_e` for present elements, zero for void.
pub fn adjoint_mu(analysis: &Analysis, solution: &BucklingSolution) -> Vec<f64> {
    let model = analysis.model();
    let ns = model.kernels().stress_components();
    let mut mu = mode_contractions(model, &solution.v);
    for (e, m) in mu.chunks_mut(ns).enumerate() {
        if analysis.occupancy[e] == 0.0 {
            m.iter_mut().for_each(|v| *v = 0.0);
        } else {
            m.iter_mut().for_each(|v| *v *= -solution.lambda);
        }
    }
    mu
}

/// Solve `K w = −Yᵀμ` with `Yᵀμ = Σ_e x_e (D B0)ᵀ μ_e`.
pub fn adjoint_w(analysis: &Analysis, mu: &[f64]) -> Result<Vec<f64>> {
    let model = analysis.model();
    let mesh = model.mesh();
    let k = model.kernels();
    let ns = k.stress_components();
    let ne = k.element_dofs();
    if mu.len() != mesh.n_elements() * ns {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_elements() * ns,
            got: mu.len(),
        });
    }
    let mut buf = vec![0.0; mesh.n_elements() * ne];
    buf.par_chunks_mut(ne).enumerate().for_each(|(e, out)| {
        let x = analysis.occupancy[e];
        let m = &mu[e * ns..(e + 1) * ns];
        for (a, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for i in 0..ns {
                s += k.db0[(i, a)] * m[i];
            }
            *o = -x * s;
        }
    });
    let mut rhs = vec![0.0; mesh.n_dofs()];
    gather(mesh, &buf, &mut rhs);
    analysis.system.solve(&rhs)
}

/// Adjoint λ′ with two global solves in total (static + one adjoint).
pub fn lambda_sensitivity_adjoint(
    analysis: &Analysis,
    solution: &BucklingSolution,
) -> Result<(SensitivityField, AdjointVectors)> {
    let mu = adjoint_mu(analysis, solution);
    let w = adjoint_w(analysis, &mu)?;
    let adj = AdjointVectors { mu, w };
    let field = lambda_sensitivity_adjoint_with(analysis, solution, &adj)?;
    Ok((field, adj))
}

/// `λ′_e = −(v_eᵀk_e v_e + μ_eᵀDε_th − μ_eᵀDB0 d_e + w_eᵀf_th,e − w_eᵀk_e d_e) / (vᵀKσv)`.
pub fn lambda_sensitivity_adjoint_with(
    analysis: &Analysis,
    solution: &BucklingSolution,
    adj: &AdjointVectors,
) -> Result<SensitivityField> {
    let den = denominator(solution)?;
    let model = analysis.model();
    let k = model.kernels();
    let ne = k.element_dofs();
    let ns = k.stress_components();
    let values = (0..model.n_elements())
        .into_par_iter()
        .map(|e| {
            let mut ve = [0.0; 24];
            let mut kv = [0.0; 24];
            let mut we = [0.0; 24];
            let mut r = [0.0; 24];
            let mut own = [0.0; 6];
            gather_element(model, &solution.v, e, &mut ve[..ne]);
            gather_element(model, &adj.w, e, &mut we[..ne]);
            k.k_apply(&ve[..ne], &mut kv[..ne]);
            load_derivative(analysis, e, &mut r[..ne]);
            presence_stress(analysis, e, &mut own[..ns]);
            let vkv: f64 = ve[..ne].iter().zip(&kv[..ne]).map(|(a, b)| a * b).sum();
            let wr: f64 = we[..ne].iter().zip(&r[..ne]).map(|(a, b)| a * b).sum();
            let mu = &adj.mu[e * ns..(e + 1) * ns];
            // μ_eᵀ D ε_th − μ_eᵀ D B0 d_e = −μ_eᵀ D (B0 d_e − ε_th)
            let mu_term: f64 = -mu.iter().zip(&own[..ns]).map(|(a, b)| a * b).sum::<f64>();
            -(vkv + mu_term + wr) / den
        })
        .collect();
    Ok(SensitivityField::new(values, SensitivityKind::BucklingAdjoint))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::buckling::{solve_buckling, EigenConfig};
    use crate::fem::SolverConfig;
    use crate::model::{
        build_grid, Axis, Face, GridSpec, LoadSpec, Material, NodeSelector, NonDesign, PointLoad,
        Support,
    };
    use crate::sensitivity::max_relative_discrepancy;

    fn strip(delta_t: f64) -> Model {
        let g = GridSpec {
            dims: vec![2, 8],
            element_size: vec![0.01, 0.01],
            thickness: 0.01,
        };
        let loads = LoadSpec {
            delta_t,
            point: vec![PointLoad {
                at: NodeSelector::face(Face::YMax),
                axis: Axis::Y,
                magnitude: -1e4,
            }],
            pressure: vec![],
        };
        let (mesh, lc) = build_grid(
            &g,
            &[Support::clamp(NodeSelector::face(Face::YMin))],
            &loads,
        )
        .unwrap();
        Model::new(mesh, Material::steel(), lc, NonDesign::None).unwrap()
    }

    #[test]
    fn direct_equals_adjoint_with_a_hole() {
        let m = strip(150.0);
        let mut occ = vec![1.0; m.n_elements()];
        occ[7] = 0.0;
        let a = Analysis::new(&m, occ, &SolverConfig::default()).unwrap();
        let b = solve_buckling(&a, &EigenConfig::default(), None).unwrap();
        let before = a.system.solve_count();
        let (adj, vecs) = lambda_sensitivity_adjoint(&a, &b).unwrap();
        assert_eq!(a.system.solve_count() - before, 1);
        let before = a.system.solve_count();
        let dir = lambda_sensitivity_direct(&a, &b).unwrap();
        assert_eq!(a.system.solve_count() - before, m.n_elements());
        assert!(max_relative_discrepancy(&dir.values, &adj.values) < 1e-10);
        assert!(vecs.mu[7 * 3..8 * 3].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_mu_gives_zero_w() {
        let m = strip(0.0);
        let a = Analysis::new(&m, vec![1.0; m.n_elements()], &SolverConfig::default()).unwrap();
        let w = adjoint_w(&a, &vec![0.0; m.n_elements() * 3]).unwrap();
        assert!(w.iter().all(|v| *v == 0.0));
    }
}
