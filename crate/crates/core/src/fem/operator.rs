//! Assembly-free global operators on the voxel grid.
//!
//! Element products are computed independently (in parallel) into a buffer and
//! then gathered per node in a fixed order, so results are bit-identical for
//! any thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Model, VoxelMesh, HEX_CORNERS};

/// Run `f(e, x_e, y_e)` for every element and sum the local results into `y`.
/// `x` is gathered with constrained DOFs zeroed.
pub(crate) fn element_apply<F>(mesh: &VoxelMesh, x: &[f64], y: &mut [f64], f: F)
where
    F: Fn(usize, &[f64], &mut [f64]) + Sync,
{
    let ne = mesh.dimension().element_dofs();
    let n_el = mesh.n_elements();
    let mut buf = vec![0.0; n_el * ne];
    let fixed = mesh.fixed_mask();
    buf.par_chunks_mut(ne).enumerate().for_each(|(e, out)| {
        let mut dofs = [0usize; 24];
        let dofs = &mut dofs[..ne];
        mesh.element_dofs_into(e, dofs);
        let mut xe = [0.0; 24];
        let xe = &mut xe[..ne];
        for (v, &d) in xe.iter_mut().zip(dofs.iter()) {
            *v = if fixed[d] { 0.0 } else { x[d] };
        }
        f(e, xe, out);
    });
    gather(mesh, &buf, y);
}

/// Sum per-element local vectors (`n_el × element_dofs`) into a global vector.
pub(crate) fn gather(mesh: &VoxelMesh, buf: &[f64], y: &mut [f64]) {
    let nd = mesh.ndim();
    let ne = mesh.dimension().element_dofs();
    let npe = mesh.dimension().nodes_per_element();
    let counts = mesh.element_counts();
    y.par_chunks_mut(nd).enumerate().for_each(|(node, yn)| {
        yn.iter_mut().for_each(|v| *v = 0.0);
        let ijk = mesh.node_ijk(node);
        for (slot, c) in HEX_CORNERS.iter().take(npe).enumerate() {
            let mut ok = true;
            let mut eijk = [0usize; 3];
            for a in 0..3 {
                if ijk[a] < c[a] || ijk[a] - c[a] >= counts[a] {
                    ok = false;
                    break;
                }
                eijk[a] = ijk[a] - c[a];
            }
            if !ok {
                continue;
            }
            let e = mesh.element_index(eijk[0], eijk[1], eijk[2]);
            let base = e * ne + slot * nd;
            for (cc, v) in yn.iter_mut().enumerate() {
                *v += buf[base + cc];
            }
        }
    });
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `y = K x` for per-element stiffness scales `scale`, with constrained DOFs
/// eliminated by zero rows/columns and a unit diagonal.
pub fn stiffness_matvec(model: &Model, scale: &[f64], x: &[f64], y: &mut [f64]) -> Result<()> {
    let mesh = model.mesh();
    check_len(mesh.n_dofs(), x.len())?;
    check_len(mesh.n_dofs(), y.len())?;
    check_len(mesh.n_elements(), scale.len())?;
    let k = model.kernels();
    element_apply(mesh, x, y, |e, xe, ye| {
        k.k_apply(xe, ye);
        let s = scale[e];
        ye.iter_mut().for_each(|v| *v *= s);
    });
    for &d in mesh.fixed_dofs() {
        y[d] = x[d];
    }
    Ok(())
}

/// `y = Kσ x` for per-element center stresses (`n_el × stress_components`);
/// constrained rows and columns are zero.
pub fn geometric_matvec(model: &Model, sigma: &[f64], x: &[f64], y: &mut [f64]) -> Result<()> {
    let mesh = model.mesh();
    let ns = mesh.dimension().stress_components();
    check_len(mesh.n_dofs(), x.len())?;
    check_len(mesh.n_dofs(), y.len())?;
    check_len(mesh.n_elements() * ns, sigma.len())?;
    let k = model.kernels();
    element_apply(mesh, x, y, |e, xe, ye| {
        let s = &sigma[e * ns..(e + 1) * ns];
        if s.iter().all(|v| *v == 0.0) {
            ye.iter_mut().for_each(|v| *v = 0.0);
        } else {
            k.ksigma_apply(s, xe, ye);
        }
    });
    for &d in mesh.fixed_dofs() {
        y[d] = 0.0;
    }
    Ok(())
}

/// Diagonal of K (unit on constrained DOFs), built element by element.
pub fn stiffness_diagonal(model: &Model, scale: &[f64]) -> Vec<f64> {
    let mesh = model.mesh();
    let ne = mesh.dimension().element_dofs();
    let k = model.kernels();
    let mut buf = vec![0.0; mesh.n_elements() * ne];
    buf.par_chunks_mut(ne).enumerate().for_each(|(e, out)| {
        for (a, o) in out.iter_mut().enumerate() {
            *o = scale[e] * k.k_e[(a, a)];
        }
    });
    let mut diag = vec![0.0; mesh.n_dofs()];
    gather(mesh, &buf, &mut diag);
    for &d in mesh.fixed_dofs() {
        diag[d] = 1.0;
    }
    diag
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_grid, GridSpec, LoadSpec, Material, NonDesign};

    fn free_model() -> Model {
        let g = GridSpec {
            dims: vec![2, 3, 2],
            element_size: vec![0.1, 0.2, 0.15],
            thickness: 1.0,
        };
        let (mesh, lc) = build_grid(&g, &[], &LoadSpec::default()).unwrap();
        Model::new(mesh, Material::steel(), lc, NonDesign::None).unwrap()
    }

    #[test]
    fn zero_in_zero_out() {
        let m = free_model();
        let x = vec![0.0; m.n_dofs()];
        let mut y = vec![1.0; m.n_dofs()];
        stiffness_matvec(&m, &vec![1.0; m.n_elements()], &x, &mut y).unwrap();
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rigid_translation_in_null_space() {
        let m = free_model();
        let x: Vec<f64> = (0..m.n_dofs()).map(|i| [1.0, -2.0, 0.5][i % 3]).collect();
        let mut y = vec![0.0; m.n_dofs()];
        stiffness_matvec(&m, &vec![1.0; m.n_elements()], &x, &mut y).unwrap();
        let kmax = m.kernels().k_e.amax();
        assert!(y.iter().all(|v| v.abs() < 1e-10 * kmax));
    }

    #[test]
    fn length_mismatch_is_reported() {
        let m = free_model();
        let mut y = vec![0.0; m.n_dofs()];
        let err = stiffness_matvec(&m, &vec![1.0; m.n_elements()], &[0.0; 3], &mut y);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let err = geometric_matvec(&m, &[0.0; 2], &vec![0.0; m.n_dofs()], &mut y);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }
}
