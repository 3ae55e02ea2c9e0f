use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::VoxelMesh;

/// Distance-weighted averaging over element centers within a radius, with
/// weights `radius − dist` normalized per element.
#[derive(Debug, Clone)]
pub struct RadialFilter {
    radius: f64,
    counts: [usize; 3],
    /// Lattice offsets and their weights.
    stencil: Vec<([isize; 3], f64)>,
}

impl RadialFilter {
    pub fn new(mesh: &VoxelMesh, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "filter radius {radius} must be >= 0"
            )));
        }
        let h = mesh.element_size();
        let nd = mesh.ndim();
        let mut reach = [0isize; 3];
        for a in 0..nd {
            reach[a] = (radius / h[a]).floor() as isize;
        }
        let mut stencil = Vec::new();
        for dk in -reach[2]..=reach[2] {
            for dj in -reach[1]..=reach[1] {
                for di in -reach[0]..=reach[0] {
                    let off = [di, dj, dk];
                    let dist = (0..nd)
                        .map(|a| (off[a] as f64 * h[a]).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    if dist < radius {
                        stencil.push((off, radius - dist));
                    }
                }
            }
        }
        Ok(RadialFilter {
            radius,
            counts: mesh.element_counts(),
            stencil,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Filtered copy of a per-element field.
    pub fn apply(&self, field: &[f64]) -> Vec<f64> {
        if self.stencil.len() <= 1 {
            return field.to_vec();
        }
        let [nx, ny, nz] = self.counts;
        (0..field.len())
            .into_par_iter()
            .map(|e| {
                let ijk = [e % nx, (e / nx) % ny, e / (nx * ny)];
                let mut num = 0.0;
                let mut den = 0.0;
                for (off, w) in &self.stencil {
                    let i = ijk[0] as isize + off[0];
                    let j = ijk[1] as isize + off[1];
                    let k = ijk[2] as isize + off[2];
                    if i < 0 || j < 0 || k < 0 {
                        continue;
                    }
                    let (i, j, k) = (i as usize, j as usize, k as usize);
                    if i >= nx || j >= ny || k >= nz {
                        continue;
                    }
                    num += w * field[i + nx * (j + ny * k)];
                    den += w;
                }
                num / den
            })
            .collect()
    }
}
