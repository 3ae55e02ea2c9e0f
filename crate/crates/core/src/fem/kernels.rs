use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Dimension, Material, VoxelMesh, HEX_CORNERS};

/// Stress index pairs (row, col) of the symmetric stress tensor in storage order.
const PAIRS_3D: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
const PAIRS_2D: [(usize, usize); 3] = [(0, 0), (1, 1), (0, 1)];

fn stress_pairs(dim: Dimension) -> &'static [(usize, usize)] {
    match dim {
        Dimension::Two => &PAIRS_2D,
        Dimension::Three => &PAIRS_3D,
    }
}

/// Reference-element operators shared by every element of a voxel grid.
///
/// Dense matrices are stored row-major. The stiffness uses full 2-point Gauss
/// quadrature with statically condensed incompatible (bubble) modes, which
/// removes the parasitic shear of the bilinear/trilinear element in bending.
/// The bubble strains vanish at the element center and integrate to zero, so
/// center stresses and thermal loads involve only the nodal displacements.
#[derive(Debug, Clone)]
pub struct ElementKernels {
    pub dim: Dimension,
    /// Elasticity matrix (ns × ns).
    pub d: DMatrix<f64>,
    /// Condensed element stiffness (nd × nd).
    pub k_e: DMatrix<f64>,
    /// Strain-displacement matrices at the Gauss points (ns × nd each).
    pub b_gauss: Vec<DMatrix<f64>>,
    /// Gradient matrices at the Gauss points (ndim² × nd each).
    pub g_gauss: Vec<DMatrix<f64>>,
    /// Integration weight × Jacobian determinant (× thickness in 2D) per Gauss point.
    pub weights: Vec<f64>,
    /// Strain-displacement matrix at the element center.
    pub b0: DMatrix<f64>,
    /// `D · B0`, the center stress-recovery operator.
    pub db0: DMatrix<f64>,
    /// Nodal blocks `H_k[a][b] = ∫ ∇N_aᵀ (∂s/∂σ_k) ∇N_b` (nn × nn each);
    /// the geometric stiffness is `(Σ_k σ_k H_k) ⊗ I`.
    pub h_k: Vec<DMatrix<f64>>,
    k_flat: Vec<f64>,
    h_flat: Vec<Vec<f64>>,
}

impl ElementKernels {
    pub fn new(mesh: &VoxelMesh, material: &Material) -> Self {
        let dim = mesh.dimension();
        let nd_sp = dim.ndim();
        let nn = dim.nodes_per_element();
        let ne = dim.element_dofs();
        let ns = dim.stress_components();
        let size = mesh.element_size();
        let half: Vec<f64> = (0..nd_sp).map(|a| size[a] / 2.0).collect();
        let t = mesh.thickness();
        let d = elasticity(dim, material);

        let gp = 1.0 / 3f64.sqrt();
        let n_bubble = nd_sp * nd_sp;
        let mut k_cc = DMatrix::zeros(ne, ne);
        let mut k_ci = DMatrix::zeros(ne, n_bubble);
        let mut k_ii = DMatrix::zeros(n_bubble, n_bubble);
        let mut b_gauss = Vec::new();
        let mut g_gauss = Vec::new();
        let mut weights = Vec::new();
        let mut h_k = vec![DMatrix::zeros(nn, nn); ns];
        let pairs = stress_pairs(dim);

        let n_gauss = 1usize << nd_sp;
        for g in 0..n_gauss {
            let xi: Vec<f64> = (0..nd_sp)
                .map(|a| if (g >> a) & 1 == 1 { gp } else { -gp })
                .collect();
            let grads = shape_gradients(dim, &xi, &half);
            let w = match dim {
                Dimension::Two => half[0] * half[1] * t,
                Dimension::Three => half[0] * half[1] * half[2],
            };
            let b = strain_matrix(dim, &grads);
            let bi = bubble_strain_matrix(dim, &xi, &half);
            let db = &d * &b;
            k_cc += b.transpose() * &db * w;
            k_ci += db.transpose() * &bi * w;
            k_ii += bi.transpose() * &d * &bi * w;
            for (k, &(r, c)) in pairs.iter().enumerate() {
                for a in 0..nn {
                    for bb in 0..nn {
                        let mut v = grads[a][r] * grads[bb][c];
                        if r != c {
                            v += grads[a][c] * grads[bb][r];
                        }
                        h_k[k][(a, bb)] += v * w;
                    }
                }
            }
            g_gauss.push(gradient_matrix(dim, &grads));
            b_gauss.push(b);
            weights.push(w);
        }
        let k_ii_inv = k_ii
            .clone()
            .cholesky()
            .expect("bubble stiffness is positive definite")
            .inverse();
        let mut k_e = k_cc - &k_ci * k_ii_inv * k_ci.transpose();
        k_e = (&k_e + k_e.transpose()) * 0.5;

        let center = vec![0.0; nd_sp];
        let b0 = strain_matrix(dim, &shape_gradients(dim, &center, &half));
        let db0 = &d * &b0;
        let k_flat = row_major(&k_e);
        let h_flat = h_k.iter().map(row_major).collect();
        ElementKernels {
            dim,
            d,
            k_e,
            b_gauss,
            g_gauss,
            weights,
            b0,
            db0,
            h_k,
            k_flat,
            h_flat,
        }
    }

    pub fn element_dofs(&self) -> usize {
        self.dim.element_dofs()
    }

    pub fn stress_components(&self) -> usize {
        self.dim.stress_components()
    }

    /// Row-major element stiffness.
    pub fn k_flat(&self) -> &[f64] {
        &self.k_flat
    }

    /// `y = k_e x` on element-local vectors.
    #[inline]
    pub fn k_apply(&self, x: &[f64], y: &mut [f64]) {
        let n = x.len();
        for (r, yr) in y.iter_mut().enumerate() {
            let row = &self.k_flat[r * n..(r + 1) * n];
            *yr = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// Nodal block `Σ_k σ_k H_k`, row-major nn × nn.
    pub fn stress_block(&self, sigma: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (s, h) in sigma.iter().zip(&self.h_flat) {
            if *s != 0.0 {
                for (o, hv) in out.iter_mut().zip(h) {
                    *o += s * hv;
                }
            }
        }
    }

    /// `y = kσ_e(σ) x` on element-local vectors.
    pub fn ksigma_apply(&self, sigma: &[f64], x: &[f64], y: &mut [f64]) {
        let nn = self.dim.nodes_per_element();
        let mut hs = [0.0; 64];
        let hs = &mut hs[..nn * nn];
        self.stress_block(sigma, hs);
        apply_kron(hs, self.dim.ndim(), x, y);
    }

    /// `v_eᵀ (H_k ⊗ I) v_e` for every stress component k.
    pub fn mode_contraction(&self, v: &[f64], out: &mut [f64]) {
        let nn = self.dim.nodes_per_element();
        let nd = self.dim.ndim();
        let mut gram = [0.0; 64];
        for a in 0..nn {
            for b in 0..nn {
                let mut s = 0.0;
                for c in 0..nd {
                    s += v[a * nd + c] * v[b * nd + c];
                }
                gram[a * nn + b] = s;
            }
        }
        for (o, h) in out.iter_mut().zip(&self.h_flat) {
            *o = h.iter().zip(&gram[..nn * nn]).map(|(a, b)| a * b).sum();
        }
    }

    /// Element geometric stiffness for a center stress `sigma`.
    pub fn geometric_stiffness(&self, sigma: &[f64]) -> DMatrix<f64> {
        let nn = self.dim.nodes_per_element();
        let nd = self.dim.ndim();
        let mut hs = DMatrix::zeros(nn, nn);
        for (s, h) in sigma.iter().zip(&self.h_k) {
            hs += h * *s;
        }
        hs.kronecker(&DMatrix::identity(nd, nd))
    }

    /// Same matrix assembled as `Σ_g w_g Gᵀ S G`, with S the block-diagonal stress.
    pub fn geometric_stiffness_from_g(&self, sigma: &[f64]) -> DMatrix<f64> {
        let nd = self.dim.ndim();
        let s = stress_tensor(self.dim, sigma);
        let big_s = DMatrix::identity(nd, nd).kronecker(&s);
        let ne = self.element_dofs();
        let mut out = DMatrix::zeros(ne, ne);
        for (g, w) in self.g_gauss.iter().zip(&self.weights) {
            out += g.transpose() * &big_s * g * *w;
        }
        out
    }

    /// Thermal strain `αΔt Φ` in stress-component order.
    pub fn thermal_strain(&self, material: &Material, delta_t: f64) -> Vec<f64> {
        thermal_strain(material, delta_t, self.dim)
    }

    /// Element thermal load `∫ Bᵀ D ε_th`.
    pub fn thermal_load(&self, eps_th: &[f64]) -> Vec<f64> {
        let ne = self.element_dofs();
        let eps = DMatrix::from_column_slice(eps_th.len(), 1, eps_th);
        let mut f = DMatrix::zeros(ne, 1);
        for (b, w) in self.b_gauss.iter().zip(&self.weights) {
            f += b.transpose() * &self.d * &eps * *w;
        }
        f.as_slice().to_vec()
    }

    /// Center stress `D (B0 d_e − ε_th)`.
    pub fn center_stress(&self, d_e: &[f64], eps_th: &[f64], out: &mut [f64]) {
        let ne = d_e.len();
        let ns = self.stress_components();
        for i in 0..ns {
            let mut s = 0.0;
            for j in 0..ne {
                s += self.db0[(i, j)] * d_e[j];
            }
            for (j, e) in eps_th.iter().enumerate() {
                s -= self.d[(i, j)] * e;
            }
            out[i] = s;
        }
    }
}

/// `y = (H ⊗ I_nd) x` for a row-major nn × nn block `h`.
#[inline]
pub(crate) fn apply_kron(h: &[f64], nd: usize, x: &[f64], y: &mut [f64]) {
    let nn = x.len() / nd;
    for a in 0..nn {
        for c in 0..nd {
            let mut s = 0.0;
            for b in 0..nn {
                s += h[a * nn + b] * x[b * nd + c];
            }
            y[a * nd + c] = s;
        }
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// Isotropic elasticity matrix; plane stress in 2D.
pub fn elasticity(dim: Dimension, m: &Material) -> DMatrix<f64> {
    match dim {
        Dimension::Three => {
            let lam = m.e * m.nu / ((1.0 + m.nu) * (1.0 - 2.0 * m.nu));
            let mu = m.e / (2.0 * (1.0 + m.nu));
            let mut d = DMatrix::zeros(6, 6);
            for i in 0..3 {
                for j in 0..3 {
                    d[(i, j)] = lam;
                }
                d[(i, i)] += 2.0 * mu;
                d[(i + 3, i + 3)] = mu;
            }
            d
        }
        Dimension::Two => {
            let c = m.e / (1.0 - m.nu * m.nu);
            DMatrix::from_row_slice(
                3,
                3,
                &[
                    c,
                    c * m.nu,
                    0.0,
                    c * m.nu,
                    c,
                    0.0,
                    0.0,
                    0.0,
                    c * (1.0 - m.nu) / 2.0,
                ],
            )
        }
    }
}

/// Thermal strain `αΔt Φ`; Φ has ones on the normal components.
pub fn thermal_strain(material: &Material, delta_t: f64, dim: Dimension) -> Vec<f64> {
    let e = material.alpha * delta_t;
    match dim {
        Dimension::Two => vec![e, e, 0.0],
        Dimension::Three => vec![e, e, e, 0.0, 0.0, 0.0],
    }
}

/// Symmetric stress tensor `s` (ndim × ndim) from stored components.
pub fn stress_tensor(dim: Dimension, sigma: &[f64]) -> DMatrix<f64> {
    let nd = dim.ndim();
    let mut s = DMatrix::zeros(nd, nd);
    for (&(r, c), &v) in stress_pairs(dim).iter().zip(sigma) {
        s[(r, c)] = v;
        s[(c, r)] = v;
    }
    s
}

/// `∂S/∂σ_k` for the 0-based stress component `k`: the unit tensor pattern of
/// component k repeated on the block diagonal (ndim² × ndim²).
pub fn ds_dsigma(dim: Dimension, k: usize) -> Result<DMatrix<f64>> {
    let ns = dim.stress_components();
    if k >= ns {
        return Err(Error::InvalidInput(format!(
            "stress component index {k} out of range (0..{ns})"
        )));
    }
    let mut unit = vec![0.0; ns];
    unit[k] = 1.0;
    let s = stress_tensor(dim, &unit);
    let nd = dim.ndim();
    Ok(DMatrix::identity(nd, nd).kronecker(&s))
}

/// Physical shape-function gradients at natural coordinates `xi`.
fn shape_gradients(dim: Dimension, xi: &[f64], half: &[f64]) -> Vec<[f64; 3]> {
    let nd = dim.ndim();
    let nn = dim.nodes_per_element();
    let scale = 1.0 / (1u32 << nd) as f64;
    (0..nn)
        .map(|a| {
            let sgn: Vec<f64> = (0..nd)
                .map(|k| if HEX_CORNERS[a][k] == 1 { 1.0 } else { -1.0 })
                .collect();
            let mut g = [0.0; 3];
            for k in 0..nd {
                let mut v = sgn[k] * scale;
                for j in 0..nd {
                    if j != k {
                        v *= 1.0 + sgn[j] * xi[j];
                    }
                }
                g[k] = v / half[k];
            }
            g
        })
        .collect()
}

fn strain_matrix(dim: Dimension, grads: &[[f64; 3]]) -> DMatrix<f64> {
    let nd = dim.ndim();
    let ns = dim.stress_components();
    let pairs = stress_pairs(dim);
    let mut b = DMatrix::zeros(ns, grads.len() * nd);
    for (a, g) in grads.iter().enumerate() {
        for (row, &(r, c)) in pairs.iter().enumerate() {
            if r == c {
                b[(row, a * nd + r)] = g[r];
            } else {
                b[(row, a * nd + r)] = g[c];
                b[(row, a * nd + c)] = g[r];
            }
        }
    }
    b
}

/// Strains of the bubble modes `(1 − ξ_k²)` per axis k and component c.
fn bubble_strain_matrix(dim: Dimension, xi: &[f64], half: &[f64]) -> DMatrix<f64> {
    let nd = dim.ndim();
    let grads: Vec<[f64; 3]> = (0..nd)
        .map(|k| {
            let mut g = [0.0; 3];
            g[k] = -2.0 * xi[k] / half[k];
            g
        })
        .collect();
    strain_matrix(dim, &grads)
}

/// Rows grouped per displacement component: ∂u_c/∂x_j at row `c * ndim + j`.
fn gradient_matrix(dim: Dimension, grads: &[[f64; 3]]) -> DMatrix<f64> {
    let nd = dim.ndim();
    let mut g = DMatrix::zeros(nd * nd, grads.len() * nd);
    for (a, gr) in grads.iter().enumerate() {
        for c in 0..nd {
            for j in 0..nd {
                g[(c * nd + j, a * nd + c)] = gr[j];
            }
        }
    }
    g
}
