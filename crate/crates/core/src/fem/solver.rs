use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::perm::Perm;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, LltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, Mat, Par, Side};
use serde::{Deserialize, Serialize};

use super::operator::{stiffness_diagonal, stiffness_matvec};
use crate::error::{Error, Result};
use crate::model::{Model, VoxelMesh};

/// Linear-solver backend for K.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    /// Sparse Cholesky of the assembled K with a nested-dissection ordering.
    #[default]
    Cholesky,
    /// Matrix-free conjugate gradients with a Jacobi preconditioner.
    Pcg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Required relative residual ‖K d − f‖ / ‖f‖.
    pub rel_tol: f64,
    /// PCG iteration cap.
    pub max_iters: usize,
    /// Stiffness scale of void elements.
    pub ersatz_eps: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: SolverMethod::Cholesky,
            rel_tol: 1e-8,
            max_iters: 20_000,
            ersatz_eps: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            out.push(format!("solver.rel_tol = {} must satisfy 0 < rel_tol < 1", self.rel_tol));
        }
        if !(self.ersatz_eps > 0.0 && self.ersatz_eps <= 1e-3) {
            out.push(format!(
                "solver.ersatz_eps = {} must lie in (0, 1e-3]",
                self.ersatz_eps
            ));
        }
        if self.max_iters == 0 {
            out.push("solver.max_iters must be positive".into());
        }
        out
    }
}

/// Fixed sparsity structure of K on a grid (upper triangle, CSC) with the
/// element-to-entry map and the symbolic factorization.
#[derive(Debug)]
pub struct SparsePattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// Entry index for each (element, local row, local col) with global row ≤ col.
    elem_pos: Vec<u32>,
    diag_pos: Vec<usize>,
    ordering: Vec<usize>,
    symbolic: OnceLock<std::result::Result<SymbolicCholesky<usize>, String>>,
}

const LOWER: u32 = u32::MAX;

impl SparsePattern {
    pub fn new(mesh: &VoxelMesh) -> Self {
        let nd = mesh.ndim();
        let n = mesh.n_dofs();
        let [nx, ny, nz] = mesh.node_counts();
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut diag_pos = vec![0; n];
        col_ptr.push(0);
        for node in 0..mesh.n_nodes() {
            let [i, j, k] = mesh.node_ijk(node);
            let mut neighbours = Vec::with_capacity(27);
            for kk in k.saturating_sub(1)..=(k + 1).min(nz - 1) {
                for jj in j.saturating_sub(1)..=(j + 1).min(ny - 1) {
                    for ii in i.saturating_sub(1)..=(i + 1).min(nx - 1) {
                        neighbours.push(mesh.node_index(ii, jj, kk));
                    }
                }
            }
            for c in 0..nd {
                let col = node * nd + c;
                for &m in &neighbours {
                    for rc in 0..nd {
                        let row = m * nd + rc;
                        if row <= col {
                            if row == col {
                                diag_pos[col] = row_idx.len();
                            }
                            row_idx.push(row);
                        }
                    }
                }
                col_ptr.push(row_idx.len());
            }
        }
        let ne = mesh.dimension().element_dofs();
        let mut elem_pos = vec![LOWER; mesh.n_elements() * ne * ne];
        let mut dofs = vec![0; ne];
        for e in 0..mesh.n_elements() {
            mesh.element_dofs_into(e, &mut dofs);
            for a in 0..ne {
                for b in 0..ne {
                    let (r, c) = (dofs[a], dofs[b]);
                    if r <= c {
                        let rows = &row_idx[col_ptr[c]..col_ptr[c + 1]];
                        let p = rows.binary_search(&r).expect("coupled DOFs in pattern");
                        elem_pos[(e * ne + a) * ne + b] = (col_ptr[c] + p) as u32;
                    }
                }
            }
        }
        let mut order = Vec::with_capacity(mesh.n_nodes());
        dissect(mesh, [0, 0, 0], [nx, ny, nz], &mut order);
        let ordering = order
            .iter()
            .flat_map(|&node| (0..nd).map(move |c| node * nd + c))
            .collect();
        SparsePattern {
            n,
            col_ptr,
            row_idx,
            elem_pos,
            diag_pos,
            ordering,
            symbolic: OnceLock::new(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    fn symbolic_ref(&self) -> SymbolicSparseColMatRef<'_, usize> {
        SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx)
    }

    fn symbolic(&self) -> Result<&SymbolicCholesky<usize>> {
        let sym = self.symbolic.get_or_init(|| {
            let fwd = self.ordering.clone();
            let mut inv = vec![0; self.n];
            for (i, &f) in fwd.iter().enumerate() {
                inv[f] = i;
            }
            let perm = Perm::new_checked(fwd.into_boxed_slice(), inv.into_boxed_slice(), self.n);
            factorize_symbolic_cholesky(
                self.symbolic_ref(),
                Side::Upper,
                SymmetricOrdering::Custom(perm.as_ref()),
                Default::default(),
            )
            .map_err(|e| format!("{e:?}"))
        });
        sym.as_ref().map_err(|e| Error::Singular(format!("symbolic factorization failed: {e}")))
    }

    /// Upper-triangle values of K for per-element scales, constrained DOFs eliminated.
    pub fn assemble(&self, model: &Model, scale: &[f64]) -> Vec<f64> {
        let mesh = model.mesh();
        let ne = mesh.dimension().element_dofs();
        let k = model.kernels().k_flat();
        let fixed = mesh.fixed_mask();
        let mut vals = vec![0.0; self.nnz()];
        let mut dofs = vec![0; ne];
        for (e, &s) in scale.iter().enumerate() {
            mesh.element_dofs_into(e, &mut dofs);
            let pos = &self.elem_pos[e * ne * ne..(e + 1) * ne * ne];
            for a in 0..ne {
                if fixed[dofs[a]] {
                    continue;
                }
                for b in 0..ne {
                    let p = pos[a * ne + b];
                    if p != LOWER && !fixed[dofs[b]] {
                        vals[p as usize] += s * k[a * ne + b];
                    }
                }
            }
        }
        for &d in mesh.fixed_dofs() {
            vals[self.diag_pos[d]] = 1.0;
        }
        vals
    }
}

/// Nested dissection of the node box `[lo, hi)`: both halves first, then the
/// separating plane.
fn dissect(mesh: &VoxelMesh, lo: [usize; 3], hi: [usize; 3], out: &mut Vec<usize>) {
    let ext = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    let count = ext[0] * ext[1] * ext[2];
    if count == 0 {
        return;
    }
    let ax = (0..3).max_by_key(|&a| (ext[a], a)).unwrap_or(0);
    let push_box = |lo: [usize; 3], hi: [usize; 3], out: &mut Vec<usize>| {
        for k in lo[2]..hi[2] {
            for j in lo[1]..hi[1] {
                for i in lo[0]..hi[0] {
                    out.push(mesh.node_index(i, j, k));
                }
            }
        }
    };
    if count <= 64 || ext[ax] < 3 {
        push_box(lo, hi, out);
        return;
    }
    let mid = lo[ax] + ext[ax] / 2;
    let mut h1 = hi;
    h1[ax] = mid;
    let mut l2 = lo;
    l2[ax] = mid + 1;
    dissect(mesh, lo, h1, out);
    dissect(mesh, l2, hi, out);
    let mut sl = lo;
    sl[ax] = mid;
    let mut sh = hi;
    sh[ax] = mid + 1;
    push_box(sl, sh, out);
}

enum Backend<'m> {
    Cholesky {
        symbolic: &'m SymbolicCholesky<usize>,
        factor: Vec<f64>,
    },
    Pcg {
        inv_diag: Vec<f64>,
    },
}

/// K for one design, ready to solve repeatedly.
pub struct StiffnessSystem<'m> {
    model: &'m Model,
    scale: Vec<f64>,
    config: SolverConfig,
    backend: Backend<'m>,
    solves: AtomicUsize,
}

impl std::fmt::Debug for StiffnessSystem<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StiffnessSystem")
            .field("method", &self.config.method)
            .field("n_dofs", &self.model.n_dofs())
            .field("solves", &self.solve_count())
            .finish()
    }
}

impl<'m> StiffnessSystem<'m> {
    /// `scale[e]` multiplies element e's stiffness.
    pub fn new(model: &'m Model, scale: Vec<f64>, config: SolverConfig) -> Result<Self> {
        if scale.len() != model.n_elements() {
            return Err(Error::DimensionMismatch {
                expected: model.n_elements(),
                got: scale.len(),
            });
        }
        let backend = match config.method {
            SolverMethod::Cholesky => {
                let pattern = model.pattern();
                let symbolic = pattern.symbolic()?;
                let vals = pattern.assemble(model, &scale);
                let a = SparseColMatRef::new(pattern.symbolic_ref(), &vals);
                let mut factor = vec![0.0; symbolic.len_val()];
                let mut mem = MemBuffer::new(
                    symbolic.factorize_numeric_llt_scratch::<f64>(Par::Seq, Default::default()),
                );
                symbolic
                    .factorize_numeric_llt(
                        &mut factor,
                        a,
                        Side::Upper,
                        Default::default(),
                        Par::Seq,
                        MemStack::new(&mut mem),
                        Default::default(),
                    )
                    .map_err(|e| {
                        Error::Singular(format!(
                            "Cholesky factorization failed ({e:?}); check that supports remove all rigid-body motion"
                        ))
                    })?;
                Backend::Cholesky { symbolic, factor }
            }
            SolverMethod::Pcg => {
                let diag = stiffness_diagonal(model, &scale);
                if let Some(i) = diag.iter().position(|v| !(*v > 0.0)) {
                    return Err(Error::Singular(format!("zero stiffness at DOF {i}")));
                }
                Backend::Pcg {
                    inv_diag: diag.iter().map(|v| 1.0 / v).collect(),
                }
            }
        };
        Ok(StiffnessSystem {
            model,
            scale,
            config,
            backend,
            solves: AtomicUsize::new(0),
        })
    }

    pub fn model(&self) -> &'m Model {
        self.model
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Number of linear solves performed with this system.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        stiffness_matvec(self.model, &self.scale, x, y)
    }

    /// Solve K x = rhs with constrained entries of `rhs` treated as zero.
    /// The result meets `rel_tol` or an error is returned.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.model.n_dofs();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        self.solves.fetch_add(1, Ordering::Relaxed);
        let mut b = rhs.to_vec();
        self.model.mesh().zero_fixed(&mut b);
        let bnorm = norm(&b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        match &self.backend {
            Backend::Cholesky { symbolic, factor } => {
                let llt = LltRef::new(symbolic, factor);
                let mut mem = MemBuffer::new(symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
                let mut stack = MemStack::new(&mut mem);
                let mut solve = |v: &[f64]| -> Vec<f64> {
                    let mut m = Mat::<f64>::from_fn(n, 1, |i, _| v[i]);
                    llt.solve_in_place_with_conj(Conj::No, m.as_mut(), Par::Seq, &mut stack);
                    (0..n).map(|i| m[(i, 0)]).collect()
                };
                let mut x = solve(&b);
                let mut r = vec![0.0; n];
                let mut rel = self.residual(&x, &b, &mut r)? / bnorm;
                let mut steps = 0;
                while rel > self.config.rel_tol && steps < 3 {
                    let dx = solve(&r);
                    x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
                    rel = self.residual(&x, &b, &mut r)? / bnorm;
                    steps += 1;
                }
                if rel > self.config.rel_tol {
                    return Err(Error::NotConverged {
                        iterations: steps,
                        residual: rel,
                    });
                }
                Ok(x)
            }
            Backend::Pcg { inv_diag } => self.pcg(&b, bnorm, inv_diag),
        }
    }

    fn residual(&self, x: &[f64], b: &[f64], r: &mut [f64]) -> Result<f64> {
        self.matvec(x, r)?;
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        Ok(norm(r))
    }

    fn pcg(&self, b: &[f64], bnorm: f64, inv_diag: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let tol = self.config.rel_tol;
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut q = vec![0.0; n];
        let mut rz = dot(&r, &z);
        let mut best = 1.0;
        let mut since_best = 0;
        let stall_window = 1000.max(n / 4);
        for it in 1..=self.config.max_iters {
            self.matvec(&p, &mut q)?;
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                return Err(Error::Singular(format!(
                    "non-positive curvature pᵀKp = {pq:.3e} at PCG iteration {it}"
                )));
            }
            let alpha = rz / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            let rel = norm(&r) / bnorm;
            if rel <= tol {
                let mut check = vec![0.0; n];
                let true_rel = self.residual(&x, b, &mut check)? / bnorm;
                if true_rel <= tol {
                    return Ok(x);
                }
                r.copy_from_slice(&check);
            }
            if rel < 0.5 * best {
                best = rel;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > stall_window {
                    return Err(Error::Singular(format!(
                        "PCG residual stagnated at {rel:.3e} after {it} iterations; the system is likely under-constrained"
                    )));
                }
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let mut check = vec![0.0; n];
        let rel = self.residual(&x, b, &mut check)? / bnorm;
        Err(Error::NotConverged {
            iterations: self.config.max_iters,
            residual: rel,
        })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
