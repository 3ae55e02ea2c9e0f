//! Linear buckling: the smallest positive λ of `(K + λKσ) v = 0`.
//!
//! Solved as the largest positive eigenvalue θ = 1/λ of `K⁻¹(−Kσ)`, which is
//! self-adjoint in the K inner product, by Lanczos with full
//! reorthogonalization and thick restarts from the leading Ritz vectors.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::{dot, geometric_matvec, norm, Analysis};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenConfig {
    /// Required residual ‖Kv + λKσv‖ / ‖Kv‖.
    pub tol: f64,
    /// Krylov basis size before a restart.
    pub krylov_dim: usize,
    /// Total Lanczos step budget.
    pub max_steps: usize,
    /// Seed of the pseudo-random start vector.
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            tol: 1e-8,
            krylov_dim: 60,
            max_steps: 600,
            seed: 0x7e57_b0c1,
        }
    }
}

/// Relative gap below which the critical mode is reported as nearly repeated.
pub const GAP_WARNING: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct BucklingSolution {
    /// Smallest positive load factor.
    pub lambda: f64,
    /// Mode, normalized to `vᵀKv = 1` with its first significant entry positive.
    pub v: Vec<f64>,
    /// `‖Kv + λKσv‖ / ‖Kv‖`.
    pub residual: f64,
    /// `(λ₂ − λ)/λ` for the next positive load factor estimate (infinite if none).
    pub multiplicity_gap: f64,
    /// `vᵀKσv`, equal to `−1/λ` under the normalization.
    pub vt_ksigma_v: f64,
    pub steps: usize,
}

/// `‖Kv + λKσv‖ / ‖Kv‖` for the analysis' K and stresses `sigma`.
pub fn rayleigh_residual(analysis: &Analysis, sigma: &[f64], lambda: f64, v: &[f64]) -> Result<f64> {
    let n = v.len();
    let mut kv = vec![0.0; n];
    let mut ksv = vec![0.0; n];
    analysis.system.matvec(v, &mut kv)?;
    geometric_matvec(analysis.model(), sigma, v, &mut ksv)?;
    let kvn = norm(&kv);
    if kvn == 0.0 {
        return Err(Error::InvalidInput("zero vector in residual evaluation".into()));
    }
    let r: Vec<f64> = kv.iter().zip(&ksv).map(|(a, b)| a + lambda * b).collect();
    Ok(norm(&r) / kvn)
}

struct Basis {
    q: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

/// Solve the buckling problem for the analysis' static stress state.
/// `start` seeds the iteration (e.g. the previous design's mode).
pub fn solve_buckling(
    analysis: &Analysis,
    config: &EigenConfig,
    start: Option<&[f64]>,
) -> Result<BucklingSolution> {
    solve_buckling_with(analysis, &analysis.state.sigma, config, start)
}

/// As [`solve_buckling`] with an explicit stress field.
pub fn solve_buckling_with(
    analysis: &Analysis,
    sigma: &[f64],
    config: &EigenConfig,
    start: Option<&[f64]>,
) -> Result<BucklingSolution> {
    let model = analysis.model();
    let mesh = model.mesh();
    let n = mesh.n_dofs();
    let n_free = n - mesh.fixed_dofs().len();
    if n_free == 0 {
        return Err(Error::InvalidInput("every DOF is constrained".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut q0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    if let Some(s) = start {
        if s.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: s.len(),
            });
        }
        let sn = norm(s);
        if sn > 0.0 {
            let rn = norm(&q0);
            for (a, b) in q0.iter_mut().zip(s) {
                *a = b / sn + 0.1 * *a / rn;
            }
        }
    }
    mesh.zero_fixed(&mut q0);

    let kdim = config.krylov_dim.clamp(2, n_free.max(2));
    let mut total = 0;
    loop {
        let mut basis = Basis {
            q: Vec::with_capacity(kdim + 1),
            p: Vec::with_capacity(kdim + 1),
            alpha: Vec::new(),
            beta: Vec::new(),
        };
        let mut p0 = vec![0.0; n];
        analysis.system.matvec(&q0, &mut p0)?;
        let b0 = dot(&q0, &p0).sqrt();
        if !(b0 > 0.0) {
            return Err(Error::InvalidInput("degenerate start vector".into()));
        }
        q0.iter_mut().for_each(|v| *v /= b0);
        p0.iter_mut().for_each(|v| *v /= b0);
        basis.q.push(q0.clone());
        basis.p.push(p0);

        let mut exhausted = false;
        let mut ritz: Option<(Vec<f64>, Vec<f64>, DMatrix<f64>)> = None;
        while basis.alpha.len() < kdim && total < config.max_steps {
            total += 1;
            let j = basis.alpha.len();
            let mut g = vec![0.0; n];
            geometric_matvec(model, sigma, &basis.q[j], &mut g)?;
            g.iter_mut().for_each(|v| *v = -*v);
            let mut w = analysis.system.solve(&g)?;
            let mut kw = g;
            let a = dot(&basis.q[j], &kw);
            basis.alpha.push(a);
            for (i, c) in [(j, a), (j.wrapping_sub(1), basis.beta.last().copied().unwrap_or(0.0))] {
                if i == usize::MAX || c == 0.0 {
                    continue;
                }
                axpy(-c, &basis.q[i], &mut w);
                axpy(-c, &basis.p[i], &mut kw);
            }
            for _ in 0..2 {
                for i in 0..=j {
                    let c = dot(&basis.p[i], &w);
                    axpy(-c, &basis.q[i], &mut w);
                    axpy(-c, &basis.p[i], &mut kw);
                }
            }
            let b = dot(&w, &kw).max(0.0).sqrt();
            let scale = basis.alpha.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(b);
            basis.beta.push(b);
            if b <= 1e-12 * scale || basis.alpha.len() >= n_free {
                exhausted = true;
            } else {
                w.iter_mut().for_each(|v| *v /= b);
                kw.iter_mut().for_each(|v| *v /= b);
                basis.q.push(w);
                basis.p.push(kw);
            }

            let m = basis.alpha.len();
            if m >= 3 || exhausted {
                let (theta, s) = tridiagonal_eigen(&basis.alpha, &basis.beta[..m - 1]);
                let tmax = theta.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
                let best = argmax(&theta);
                if theta[best] <= 1e-10 * tmax || tmax == 0.0 {
                    if exhausted || m >= kdim.min(30) {
                        return Err(Error::NoBuckling {
                            largest_ritz: theta[best],
                        });
                    }
                    continue;
                }
                // residual estimate λ|β s_last| ‖p_{m}‖ / ‖Kv‖ with ‖Kv‖ ≥ ‖v‖_K² / ‖v‖
                let lam = 1.0 / theta[best];
                let est = if exhausted {
                    0.0
                } else {
                    lam * (b * s[(m - 1, best)]).abs() * norm(&basis.p[m])
                        / norm_of_combination(&basis.p, s.column(best).as_slice())
                };
                ritz = Some((theta.clone(), s.column(best).iter().copied().collect(), s));
                if est <= 0.1 * config.tol || exhausted {
                    break;
                }
            }
            if exhausted {
                break;
            }
        }

        let Some((theta, s1, s)) = ritz else {
            return Err(Error::EigenNotConverged {
                iterations: total,
                residual: f64::INFINITY,
            });
        };
        let m = basis.alpha.len();
        let best = argmax(&theta);
        let mut v = combine(&basis.q[..m], &s1);
        let mut kv = combine(&basis.p[..m], &s1);
        let mut ksv = vec![0.0; n];
        geometric_matvec(model, sigma, &v, &mut ksv)?;
        let vkv = dot(&v, &kv);
        let vksv = dot(&v, &ksv);
        if !(vksv < 0.0) {
            return Err(Error::NoBuckling {
                largest_ritz: theta[best],
            });
        }
        let lambda = vkv / -vksv;
        let r: Vec<f64> = kv.iter().zip(&ksv).map(|(a, b)| a + lambda * b).collect();
        let residual = norm(&r) / norm(&kv);

        if residual <= config.tol {
            let c = 1.0 / vkv.sqrt();
            let vmax = v.iter().fold(0.0f64, |mx, x| mx.max(x.abs()));
            let sign = v
                .iter()
                .find(|x| x.abs() > 1e-8 * vmax)
                .map_or(1.0, |x| x.signum());
            v.iter_mut().for_each(|x| *x *= c * sign);
            kv.clear();
            let second = theta
                .iter()
                .enumerate()
                .filter(|&(i, &t)| i != best && t > 0.0)
                .map(|(_, &t)| t)
                .fold(f64::NEG_INFINITY, f64::max);
            let multiplicity_gap = if second > 0.0 {
                (1.0 / second - lambda) / lambda
            } else {
                f64::INFINITY
            };
            if multiplicity_gap < GAP_WARNING {
                log::warn!(
                    "critical buckling mode is nearly repeated (relative gap {multiplicity_gap:.3e}); sensitivities assume a simple eigenvalue"
                );
            }
            return Ok(BucklingSolution {
                lambda,
                v,
                residual,
                multiplicity_gap,
                vt_ksigma_v: vksv * c * c,
                steps: total,
            });
        }
        if total >= config.max_steps || exhausted && m >= n_free {
            return Err(Error::EigenNotConverged {
                iterations: total,
                residual,
            });
        }
        // restart from the leading Ritz vector plus the runner-up
        let order = sorted_desc(&theta);
        q0 = v;
        if order.len() > 1 {
            let y2 = combine(&basis.q[..m], s.column(order[1]).as_slice());
            axpy(1.0, &y2, &mut q0);
        }
        mesh.zero_fixed(&mut q0);
    }
}

fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn sorted_desc(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    idx
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn combine(basis: &[Vec<f64>], coef: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (b, c) in basis.iter().zip(coef) {
        axpy(*c, b, &mut out);
    }
    out
}

fn norm_of_combination(basis: &[Vec<f64>], coef: &[f64]) -> f64 {
    norm(&combine(&basis[..coef.len()], coef))
}
