use crate::error::{Error, Result};

/// Initial multiplier.
pub const MU0: f64 = 1.0;
/// Initial penalty.
pub const GAMMA0: f64 = 10.0;
/// Required constraint-improvement ratio ς before a penalty is kept.
pub const SIGMA: f64 = 0.25;
/// Penalty growth factor η.
pub const ETA: f64 = 10.0;

/// Normalized constraints `g1 = J/(a1 J0) − 1` and `g2 = 1 − P/(a2 P0)`;
/// both feasible when ≤ 0.
pub fn constraint_values(j: f64, p: f64, j0: f64, p0: f64, a1: f64, a2: f64) -> Result<[f64; 2]> {
    if !(j0 > 0.0 && p0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "reference values must be positive (J0 = {j0}, P0 = {p0})"
        )));
    }
    if !(a1 > 0.0 && a2 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "constraint scalars must be positive (a1 = {a1}, a2 = {a2})"
        )));
    }
    Ok([j / (a1 * j0) - 1.0, 1.0 - p / (a2 * p0)])
}

/// Auxiliary Lagrangian of one constraint:
/// `μg + γg²/2` when `μ + γg > 0`, else `−μ²/(2γ)`.
pub fn auxiliary_lagrangian(g: f64, mu: f64, gamma: f64) -> f64 {
    if mu + gamma * g > 0.0 {
        mu * g + 0.5 * gamma * g * g
    } else {
        -mu * mu / (2.0 * gamma)
    }
}

/// Weight `max(μ + γg, 0)` multiplying a constraint's gradient in the Lagrangian.
pub fn constraint_weight(g: f64, mu: f64, gamma: f64) -> f64 {
    (mu + gamma * g).max(0.0)
}

/// Multipliers, penalties and the outer iteration counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AlState {
    pub mu: Vec<f64>,
    pub gamma: Vec<f64>,
    pub k: usize,
    pub g_prev: Option<Vec<f64>>,
}

impl AlState {
    pub fn new(n_constraints: usize) -> Self {
        AlState {
            mu: vec![MU0; n_constraints],
            gamma: vec![GAMMA0; n_constraints],
            k: 0,
            g_prev: None,
        }
    }

    pub fn weights(&self, g: &[f64]) -> Vec<f64> {
        g.iter()
            .zip(self.mu.iter().zip(&self.gamma))
            .map(|(&g, (&m, &c))| constraint_weight(g, m, c))
            .collect()
    }

    /// Sum of the auxiliary Lagrangians.
    pub fn penalty_value(&self, g: &[f64]) -> f64 {
        g.iter()
            .zip(self.mu.iter().zip(&self.gamma))
            .map(|(&g, (&m, &c))| auxiliary_lagrangian(g, m, c))
            .sum()
    }

    /// `μ ← max(μ + γg, 0)`.
    pub fn update_multipliers(&mut self, g: &[f64]) {
        for ((m, &c), &g) in self.mu.iter_mut().zip(&self.gamma).zip(g) {
            *m = (*m + c * g).max(0.0);
        }
    }

    /// Keep γ when `min(g_new, 0) ≤ ς·min(g_old, 0)`, else `γ ← max(ηγ, k²)`.
    pub fn update_penalties(&mut self, g_new: &[f64], g_old: &[f64], k: usize) {
        for ((c, &gn), &go) in self.gamma.iter_mut().zip(g_new).zip(g_old) {
            if gn.min(0.0) > SIGMA * go.min(0.0) {
                *c = (ETA * *c).max((k * k) as f64);
            }
        }
    }
}

/// Combined removal sensitivity `−1 + Σ_i w_i g_i′(e)` from already
/// filtered constraint gradients.
pub fn lagrangian_gradient_field(constraint_grads: &[&[f64]], weights: &[f64]) -> Vec<f64> {
    let n = constraint_grads.first().map_or(0, |g| g.len());
    (0..n)
        .map(|e| {
            -1.0 + constraint_grads
                .iter()
                .zip(weights)
                .map(|(g, w)| if *w == 0.0 { 0.0 } else { w * g[e] })
                .sum::<f64>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auxiliary_branches() {
        assert_eq!(auxiliary_lagrangian(0.0, 1.0, 10.0), 0.0);
        assert_eq!(auxiliary_lagrangian(0.5, 1.0, 10.0), 1.75);
        assert_eq!(auxiliary_lagrangian(-0.5, 1.0, 10.0), -0.05);
    }

    #[test]
    fn multipliers_clamp() {
        let mut s = AlState::new(3);
        s.mu = vec![1.0, 1.0, 0.0];
        s.update_multipliers(&[0.5, -0.2, 0.0]);
        assert_eq!(s.mu, vec![6.0, 0.0, 0.0]);
    }

    #[test]
    fn penalties() {
        let mut s = AlState::new(3);
        s.update_penalties(&[-0.5, -0.1, 0.0], &[-1.0, -1.0, 0.0], 2);
        assert_eq!(s.gamma, vec![10.0, 100.0, 10.0]);
    }

    #[test]
    fn reference_constraints() {
        let g = constraint_values(2.5, 0.91, 1.0, 1.0, 2.5, 0.6).unwrap();
        assert_eq!(g[0], 0.0);
        assert!((g[1] - (1.0 - 0.91 / 0.6)).abs() < 1e-15);
        let g = constraint_values(1.0, 0.3, 1.0, 1.0, 2.5, 0.6).unwrap();
        assert!((g[1] - 0.5).abs() < 1e-15);
        assert!(constraint_values(1.0, 1.0, 0.0, 1.0, 2.5, 0.6).is_err());
    }

    #[test]
    fn gradient_field() {
        let feasible = AlState::new(2).weights(&[-0.6, -0.7]);
        assert_eq!(feasible, vec![0.0, 0.0]);
        let f = lagrangian_gradient_field(&[&[0.3, 1.0], &[5.0, 5.0]], &feasible);
        assert_eq!(f, vec![-1.0, -1.0]);
        let f = lagrangian_gradient_field(&[&[0.3]], &[2.0]);
        assert!((f[0] + 0.4).abs() < 1e-15);
    }
}
