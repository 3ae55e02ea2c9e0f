//! Volume minimization under compliance and buckling constraints.
//!
//! Constraints enter through an augmented Lagrangian whose gradient field is
//! cut at a target volume; the cut is repeated to a fixed point, then the
//! target volume is lowered. Sensitivities are in the removal direction: a
//! high combined value marks an element that is costly to remove.

mod al;
mod cut;

pub use al::{
    auxiliary_lagrangian, constraint_values, constraint_weight, lagrangian_gradient_field,
    AlState, ETA, GAMMA0, MU0, SIGMA,
};
pub use cut::level_set_cut;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::buckling::{solve_buckling, EigenConfig};
use crate::error::{Error, Result};
use crate::fem::{Analysis, SolverConfig};
use crate::model::{volume_fraction, DesignField, Model};
use crate::sensitivity::{compliance_sensitivity, lambda_sensitivity_adjoint, RadialFilter};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    /// Compliance bound `J ≤ a1·J0`.
    pub a1: f64,
    /// Buckling bound `P ≥ a2·P0`.
    pub a2: f64,
    pub v_target: f64,
    /// Initial volume decrement.
    pub dv0: f64,
    pub dv_max: f64,
    /// The run stops once the decrement falls below this.
    pub dv_min: f64,
    pub filter_radius: f64,
    /// Changed-element fraction below which an inner step counts as settled.
    pub change_tol: f64,
    /// Consecutive settled steps required for inner convergence.
    pub settled_steps: usize,
    pub max_inner: usize,
    pub solver: SolverConfig,
    pub eigen: EigenConfig,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            a1: 2.5,
            a2: 0.6,
            v_target: 0.1,
            dv0: 0.025,
            dv_max: 0.05,
            dv_min: 1e-4,
            filter_radius: 0.0,
            change_tol: 0.005,
            settled_steps: 2,
            max_inner: 50,
            solver: SolverConfig::default(),
            eigen: EigenConfig::default(),
        }
    }
}

impl OptimizerSettings {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.a1 > 0.0 && self.a1.is_finite()) {
            v.push(format!("a1 = {} must be positive", self.a1));
        }
        if !(self.a2 > 0.0 && self.a2.is_finite()) {
            v.push(format!("a2 = {} must be positive", self.a2));
        }
        if !(self.v_target > 0.0 && self.v_target <= 1.0) {
            v.push(format!("v_target = {} must lie in (0, 1]", self.v_target));
        }
        if !(self.dv0 > 0.0 && self.dv0 < 1.0) {
            v.push(format!("dv0 = {} must lie in (0, 1)", self.dv0));
        }
        if !(self.dv_max >= self.dv0) {
            v.push(format!("dv_max = {} must be >= dv0", self.dv_max));
        }
        if !(self.dv_min > 0.0 && self.dv_min <= self.dv0) {
            v.push(format!("dv_min = {} must lie in (0, dv0]", self.dv_min));
        }
        if !(self.filter_radius >= 0.0 && self.filter_radius.is_finite()) {
            v.push(format!("filter_radius = {} must be >= 0", self.filter_radius));
        }
        if !(self.change_tol > 0.0 && self.change_tol < 1.0) {
            v.push(format!("change_tol = {} must lie in (0, 1)", self.change_tol));
        }
        if self.settled_steps == 0 || self.max_inner < self.settled_steps + 1 {
            v.push(format!(
                "max_inner = {} must exceed settled_steps = {} >= 1",
                self.max_inner, self.settled_steps
            ));
        }
        v.extend(self.solver.violations());
        v
    }
}

/// Volume schedule and the full-domain references.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleState {
    pub v_current: f64,
    pub dv: f64,
    pub v_target: f64,
    pub j0: f64,
    pub p0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl ScheduleState {
    pub fn constraints(&self, j: f64, p: f64) -> Result<[f64; 2]> {
        constraint_values(j, p, self.j0, self.p0, self.a1, self.a2)
    }

    /// Next volume to try, never below the target.
    pub fn next_volume(&self) -> f64 {
        (self.v_current - self.dv).max(self.v_target)
    }

    pub fn grow(&mut self, dv_max: f64) {
        self.dv = (1.1 * self.dv).min(dv_max);
    }

    pub fn shrink(&mut self) {
        self.dv *= 0.5;
    }
}

/// Responses and sensitivities of one analyzed topology.
#[derive(Debug, Clone, Default)]
pub struct Evaluation {
    pub compliance: f64,
    pub lambda: f64,
    pub j_ratio: f64,
    pub p_ratio: f64,
    pub g: [f64; 2],
    pub displacement: Vec<f64>,
    pub stress: Vec<f64>,
    pub mode: Vec<f64>,
    /// Presence derivatives of J and λ.
    pub compliance_sensitivity: Vec<f64>,
    pub lambda_sensitivity: Vec<f64>,
    /// Filtered removal derivatives of g1 and g2, averaged with the preceding
    /// step's when there is one. Void elements carry the lowest present value
    /// (or zero, if lower) before filtering.
    pub g_sensitivity: [Vec<f64>; 2],
}

impl Evaluation {
    pub fn feasible(&self) -> bool {
        self.g.iter().all(|&g| g <= 0.0)
    }
}

/// Result of one analyze-and-cut pass.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// The analyzed (input) topology's responses.
    pub evaluation: Evaluation,
    /// Topology after the cut.
    pub next: DesignField,
    /// Fraction of elements whose presence changed in the cut.
    pub changed_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iter: usize,
    pub v: f64,
    #[serde(rename = "J_over_J0")]
    pub j_over_j0: f64,
    #[serde(rename = "P_over_P0")]
    pub p_over_p0: f64,
    pub lambda: f64,
    pub g1: f64,
    pub g2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub inner_steps: usize,
    pub wall_s: f64,
}

impl HistoryRow {
    pub fn feasible(&self) -> bool {
        self.g1 <= 0.0 && self.g2 <= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    TargetReached,
    StepUnderflow,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub history: Vec<HistoryRow>,
    pub design: DesignField,
    pub evaluation: Evaluation,
    pub termination: Termination,
}

/// Optimization driver bound to a model; holds the full-domain references.
pub struct Optimizer<'m> {
    model: &'m Model,
    settings: OptimizerSettings,
    filter: RadialFilter,
    j0: f64,
    p0: f64,
    reference: Evaluation,
}

impl<'m> Optimizer<'m> {
    /// Analyze the full domain and record `J0` and `P0`.
    pub fn new(model: &'m Model, settings: OptimizerSettings) -> Result<Self> {
        let problems = settings.violations();
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        let filter = RadialFilter::new(model.mesh(), settings.filter_radius)?;
        let mut opt = Optimizer {
            model,
            settings,
            filter,
            j0: 1.0,
            p0: 1.0,
            reference: Evaluation::default(),
        };
        let full = model.full_design();
        let (analysis, sol) = opt.analyze(&full, None)?;
        if !(analysis.state.compliance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "full-domain compliance {} is not positive; the model carries no load",
                analysis.state.compliance
            )));
        }
        opt.j0 = analysis.state.compliance;
        opt.p0 = sol.lambda;
        opt.reference = opt.evaluate_with(&analysis, sol)?;
        Ok(opt)
    }

    pub fn model(&self) -> &'m Model {
        self.model
    }

    pub fn settings(&self) -> &OptimizerSettings {
        &self.settings
    }

    pub fn references(&self) -> (f64, f64) {
        (self.j0, self.p0)
    }

    /// Full-domain evaluation.
    pub fn reference(&self) -> &Evaluation {
        &self.reference
    }

    fn analyze(
        &self,
        design: &DesignField,
        start: Option<&[f64]>,
    ) -> Result<(Analysis<'m>, crate::buckling::BucklingSolution)> {
        let analysis = Analysis::for_design(self.model, design, &self.settings.solver)?;
        let sol = solve_buckling(&analysis, &self.settings.eigen, start)?;
        Ok((analysis, sol))
    }

    fn evaluate_with(
        &self,
        analysis: &Analysis,
        sol: crate::buckling::BucklingSolution,
    ) -> Result<Evaluation> {
        let j = analysis.state.compliance;
        let g = constraint_values(j, sol.lambda, self.j0, self.p0, self.settings.a1, self.settings.a2)?;
        let dj = compliance_sensitivity(analysis).values;
        let (dl, _) = lambda_sensitivity_adjoint(analysis, &sol)?;
        let dl = dl.values;
        let c1 = -1.0 / (self.settings.a1 * self.j0);
        let c2 = 1.0 / (self.settings.a2 * self.p0);
        let g1 = void_floor(dj.iter().map(|v| c1 * v), &analysis.occupancy);
        let g2 = void_floor(dl.iter().map(|v| c2 * v), &analysis.occupancy);
        Ok(Evaluation {
            compliance: j,
            lambda: sol.lambda,
            j_ratio: j / self.j0,
            p_ratio: sol.lambda / self.p0,
            g,
            displacement: analysis.state.d.clone(),
            stress: analysis.state.sigma.clone(),
            mode: sol.v,
            compliance_sensitivity: dj,
            lambda_sensitivity: dl,
            g_sensitivity: [self.filter.apply(&g1), self.filter.apply(&g2)],
        })
    }

    /// Analyze a topology without cutting.
    pub fn evaluate(&self, design: &DesignField, start: Option<&[f64]>) -> Result<Evaluation> {
        let (analysis, sol) = self.analyze(design, start)?;
        self.evaluate_with(&analysis, sol)
    }

    /// Analyze `design`, form the filtered Lagrangian gradient with the
    /// current multipliers and cut it at `target_v`. With a `previous`
    /// evaluation its mode seeds the eigensolver and its constraint gradients
    /// are averaged with the new ones.
    pub fn fixed_point_step(
        &self,
        design: &DesignField,
        target_v: f64,
        al: &AlState,
        previous: Option<&Evaluation>,
    ) -> Result<StepOutcome> {
        self.step_with_memory(design, target_v, al, previous, 0.5)
    }

    /// [`Optimizer::fixed_point_step`] with weight `memory` on the previous
    /// constraint gradients.
    fn step_with_memory(
        &self,
        design: &DesignField,
        target_v: f64,
        al: &AlState,
        previous: Option<&Evaluation>,
        memory: f64,
    ) -> Result<StepOutcome> {
        let mut evaluation = self.evaluate(design, previous.map(|p| p.mode.as_slice()))?;
        if let Some(p) = previous {
            for (cur, old) in evaluation.g_sensitivity.iter_mut().zip(&p.g_sensitivity) {
                if cur.len() == old.len() {
                    cur.iter_mut()
                        .zip(old)
                        .for_each(|(c, o)| *c = (1.0 - memory) * *c + memory * o);
                }
            }
        }
        let next = self.cut(&evaluation, target_v, al)?;
        let changed_fraction = next.changed(design) as f64 / design.len() as f64;
        Ok(StepOutcome {
            evaluation,
            next,
            changed_fraction,
        })
    }

    fn cut(&self, evaluation: &Evaluation, target_v: f64, al: &AlState) -> Result<DesignField> {
        let [s1, s2] = &evaluation.g_sensitivity;
        let weights = al.weights(&evaluation.g);
        let field = lagrangian_gradient_field(&[s1, s2], &weights);
        let tiebreak: Vec<f64> = s1.iter().zip(s2).map(|(a, b)| a + b).collect();
        level_set_cut(&field, target_v, self.model.non_design(), Some(&tiebreak))
    }

    /// Run the volume-decrement loop. `observer` sees every accepted row with
    /// its topology and evaluation, starting with the full domain.
    pub fn run<F>(&self, mut observer: F) -> Result<OptimizationResult>
    where
        F: FnMut(&HistoryRow, &DesignField, &Evaluation) -> Result<()>,
    {
        let started = Instant::now();
        let s = &self.settings;
        let mut schedule = ScheduleState {
            v_current: 1.0,
            dv: s.dv0,
            v_target: s.v_target,
            j0: self.j0,
            p0: self.p0,
            a1: s.a1,
            a2: s.a2,
        };
        let g0 = self.reference.g;
        if g0.iter().any(|&g| g > 0.0) {
            return Err(Error::InfeasibleStart { g1: g0[0], g2: g0[1] });
        }
        let mut al = AlState::new(2);
        let mut design = self.model.full_design();
        let mut current = self.reference.clone();
        let mut history = vec![row(0, 1.0, &current, &al, 0, started)];
        observer(&history[0], &design, &current)?;
        log::info!(
            "full domain: J0 = {:.6e}, lambda0 = {:.6e}, g = [{:.4}, {:.4}]",
            self.j0,
            self.p0,
            g0[0],
            g0[1]
        );

        let termination = loop {
            let n = design.len();
            let present = design.n_present();
            let floor = ((s.v_target * n as f64).round() as usize).max(1);
            if present <= floor {
                break Termination::TargetReached;
            }
            if schedule.dv < s.dv_min {
                break Termination::StepUnderflow;
            }
            let keep = ((schedule.next_volume() * n as f64).round() as usize).clamp(floor, present - 1);
            let v_try = keep as f64 / n as f64;
            match self.inner_loop(&current, v_try, &al)? {
                Some((next, eval, steps)) if eval.feasible() => {
                    al.k += 1;
                    let g_old = al.g_prev.clone().unwrap_or_else(|| current.g.to_vec());
                    al.update_multipliers(&eval.g);
                    al.update_penalties(&eval.g, &g_old, al.k);
                    al.g_prev = Some(eval.g.to_vec());
                    schedule.v_current = volume_fraction(&next);
                    schedule.grow(s.dv_max);
                    let r = row(history.len(), schedule.v_current, &eval, &al, steps, started);
                    log::info!(
                        "iter {}: v = {:.4}, J/J0 = {:.4}, P/P0 = {:.4}, inner = {}, dv -> {:.5}",
                        r.iter,
                        r.v,
                        r.j_over_j0,
                        r.p_over_p0,
                        steps,
                        schedule.dv
                    );
                    observer(&r, &next, &eval)?;
                    history.push(r);
                    design = next;
                    current = eval;
                }
                outcome => {
                    match &outcome {
                        Some((_, eval, _)) => log::info!(
                            "v = {v_try:.4}: converged but infeasible (g = [{:.4}, {:.4}]); dv -> {:.5}",
                            eval.g[0],
                            eval.g[1],
                            0.5 * schedule.dv
                        ),
                        None => log::info!(
                            "v = {v_try:.4}: no fixed point in {} steps; dv -> {:.5}",
                            s.max_inner,
                            0.5 * schedule.dv
                        ),
                    }
                    schedule.shrink();
                }
            }
        };
        Ok(OptimizationResult {
            history,
            design,
            evaluation: current,
            termination,
        })
    }

    /// Fixed-point iteration at `v_try` from the last accepted topology.
    /// Constraint gradients are running means over the steps, so the cut
    /// settles. Returns the settled topology, its evaluation and the step count.
    fn inner_loop(
        &self,
        start_eval: &Evaluation,
        v_try: f64,
        al: &AlState,
    ) -> Result<Option<(DesignField, Evaluation, usize)>> {
        let s = &self.settings;
        let mut design = self.cut(start_eval, v_try, al)?;
        let mut previous = start_eval.clone();
        let mut settled = 0;
        for step in 1..=s.max_inner {
            let memory = step as f64 / (step + 1) as f64;
            let out = self.step_with_memory(&design, v_try, al, Some(&previous), memory)?;
            log::debug!(
                "  v = {v_try:.4} step {step}: J/J0 = {:.4}, P/P0 = {:.4}, changed = {:.4}",
                out.evaluation.j_ratio,
                out.evaluation.p_ratio,
                out.changed_fraction
            );
            if out.changed_fraction < s.change_tol {
                settled += 1;
            } else {
                settled = 0;
            }
            if settled >= s.settled_steps {
                return Ok(Some((design, out.evaluation, step)));
            }
            previous = out.evaluation;
            design = out.next;
        }
        Ok(None)
    }
}

/// Replace void entries by `min(0, lowest present value)`.
fn void_floor(values: impl Iterator<Item = f64>, occupancy: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = values.collect();
    let floor = out
        .iter()
        .zip(occupancy)
        .filter(|(_, &x)| x > 0.0)
        .fold(0.0f64, |m, (v, _)| m.min(*v));
    for (v, &x) in out.iter_mut().zip(occupancy) {
        if x <= 0.0 {
            *v = floor;
        }
    }
    out
}

fn row(
    iter: usize,
    v: f64,
    eval: &Evaluation,
    al: &AlState,
    inner_steps: usize,
    started: Instant,
) -> HistoryRow {
    HistoryRow {
        iter,
        v,
        j_over_j0: eval.j_ratio,
        p_over_p0: eval.p_ratio,
        lambda: eval.lambda,
        g1: eval.g[0],
        g2: eval.g[1],
        mu1: al.mu[0],
        mu2: al.mu[1],
        gamma1: al.gamma[0],
        gamma2: al.gamma[1],
        inner_steps,
        wall_s: started.elapsed().as_secs_f64(),
    }
}

/// Convenience wrapper: build the driver and run it without an observer.
pub fn run_optimization(model: &Model, settings: OptimizerSettings) -> Result<OptimizationResult> {
    Optimizer::new(model, settings)?.run(|_, _, _| Ok(()))
}
