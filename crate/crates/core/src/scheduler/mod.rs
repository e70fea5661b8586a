//! Day-ahead schedule optimization.
//!
//! [`build_problem`] turns a prosumption model, a battery and cost weights
//! into a [`Problem`]; [`solve`] runs an augmented-Lagrangian method whose
//! inner box-constrained subproblems are handled by projected Newton steps
//! on a Gauss-Newton model of the penalty. The kink of the loss term
//! `|p_B|` is handled exactly by fixing the sign of each `p_B(k)` within an
//! inner iteration.

pub mod inner;
mod output;
mod problem;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use output::{
    read_solution_json, write_plot_csv, write_solution_json, RunMetadata, SolutionDocument,
    PLOT_HEADER,
};
pub use problem::{abs_slope, build_problem, Pairing, Problem, StepCost};

use crate::battery::{nominal_step, BatterySpec, BatteryTrajectory, LimitKind};
use crate::error::{Error, Result};
use crate::mixed::{atom_probs, build_grid_dev, expected_battery_dev, AllocationBounds};
use inner::{minimize_box_newton, orthant, projected_grad_norm, InnerOptions};
use nalgebra::DMatrix;

/// Steps (from the 06:00 schedule start) of the Case-3 critical window.
pub const CASE3_CRITICAL_STEPS: [usize; 2] = [6, 7];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    /// Cost of nominal grid import, per kW².
    pub c1: f64,
    /// Cost of nominal grid export, per kW².
    pub c2: f64,
    /// Per-step cost of upward grid deviations, per kW.
    pub c3: Vec<f64>,
    /// Per-step cost of downward grid deviations, per kW.
    pub c4: Vec<f64>,
}

impl CostWeights {
    pub fn uniform(c1: f64, c2: f64, c3: f64, c4: f64, horizon: usize) -> Self {
        Self {
            c1,
            c2,
            c3: vec![c3; horizon],
            c4: vec![c4; horizon],
        }
    }

    pub fn case1(horizon: usize) -> Self {
        Self::uniform(2.0, 1.0, 0.0, 0.0, horizon)
    }

    pub fn case2(horizon: usize) -> Self {
        Self::uniform(2.0, 1.0, 0.5, 0.5, horizon)
    }

    /// Heavy penalty on downward deviations in the midday window.
    pub fn case3(horizon: usize) -> Self {
        let mut w = Self::uniform(2.0, 1.0, 2.0, 2.0, horizon);
        for k in CASE3_CRITICAL_STEPS {
            if k < horizon {
                w.c4[k] = 100.0;
            }
        }
        w
    }

    pub fn preset(name: &str, horizon: usize) -> Result<Self> {
        match name {
            "case1" => Ok(Self::case1(horizon)),
            "case2" => Ok(Self::case2(horizon)),
            "case3" => Ok(Self::case3(horizon)),
            other => Err(Error::config(
                "case",
                format!("unknown preset '{other}', expected case1, case2 or case3"),
            )),
        }
    }

    pub fn validate(&self, horizon: usize) -> Result<()> {
        for (what, len) in [("c3 weights", self.c3.len()), ("c4 weights", self.c4.len())] {
            if len != horizon {
                return Err(Error::HorizonMismatch {
                    what,
                    got: len,
                    expected: horizon,
                });
            }
        }
        let all = [self.c1, self.c2]
            .into_iter()
            .chain(self.c3.iter().copied())
            .chain(self.c4.iter().copied());
        for c in all {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::Validation(format!(
                    "cost weights must be finite and non-negative, got {c}"
                )));
            }
        }
        Ok(())
    }

    /// No deviation cost at step `k`: its allocation bounds are pinned to 0.
    pub fn allocation_fixed(&self, k: usize) -> bool {
        self.c3[k] == 0.0 && self.c4[k] == 0.0
    }

    /// Copy with the deviation weights `c3`, `c4` multiplied by `factor`.
    pub fn scale_deviation(&self, factor: f64) -> Self {
        Self {
            c1: self.c1,
            c2: self.c2,
            c3: self.c3.iter().map(|c| c * factor).collect(),
            c4: self.c4.iter().map(|c| c * factor).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector {
    pub p_b: Vec<f64>,
    pub x_lower: Vec<f64>,
    pub x_upper: Vec<f64>,
}

impl DecisionVector {
    pub fn zeros(horizon: usize) -> Self {
        Self {
            p_b: vec![0.0; horizon],
            x_lower: vec![0.0; horizon],
            x_upper: vec![0.0; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.p_b.len()
    }

    pub fn from_flat(x: &[f64]) -> Self {
        let k = x.len() / 3;
        Self {
            p_b: x[..k].to_vec(),
            x_lower: x[k..2 * k].to_vec(),
            x_upper: x[2 * k..].to_vec(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        [&self.p_b[..], &self.x_lower, &self.x_upper].concat()
    }

    pub fn bounds(&self, k: usize) -> AllocationBounds {
        AllocationBounds {
            x_lower: self.x_lower[k],
            x_upper: self.x_upper[k],
        }
    }

    pub fn allocation(&self) -> Vec<AllocationBounds> {
        (0..self.horizon()).map(|k| self.bounds(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    #[default]
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_outer: usize,
    pub max_inner: usize,
    /// Projected-gradient tolerance of the Lagrangian.
    pub inner_tol: f64,
    pub constraint_tol: f64,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    /// Bound on `|p⁺ p⁻|` for the signed power splits.
    pub complementarity_slack: f64,
    pub gradient_mode: GradientMode,
    /// Additional runs from seeded random starting points.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer: 60,
            max_inner: 3000,
            inner_tol: 1e-6,
            constraint_tol: 1e-6,
            initial_penalty: 10.0,
            penalty_growth: 10.0,
            complementarity_slack: 1e-8,
            gradient_mode: GradientMode::Analytic,
            restarts: 0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("inner_tol", self.inner_tol),
            ("constraint_tol", self.constraint_tol),
            ("initial_penalty", self.initial_penalty),
            ("complementarity_slack", self.complementarity_slack),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
        }
        if !(self.penalty_growth > 1.0) {
            return Err(Error::config(
                "penalty_growth",
                format!("must exceed 1, got {}", self.penalty_growth),
            ));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::config(
                "max_outer",
                "iteration caps must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub p_hat: f64,
    pub p_b: f64,
    pub p_b_pos: f64,
    pub p_b_neg: f64,
    pub p_g: f64,
    pub p_g_pos: f64,
    pub p_g_neg: f64,
    pub x_lower: f64,
    pub x_upper: f64,
    /// Energy states at the end of the step.
    pub e_nominal: f64,
    pub de_min: f64,
    pub de_max: f64,
    pub e_expected: f64,
    /// Probability of a downward grid deviation.
    pub p1: f64,
    /// Probability of an upward grid deviation.
    pub p2: f64,
    pub atom_zero: f64,
    pub exp_battery: f64,
    /// `E[ΔP_G · 1{ΔP_G < 0}]`.
    pub exp_grid_down: f64,
    /// `E[ΔP_G · 1{ΔP_G > 0}]`.
    pub exp_grid_up: f64,
    pub grid_q05: f64,
    pub grid_q95: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktReport {
    /// Projected gradient of the Lagrangian, infinity norm.
    pub stationarity: f64,
    pub max_violation: f64,
    pub worst_step: Option<usize>,
    pub worst_kind: Option<LimitKind>,
    /// `max λ_i |g_i|`.
    pub max_complementarity: f64,
    /// `max(|p_G⁺ p_G⁻|, |p_B⁺ p_B⁻|)`.
    pub max_split_product: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverStats {
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSolution {
    pub steps: Vec<StepRecord>,
    pub initial_energy: f64,
    pub objective: f64,
    pub converged: bool,
    pub pairing: Pairing,
    pub kkt: KktReport,
    pub stats: SolverStats,
    /// Multipliers of the `4K` inequality constraints.
    pub multipliers: Vec<f64>,
    /// Accepted augmented-Lagrangian values of every inner solve.
    #[serde(skip)]
    pub inner_traces: Vec<Vec<f64>>,
}

impl ScheduleSolution {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn decision(&self) -> DecisionVector {
        DecisionVector {
            p_b: self.steps.iter().map(|s| s.p_b).collect(),
            x_lower: self.steps.iter().map(|s| s.x_lower).collect(),
            x_upper: self.steps.iter().map(|s| s.x_upper).collect(),
        }
    }

    pub fn allocation(&self) -> Vec<AllocationBounds> {
        self.decision().allocation()
    }

    pub fn trajectory(&self) -> BatteryTrajectory {
        let prefix = |f: fn(&StepRecord) -> f64, first: f64| {
            std::iter::once(first)
                .chain(self.steps.iter().map(f))
                .collect::<Vec<_>>()
        };
        BatteryTrajectory {
            power: self.steps.iter().map(|s| s.p_b).collect(),
            nominal: prefix(|s| s.e_nominal, self.initial_energy),
            de_min: prefix(|s| s.de_min, 0.0),
            de_max: prefix(|s| s.de_max, 0.0),
            expected: prefix(|s| s.e_expected, self.initial_energy),
        }
    }

    /// `Σ_k (1 - p1(k) - p2(k))`.
    pub fn total_atom_mass(&self) -> f64 {
        self.steps.iter().map(|s| s.atom_zero).sum()
    }
}

/// Deterministic schedule that follows the expected prosumption as far as
/// power and energy limits allow.
pub fn greedy_schedule(expected: &[f64], spec: &BatterySpec) -> Vec<f64> {
    let t = spec.step_hours;
    let mut e = spec.e0;
    expected
        .iter()
        .map(|p_hat| {
            let mut p = p_hat.clamp(spec.p_min, spec.p_max);
            if p > 0.0 {
                p = p.min(((e - spec.e_min) / (t * (1.0 + spec.loss))).max(0.0));
            } else {
                p = p.max(-((spec.e_max - e) / (t * (1.0 - spec.loss))).max(0.0));
            }
            e = nominal_step(e, p, spec);
            p
        })
        .collect()
}

struct AlRun {
    x: Vec<f64>,
    lambda: Vec<f64>,
    outer: usize,
    inner: usize,
    converged: bool,
    traces: Vec<Vec<f64>>,
}

#[allow(clippy::too_many_arguments)]
fn augmented_value(
    problem: &Problem,
    cfg: &SolverConfig,
    x: &[f64],
    side: &[f64],
    grad: &mut [f64],
    lambda: &[f64],
    rho: f64,
) -> f64 {
    let f = match cfg.gradient_mode {
        GradientMode::Analytic => problem.objective_and_grad_flat(x, grad),
        GradientMode::FiniteDifference => {
            grad.copy_from_slice(&problem.objective_grad_fd(x, 1e-6));
            problem.objective_flat(x)
        }
    };
    let g = problem.constraints_flat(x);
    let mut w = vec![0.0; g.len()];
    let mut pen = 0.0;
    for i in 0..g.len() {
        w[i] = (lambda[i] + rho * g[i]).max(0.0);
        pen += (w[i] * w[i] - lambda[i] * lambda[i]) / (2.0 * rho);
    }
    problem.add_constraint_vjp(x, &w, side, grad);
    f + pen
}

/// Hessian model of the augmented Lagrangian: the objective is separable,
/// so its curvature is a diagonal taken from one gradient difference, with
/// negative curvature flipped in sign so the model stays definite; the
/// constraints are linear within an orthant, so the penalty contributes
/// `rho J_A^T J_A` over the constraints currently in the penalty.
fn augmented_hessian(
    problem: &Problem,
    x: &[f64],
    side: &[f64],
    lambda: &[f64],
    rho: f64,
) -> DMatrix<f64> {
    let n = x.len();
    let (_, hi) = problem.box_bounds();
    let h = 1e-6;
    let mut g0 = vec![0.0; n];
    let mut g1 = vec![0.0; n];
    problem.objective_and_grad_flat(x, &mut g0);
    let step: Vec<f64> = (0..n)
        .map(|i| if x[i] + h <= hi[i] { h } else { -h })
        .collect();
    let xh: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
    problem.objective_and_grad_flat(&xh, &mut g1);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = ((g1[i] - g0[i]) / step[i]).abs();
    }
    let g = problem.constraints_flat(x);
    let mut w = vec![0.0; g.len()];
    let mut row = vec![0.0; n];
    for c in 0..g.len() {
        if lambda[c] + rho * g[c] <= 0.0 {
            continue;
        }
        w[c] = 1.0;
        row.iter_mut().for_each(|v| *v = 0.0);
        problem.add_constraint_vjp(x, &w, side, &mut row);
        w[c] = 0.0;
        let nz: Vec<usize> = (0..n).filter(|i| row[*i] != 0.0).collect();
        for &a in &nz {
            for &b in &nz {
                m[(a, b)] += rho * row[a] * row[b];
            }
        }
    }
    m
}

fn max_violation(g: &[f64]) -> f64 {
    g.iter().fold(0.0f64, |m, v| m.max(*v))
}

fn kinked(problem: &Problem) -> Vec<bool> {
    let k = problem.horizon();
    (0..3 * k).map(|i| i < k).collect()
}

/// Projected gradient norm of the Lagrangian at `(x, lambda)`. At a kink
/// the residual is the distance of zero from the interval spanned by the
/// one-sided slopes.
fn lagrangian_stationarity(problem: &Problem, x: &[f64], lambda: &[f64]) -> f64 {
    let n = x.len();
    let mut right = vec![0.0; n];
    problem.objective_and_grad_flat(x, &mut right);
    let mut left = right.clone();
    problem.add_constraint_vjp(x, lambda, &vec![1.0; n], &mut right);
    problem.add_constraint_vjp(x, lambda, &vec![-1.0; n], &mut left);
    let (lo, hi) = problem.box_bounds();
    let kinks = kinked(problem);
    let smooth: Vec<bool> = (0..n).map(|i| kinks[i] && x[i] != 0.0).collect();
    let mut worst = projected_grad_norm(x, &right, lo, hi);
    if kinks.iter().any(|k| *k) {
        let o = orthant(x, &right, &left, lo, hi, &smooth);
        worst = 0.0;
        for i in 0..n {
            let r = if kinks[i] && x[i] == 0.0 {
                let (a, b) = (right[i].min(left[i]), right[i].max(left[i]));
                if a <= 0.0 && b >= 0.0 {
                    0.0
                } else {
                    projected_grad_norm(
                        &x[i..=i],
                        &[if a > 0.0 { a } else { b }],
                        &lo[i..=i],
                        &hi[i..=i],
                    )
                }
            } else {
                projected_grad_norm(&x[i..=i], &o.grad[i..=i], &o.lo[i..=i], &o.hi[i..=i])
            };
            worst = worst.max(r);
        }
    }
    worst
}

fn release_pins(problem: &Problem, x: &[f64], lambda: &[f64], pinned: &mut [bool], tol: f64) {
    let n = x.len();
    let mut right = vec![0.0; n];
    problem.objective_and_grad_flat(x, &mut right);
    let mut left = right.clone();
    problem.add_constraint_vjp(x, lambda, &vec![1.0; n], &mut right);
    problem.add_constraint_vjp(x, lambda, &vec![-1.0; n], &mut left);
    for i in 0..n {
        if pinned[i] && (right[i].min(left[i]) > tol || right[i].max(left[i]) < -tol) {
            pinned[i] = false;
        }
    }
}

fn augmented_lagrangian(problem: &Problem, cfg: &SolverConfig, x0: &[f64]) -> AlRun {
    let (lo, hi) = problem.box_bounds();
    let kinks = kinked(problem);
    let mut x = x0.to_vec();
    problem.project(&mut x);
    let mut lambda = vec![0.0; problem.constraint_count()];
    let mut rho = cfg.initial_penalty;
    let mut prev_violation = f64::INFINITY;
    let mut run = AlRun {
        x: Vec::new(),
        lambda: Vec::new(),
        outer: 0,
        inner: 0,
        converged: false,
        traces: Vec::new(),
    };
    let inner = InnerOptions {
        max_iter: cfg.max_inner,
        tol: cfg.inner_tol * 0.1,
        ..InnerOptions::default()
    };
    // kinked coordinates that changed sign between outer iterations are
    // held at zero; the penalty term makes the kink concave and the inner
    // minimizer would otherwise alternate between the two sides
    let mut pinned = vec![false; x.len()];
    let (mut lo_in, mut hi_in) = (lo.to_vec(), hi.to_vec());
    for outer in 1..=cfg.max_outer {
        run.outer = outer;
        for i in 0..x.len() {
            (lo_in[i], hi_in[i]) = if pinned[i] {
                (0.0, 0.0)
            } else {
                (lo[i], hi[i])
            };
        }
        let res = minimize_box_newton(
            |x, side, g| augmented_value(problem, cfg, x, side, g, &lambda, rho),
            |x, side| augmented_hessian(problem, x, side, &lambda, rho),
            &x,
            &lo_in,
            &hi_in,
            &kinks,
            &inner,
        );
        run.inner += res.iterations;
        run.traces.push(res.trace);
        for i in 0..x.len() {
            if kinks[i] && x[i] * res.x[i] < 0.0 {
                pinned[i] = true;
            }
        }
        x = res.x;
        let g = problem.constraints_flat(&x);
        for (l, gi) in lambda.iter_mut().zip(&g) {
            *l = (*l + rho * gi).max(0.0);
        }
        let violation = max_violation(&g);
        if violation <= 0.1 * cfg.constraint_tol
            && lagrangian_stationarity(problem, &x, &lambda) <= cfg.inner_tol
        {
            run.converged = true;
            break;
        }
        if violation <= cfg.constraint_tol {
            // release pins that block a descent direction
            release_pins(problem, &x, &lambda, &mut pinned, cfg.inner_tol);
        }
        if violation > 0.25 * prev_violation && violation > 0.1 * cfg.constraint_tol {
            rho *= cfg.penalty_growth;
        }
        prev_violation = violation;
    }
    run.x = x;
    run.lambda = lambda;
    run
}

fn run_from(problem: &Problem, cfg: &SolverConfig, start: &[f64]) -> AlRun {
    let fixed_everywhere = (0..problem.horizon()).all(|k| problem.allocation_fixed(k));
    if fixed_everywhere {
        return augmented_lagrangian(problem, cfg, start);
    }
    // warm start from the deterministic core
    let core = augmented_lagrangian(&problem.deterministic_core(), cfg, start);
    let mut run = augmented_lagrangian(problem, cfg, &core.x);
    run.outer += core.outer;
    run.inner += core.inner;
    let mut traces = core.traces;
    traces.append(&mut run.traces);
    run.traces = traces;
    run
}

fn better(a: &ScheduleSolution, b: &ScheduleSolution, tol: f64) -> bool {
    let fa = a.kkt.max_violation <= tol;
    let fb = b.kkt.max_violation <= tol;
    match (fa, fb) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => a.objective < b.objective,
        (false, false) => a.kkt.max_violation < b.kkt.max_violation,
    }
}

pub fn solve(problem: &Problem, cfg: &SolverConfig) -> Result<ScheduleSolution> {
    cfg.validate()?;
    problem.spec.validate()?;
    let k = problem.horizon();
    let greedy = greedy_schedule(&problem.expected_prosumption(), &problem.spec);
    let mut starts = vec![[&greedy[..], &vec![0.0; 2 * k]].concat()];
    let (lo, hi) = problem.box_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.restarts {
        starts.push(
            (0..3 * k)
                .map(|i| lo[i] + (hi[i] - lo[i]) * rng.gen::<f64>())
                .collect(),
        );
    }
    let runs: Vec<AlRun> = starts
        .par_iter()
        .map(|s| run_from(problem, cfg, s))
        .collect();
    let mut best: Option<ScheduleSolution> = None;
    let runs_len = runs.len();
    for run in runs {
        let sol = assemble(problem, cfg, run);
        if best
            .as_ref()
            .map_or(true, |b| better(&sol, b, cfg.constraint_tol))
        {
            best = Some(sol);
        }
    }
    let mut best = best.expect("at least one start");
    best.stats.runs = runs_len;
    Ok(best)
}

fn assemble(problem: &Problem, cfg: &SolverConfig, run: AlRun) -> ScheduleSolution {
    let spec = &problem.spec;
    let qc = &problem.quadrature;
    let v = DecisionVector::from_flat(&run.x);
    let k = problem.horizon();
    let t = spec.step_hours;
    let mut e = spec.e0;
    let mut e_exp = spec.e0;
    let (mut de_min, mut de_max) = (0.0, 0.0);
    let steps = (0..k)
        .map(|i| {
            let f = problem.deviation_cdf(i);
            let b = v.bounds(i);
            let p = v.p_b[i];
            let p_hat = problem.expected_prosumption()[i];
            let (p1, p2) = atom_probs(f, b);
            let exp_battery = expected_battery_dev(f, b, qc);
            let ((en, _), (ep, _)) = problem.grid_expectations(i, b.x_lower, b.x_upper);
            let grid = build_grid_dev(f, b);
            e = nominal_step(e, p, spec);
            e_exp = nominal_step(e_exp, p + exp_battery, spec);
            de_min -= t * (1.0 + spec.loss) * b.x_upper;
            de_max -= t * spec.charge_envelope_factor() * b.x_lower;
            let p_g = p_hat - p;
            StepRecord {
                step: i,
                p_hat,
                p_b: p,
                p_b_pos: p.max(0.0),
                p_b_neg: p.min(0.0),
                p_g,
                p_g_pos: p_g.max(0.0),
                p_g_neg: p_g.min(0.0),
                x_lower: b.x_lower,
                x_upper: b.x_upper,
                e_nominal: e,
                de_min,
                de_max,
                e_expected: e_exp,
                p1,
                p2,
                atom_zero: grid.atom_zero,
                exp_battery,
                exp_grid_down: en,
                exp_grid_up: ep,
                grid_q05: grid.quantile(0.05),
                grid_q95: grid.quantile(0.95),
            }
        })
        .collect();
    let mut sol = ScheduleSolution {
        steps,
        initial_energy: spec.e0,
        objective: problem.objective(&v),
        converged: false,
        pairing: problem.pairing,
        kkt: KktReport::default(),
        stats: SolverStats {
            outer_iterations: run.outer,
            inner_iterations: run.inner,
            runs: 1,
        },
        multipliers: run.lambda,
        inner_traces: run.traces,
    };
    sol.kkt = kkt_residuals(&sol, problem);
    sol.converged = run.converged
        && sol.kkt.max_violation <= cfg.constraint_tol
        && sol.kkt.max_split_product <= cfg.complementarity_slack;
    sol
}

/// KKT diagnostics of `sol` (its decision vector and multipliers) on `problem`.
pub fn kkt_residuals(sol: &ScheduleSolution, problem: &Problem) -> KktReport {
    let x = sol.decision().to_flat();
    let g = problem.constraints_flat(&x);
    let kinds = [
        LimitKind::EnergyBelowMin,
        LimitKind::EnergyAboveMax,
        LimitKind::PowerBelowMin,
        LimitKind::PowerAboveMax,
    ];
    let mut report = KktReport::default();
    for (i, gi) in g.iter().enumerate() {
        if *gi > report.max_violation {
            report.max_violation = *gi;
            report.worst_step = Some(i / 4);
            report.worst_kind = Some(kinds[i % 4]);
        }
    }
    let lambda: Vec<f64> = if sol.multipliers.len() == g.len() {
        sol.multipliers.clone()
    } else {
        vec![0.0; g.len()]
    };
    report.max_complementarity = lambda
        .iter()
        .zip(&g)
        .fold(0.0f64, |m, (l, gi)| m.max(l * gi.abs()));
    report.stationarity = lagrangian_stationarity(problem, &x, &lambda);
    report.max_split_product = sol.steps.iter().fold(0.0f64, |m, s| {
        m.max((s.p_g_pos * s.p_g_neg).abs())
            .max((s.p_b_pos * s.p_b_neg).abs())
    });
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::center;
    use crate::mixed::{DoubleLogisticCdf, QuadratureConfig};

    fn single_step(p_hat: f64) -> Problem {
        let f = DoubleLogisticCdf::single(p_hat, 3.0).unwrap();
        let model = center(&[f]);
        build_problem(
            &model,
            &BatterySpec::default(),
            &CostWeights::case1(1),
            &QuadratureConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn presets() {
        let w = CostWeights::case3(24);
        assert_eq!(w.c4[6], 100.0);
        assert_eq!(w.c4[7], 100.0);
        assert_eq!(w.c4[8], 2.0);
        assert!(CostWeights::preset("case4", 24).is_err());
        assert!(CostWeights::case1(24).allocation_fixed(3));
    }

    #[test]
    fn greedy_respects_limits() {
        let spec = BatterySpec::default();
        let p = greedy_schedule(&[4.0, 4.0, -8.0, -8.0, -8.0], &spec);
        assert_eq!(p[0], 4.0);
        assert!((p[1] - 2.55 / 1.05).abs() < 1e-12);
        assert_eq!(p[2], -5.0);
    }

    #[test]
    fn single_step_optima() {
        let sol = solve(&single_step(4.0), &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.steps[0].p_b - 4.0).abs() < 1e-6);
        assert!(sol.objective.abs() < 1e-9);
        let sol = solve(&single_step(-8.0), &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.steps[0].p_b + 5.0).abs() < 1e-6);
        assert!((sol.steps[0].p_g + 3.0).abs() < 1e-6);
    }

    #[test]
    fn perturbed_solution_reports_step() {
        let p = single_step(4.0);
        let mut sol = solve(&p, &SolverConfig::default()).unwrap();
        sol.steps[0].p_b = 6.0;
        let kkt = kkt_residuals(&sol, &p);
        assert_eq!(kkt.worst_step, Some(0));
        assert!(kkt.max_violation > 0.9);
    }
}
