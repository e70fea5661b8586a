//! The stochastic program over `(p_B, x_lower, x_upper)`.
//!
//! Decision vectors are flattened block-wise: `[p_B(0..K), x_lower(0..K),
//! x_upper(0..K)]`. The state recursions and the power balance are
//! eliminated by forward substitution, which leaves a box-constrained
//! objective plus `4K` inequality constraints in `g(v) <= 0` form, ordered
//! per step as `[energy >= e_min, energy <= e_max, power >= p_min, power <= p_max]`.

use serde::{Deserialize, Serialize};

use super::{CostWeights, DecisionVector};
use crate::battery::BatterySpec;
use crate::error::{Error, Result};
use crate::forecast::ProsumptionModel;
use crate::mixed::{
    atom_probs, grid_neg_with_deriv, grid_pos_with_deriv, lower_cutoff, upper_cutoff,
    DoubleLogisticCdf, QuadratureConfig,
};

/// How the deviation probabilities are paired with the grid expectations
/// in the cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// `c3 p2 E[up] + c4 p1 |E[down]|`: every term non-negative.
    #[default]
    Matched,
    /// `c3 p1 E[up] + c4 p2 E[down]`.
    LiteralPaper,
}

impl std::str::FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" | "matched" => Ok(Self::Matched),
            "literal_paper_pairing" | "literal" => Ok(Self::LiteralPaper),
            other => Err(Error::config(
                "pairing",
                format!("unknown pairing '{other}'"),
            )),
        }
    }
}

/// Slope of `|p|`: the sign of `p`, or `zero_side` at `p == 0`.
#[inline]
pub fn abs_slope(p: f64, zero_side: f64) -> f64 {
    if p > 0.0 {
        1.0
    } else if p < 0.0 {
        -1.0
    } else {
        zero_side
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StepData {
    pub f_dev: DoubleLogisticCdf,
    pub p_hat: f64,
    pub c_lo: f64,
    pub c_hi: f64,
    pub panels: usize,
}

/// Per-step value of the cost and its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepCost {
    pub value: f64,
    pub d_p: f64,
    pub d_lower: f64,
    pub d_upper: f64,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: BatterySpec,
    pub weights: CostWeights,
    pub quadrature: QuadratureConfig,
    pub pairing: Pairing,
    pub(crate) steps: Vec<StepData>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

pub fn build_problem(
    model: &ProsumptionModel,
    spec: &BatterySpec,
    weights: &CostWeights,
    qc: &QuadratureConfig,
) -> Result<Problem> {
    model.validate()?;
    spec.validate()?;
    qc.validate()?;
    let k = model.horizon();
    weights.validate(k)?;
    if (model.step_hours - spec.step_hours).abs() > 1e-12 {
        return Err(Error::Validation(format!(
            "forecast step of {} h differs from battery step of {} h",
            model.step_hours, spec.step_hours
        )));
    }
    let steps = model
        .deviations
        .iter()
        .zip(&model.expected)
        .map(|(f, p_hat)| StepData {
            f_dev: *f,
            p_hat: *p_hat,
            c_lo: lower_cutoff(f, qc.tail_cutoff_prob),
            c_hi: upper_cutoff(f, qc.tail_cutoff_prob),
            panels: qc.panels_for(f),
        })
        .collect();
    let mut lower = vec![0.0; 3 * k];
    let mut upper = vec![0.0; 3 * k];
    let span = spec.p_max - spec.p_min;
    for i in 0..k {
        lower[i] = spec.p_min;
        upper[i] = spec.p_max;
        if !weights.allocation_fixed(i) {
            lower[k + i] = -span;
            upper[2 * k + i] = span;
        }
    }
    Ok(Problem {
        spec: *spec,
        weights: weights.clone(),
        quadrature: *qc,
        pairing: Pairing::default(),
        steps,
        lower,
        upper,
    })
}

impl Problem {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn dim(&self) -> usize {
        3 * self.horizon()
    }

    pub fn constraint_count(&self) -> usize {
        4 * self.horizon()
    }

    pub fn with_pairing(mut self, pairing: Pairing) -> Self {
        self.pairing = pairing;
        self
    }

    /// Pins `p_B` to `power`, leaving only the allocation bounds free.
    pub fn with_fixed_power(mut self, power: &[f64]) -> Result<Self> {
        let k = self.horizon();
        if power.len() != k {
            return Err(Error::HorizonMismatch {
                what: "fixed battery power",
                got: power.len(),
                expected: k,
            });
        }
        for (i, p) in power.iter().enumerate() {
            let p = p.clamp(self.spec.p_min, self.spec.p_max);
            self.lower[i] = p;
            self.upper[i] = p;
        }
        Ok(self)
    }

    /// Drops the allocation bounds at every step (the deterministic core).
    pub fn deterministic_core(&self) -> Self {
        let mut p = self.clone();
        let k = self.horizon();
        for i in k..3 * k {
            p.lower[i] = 0.0;
            p.upper[i] = 0.0;
        }
        p
    }

    /// True when step `k` has no deviation cost, so its bounds stay at zero.
    pub fn allocation_fixed(&self, k: usize) -> bool {
        let n = self.horizon();
        self.lower[n + k] == 0.0 && self.upper[2 * n + k] == 0.0
    }

    pub fn box_bounds(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }

    pub fn expected_prosumption(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.p_hat).collect()
    }

    pub fn deviation_cdf(&self, k: usize) -> &DoubleLogisticCdf {
        &self.steps[k].f_dev
    }

    /// `(c_lo, c_hi)`: truncation points of the grid-deviation integrals.
    pub fn cutoffs(&self, k: usize) -> (f64, f64) {
        (self.steps[k].c_lo, self.steps[k].c_hi)
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((x, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = x.clamp(*lo, *hi);
        }
    }

    /// `(E[down], dE/dx_lower)` and `(E[up], dE/dx_upper)` at step `k`.
    pub fn grid_expectations(
        &self,
        k: usize,
        x_lower: f64,
        x_upper: f64,
    ) -> ((f64, f64), (f64, f64)) {
        let s = &self.steps[k];
        let n = s.panels;
        (
            grid_neg_with_deriv(&s.f_dev, s.c_lo, x_lower, n),
            grid_pos_with_deriv(&s.f_dev, s.c_hi, x_upper, n),
        )
    }

    pub fn step_cost(&self, k: usize, p: f64, x_lower: f64, x_upper: f64) -> StepCost {
        let w = &self.weights;
        let pg = self.steps[k].p_hat - p;
        let (value, d_p) = if pg > 0.0 {
            (w.c1 * pg * pg, -2.0 * w.c1 * pg)
        } else {
            (w.c2 * pg * pg, -2.0 * w.c2 * pg)
        };
        let mut out = StepCost {
            value,
            d_p,
            ..StepCost::default()
        };
        let (c3, c4) = (w.c3[k], w.c4[k]);
        if c3 == 0.0 && c4 == 0.0 {
            return out;
        }
        let f = &self.steps[k].f_dev;
        let (p1, p2) = atom_probs(f, crate::mixed::AllocationBounds { x_lower, x_upper });
        let (f_lo, f_hi) = (f.pdf(x_lower), f.pdf(x_upper));
        let ((en, den), (ep, dep)) = self.grid_expectations(k, x_lower, x_upper);
        match self.pairing {
            Pairing::Matched => {
                out.value += c3 * p2 * ep - c4 * p1 * en;
                out.d_lower = -c4 * (f_lo * en + p1 * den);
                out.d_upper = c3 * (-f_hi * ep + p2 * dep);
            }
            Pairing::LiteralPaper => {
                out.value += c3 * p1 * ep + c4 * p2 * en;
                out.d_lower = c3 * f_lo * ep + c4 * p2 * den;
                out.d_upper = c3 * p1 * dep - c4 * f_hi * en;
            }
        }
        out
    }

    pub fn objective(&self, v: &DecisionVector) -> f64 {
        (0..self.horizon())
            .map(|k| {
                self.step_cost(k, v.p_b[k], v.x_lower[k], v.x_upper[k])
                    .value
            })
            .sum()
    }

    pub fn objective_flat(&self, x: &[f64]) -> f64 {
        let k = self.horizon();
        (0..k)
            .map(|i| self.step_cost(i, x[i], x[k + i], x[2 * k + i]).value)
            .sum()
    }

    /// Objective and its analytic gradient over the flat vector.
    pub fn objective_and_grad_flat(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let k = self.horizon();
        let mut total = 0.0;
        for i in 0..k {
            let c = self.step_cost(i, x[i], x[k + i], x[2 * k + i]);
            total += c.value;
            grad[i] = c.d_p;
            grad[k + i] = c.d_lower;
            grad[2 * k + i] = c.d_upper;
        }
        total
    }

    pub fn objective_grad(&self, v: &DecisionVector) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.objective_and_grad_flat(&v.to_flat(), &mut g);
        g
    }

    /// Central finite-difference gradient with step `h` (kW).
    pub fn objective_grad_fd(&self, x: &[f64], h: f64) -> Vec<f64> {
        let mut work = x.to_vec();
        (0..x.len())
            .map(|i| {
                work[i] = x[i] + h;
                let fp = self.objective_flat(&work);
                work[i] = x[i] - h;
                let fm = self.objective_flat(&work);
                work[i] = x[i];
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    /// Energy states `e(1..=K)`.
    pub fn energy_states(&self, x: &[f64]) -> Vec<f64> {
        let k = self.horizon();
        let t = self.spec.step_hours;
        let mu = self.spec.loss;
        let mut e = self.spec.e0;
        (0..k)
            .map(|i| {
                e -= t * (x[i] + mu * x[i].abs());
                e
            })
            .collect()
    }

    /// All `4K` constraint values in `g <= 0` form.
    pub fn constraints_flat(&self, x: &[f64]) -> Vec<f64> {
        let k = self.horizon();
        let s = &self.spec;
        let t = s.step_hours;
        let e = self.energy_states(x);
        let mut g = Vec::with_capacity(4 * k);
        let (mut de_min, mut de_max) = (0.0, 0.0);
        for i in 0..k {
            let (p, xl, xu) = (x[i], x[k + i], x[2 * k + i]);
            de_min -= t * (1.0 + s.loss) * xu;
            de_max -= t * s.charge_envelope_factor() * xl;
            g.push(s.e_min - e[i] - de_min);
            g.push(e[i] + de_max - s.e_max);
            g.push(s.p_min - p - xl);
            g.push(p + xu - s.p_max);
        }
        g
    }

    pub fn constraints(&self, v: &DecisionVector) -> Vec<f64> {
        self.constraints_flat(&v.to_flat())
    }

    /// Adds `Jᵀ w` (constraint Jacobian transposed times `w`) to `out`. At
    /// `p_B(k) == 0` the slope of `|p_B(k)|` is taken as `zero_side[k]`.
    pub fn add_constraint_vjp(&self, x: &[f64], w: &[f64], zero_side: &[f64], out: &mut [f64]) {
        let k = self.horizon();
        let t = self.spec.step_hours;
        let mu = self.spec.loss;
        // suffix sums over the states each step feeds into
        let (mut s_lo, mut s_hi) = (0.0, 0.0);
        for i in (0..k).rev() {
            s_lo += w[4 * i];
            s_hi += w[4 * i + 1];
            let (w_pmin, w_pmax) = (w[4 * i + 2], w[4 * i + 3]);
            out[i] +=
                t * (1.0 + mu * abs_slope(x[i], zero_side[i])) * (s_lo - s_hi) - w_pmin + w_pmax;
            out[k + i] += -t * self.spec.charge_envelope_factor() * s_hi - w_pmin;
            out[2 * k + i] += t * (1.0 + mu) * s_lo + w_pmax;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::center;

    fn problem(weights: CostWeights) -> Problem {
        let f = DoubleLogisticCdf::new(0.7, 2.0, -0.3, 0.3, 0.8, 0.5).unwrap();
        let model = center(&[f.shifted(1.0), f.shifted(-2.0), f]);
        build_problem(
            &model,
            &BatterySpec::default(),
            &weights,
            &QuadratureConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn dimensions_and_fixed_bounds() {
        let p = problem(CostWeights::case1(3));
        assert_eq!(p.dim(), 9);
        assert!((0..3).all(|k| p.allocation_fixed(k)));
        let p = problem(CostWeights::case2(3));
        assert!((0..3).all(|k| !p.allocation_fixed(k)));
    }

    #[test]
    fn constraint_vjp_matches_differences() {
        let p = problem(CostWeights::case2(3));
        let x = [1.0, -2.0, 0.3, -0.5, -1.0, 0.0, 0.2, 0.7, 1.5];
        let side = [0.0; 9];
        let w: Vec<f64> = (0..12).map(|i| 0.1 * (i as f64 + 1.0)).collect();
        let mut vjp = vec![0.0; 9];
        p.add_constraint_vjp(&x, &w, &side, &mut vjp);
        for j in 0..9 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += 1e-6;
            xm[j] -= 1e-6;
            let gp = p.constraints_flat(&xp);
            let gm = p.constraints_flat(&xm);
            let fd: f64 = (0..12).map(|i| w[i] * (gp[i] - gm[i]) / 2e-6).sum();
            assert!((fd - vjp[j]).abs() < 1e-6, "{j}: {fd} vs {}", vjp[j]);
        }
    }

    #[test]
    fn pairing_parses() {
        assert_eq!("default".parse::<Pairing>().unwrap(), Pairing::Matched);
        assert_eq!(
            "literal_paper_pairing".parse::<Pairing>().unwrap(),
            Pairing::LiteralPaper
        );
        assert!("other".parse::<Pairing>().is_err());
    }
}
