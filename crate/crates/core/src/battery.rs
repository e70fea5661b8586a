//! Battery energy dynamics under interval-bounded power deviations.
//!
//! Positive battery power discharges. The nominal state follows the
//! expected prosumption only; the envelopes `ΔE_min <= 0 <= ΔE_max`
//! accumulate the worst-case energy offset that deviations inside the
//! allocation bounds can cause, with the deviation losses split off by the
//! triangle inequality.
//!
//! Splitting the loss bounds the true state from below only. A charging
//! deviation on top of a discharging nominal power also cancels part of the
//! nominal loss, so under [`EnvelopeRule::ExactLoss`] the upper envelope
//! charges deviations at `1 + μ` instead of `1 - μ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixed::AllocationBounds;

/// Absolute tolerance (kWh, kW) for every physical-limit check.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Loss factor applied to charging deviations in the upper envelope.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeRule {
    /// `ΔE_max -= t (1 + μ) x_lower`: holds pathwise under exact losses.
    #[default]
    ExactLoss,
    /// `ΔE_max -= t (1 - μ) x_lower`: the split-loss form.
    Split,
}

impl std::str::FromStr for EnvelopeRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_loss" => Ok(Self::ExactLoss),
            "split" => Ok(Self::Split),
            other => Err(Error::config(
                "envelope",
                format!("unknown rule '{other}', expected exact_loss or split"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    pub e_min: f64,
    pub e_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Charging and discharging loss coefficient.
    pub loss: f64,
    pub e0: f64,
    pub step_hours: f64,
    #[serde(default)]
    pub envelope: EnvelopeRule,
}

impl Default for BatterySpec {
    /// 13.5 kWh / ±5 kW home battery with 5% losses, starting half full.
    fn default() -> Self {
        Self {
            e_min: 0.0,
            e_max: 13.5,
            p_min: -5.0,
            p_max: 5.0,
            loss: 0.05,
            e0: 6.75,
            step_hours: 1.0,
            envelope: EnvelopeRule::ExactLoss,
        }
    }
}

impl BatterySpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleSpec(m));
        if !(self.e_min <= self.e_max) {
            return bad(format!("e_min {} exceeds e_max {}", self.e_min, self.e_max));
        }
        if !(self.e0 >= self.e_min && self.e0 <= self.e_max) {
            return bad(format!(
                "initial energy {} outside [{}, {}]",
                self.e0, self.e_min, self.e_max
            ));
        }
        if !(self.p_min < 0.0 && self.p_max > 0.0) {
            return bad(format!(
                "power limits must satisfy p_min < 0 < p_max, got [{}, {}]",
                self.p_min, self.p_max
            ));
        }
        if !(self.loss >= 0.0 && self.loss < 1.0) {
            return bad(format!("loss coefficient {} outside [0, 1)", self.loss));
        }
        if !(self.step_hours > 0.0) {
            return bad(format!(
                "step duration {} must be positive",
                self.step_hours
            ));
        }
        Ok(())
    }

    /// Multiplier of `-t x_lower` in the upper envelope.
    pub fn charge_envelope_factor(&self) -> f64 {
        match self.envelope {
            EnvelopeRule::ExactLoss => 1.0 + self.loss,
            EnvelopeRule::Split => 1.0 - self.loss,
        }
    }
}

/// `e - t p - t μ |p|`.
#[inline]
pub fn nominal_step(e: f64, p_b: f64, spec: &BatterySpec) -> f64 {
    let t = spec.step_hours;
    e - t * p_b - t * spec.loss * p_b.abs()
}

/// One step of the minimum/maximum energy envelopes.
#[inline]
pub fn envelope_step(
    de_min: f64,
    de_max: f64,
    b: AllocationBounds,
    spec: &BatterySpec,
) -> (f64, f64) {
    let t = spec.step_hours;
    (
        de_min - t * (1.0 + spec.loss) * b.x_upper,
        de_max - t * spec.charge_envelope_factor() * b.x_lower,
    )
}

/// Expected state driven by the expected total power `p_b + exp_dev`;
/// losses of the stochastic part are not modelled.
#[inline]
pub fn expected_state_step(e_exp: f64, p_b: f64, exp_dev: f64, spec: &BatterySpec) -> f64 {
    nominal_step(e_exp, p_b + exp_dev, spec)
}

/// Exact-loss state update for a realized battery power.
#[inline]
pub fn exact_step(e: f64, realized_power: f64, spec: &BatterySpec) -> f64 {
    nominal_step(e, realized_power, spec)
}

/// State trajectories of length `K + 1` (index 0 is the initial state) and
/// the `K` nominal powers that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryTrajectory {
    pub power: Vec<f64>,
    pub nominal: Vec<f64>,
    pub de_min: Vec<f64>,
    pub de_max: Vec<f64>,
    pub expected: Vec<f64>,
}

impl BatteryTrajectory {
    pub fn horizon(&self) -> usize {
        self.power.len()
    }

    pub fn lower_envelope(&self) -> Vec<f64> {
        self.nominal
            .iter()
            .zip(&self.de_min)
            .map(|(e, d)| e + d)
            .collect()
    }

    pub fn upper_envelope(&self) -> Vec<f64> {
        self.nominal
            .iter()
            .zip(&self.de_max)
            .map(|(e, d)| e + d)
            .collect()
    }
}

/// Rolls the nominal state, both envelopes and the expected state forward.
/// `expected_devs[k]` is the expected battery deviation at step `k`.
pub fn simulate_trajectory(
    spec: &BatterySpec,
    power: &[f64],
    bounds: &[AllocationBounds],
    expected_devs: &[f64],
) -> Result<BatteryTrajectory> {
    let k = power.len();
    for (what, got) in [
        ("allocation bounds", bounds.len()),
        ("expected deviations", expected_devs.len()),
    ] {
        if got != k {
            return Err(Error::HorizonMismatch {
                what,
                got,
                expected: k,
            });
        }
    }
    let mut nominal = Vec::with_capacity(k + 1);
    let mut de_min = Vec::with_capacity(k + 1);
    let mut de_max = Vec::with_capacity(k + 1);
    let mut expected = Vec::with_capacity(k + 1);
    nominal.push(spec.e0);
    de_min.push(0.0);
    de_max.push(0.0);
    expected.push(spec.e0);
    for i in 0..k {
        nominal.push(nominal_step(nominal[i], power[i], spec));
        let (lo, hi) = envelope_step(de_min[i], de_max[i], bounds[i], spec);
        de_min.push(lo);
        de_max.push(hi);
        expected.push(expected_state_step(
            expected[i],
            power[i],
            expected_devs[i],
            spec,
        ));
    }
    Ok(BatteryTrajectory {
        power: power.to_vec(),
        nominal,
        de_min,
        de_max,
        expected,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    EnergyBelowMin,
    EnergyAboveMax,
    PowerBelowMin,
    PowerAboveMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Step index; for energy limits the index of the state (1..=K).
    pub step: usize,
    pub kind: LimitKind,
    /// Amount by which the limit is exceeded.
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_violation(&self) -> f64 {
        self.violations.iter().fold(0.0, |m, v| m.max(v.magnitude))
    }

    pub fn first(&self, kind: LimitKind) -> Option<&Violation> {
        self.violations.iter().find(|v| v.kind == kind)
    }
}

/// Checks envelopes against the energy limits and the power interval
/// `[p_B + x_lower, p_B + x_upper]` against the power limits.
pub fn check_feasible(
    traj: &BatteryTrajectory,
    bounds: &[AllocationBounds],
    spec: &BatterySpec,
) -> Result<FeasibilityReport> {
    let k = traj.horizon();
    if bounds.len() != k {
        return Err(Error::HorizonMismatch {
            what: "allocation bounds",
            got: bounds.len(),
            expected: k,
        });
    }
    if traj.nominal.len() != k + 1 || traj.de_min.len() != k + 1 || traj.de_max.len() != k + 1 {
        return Err(Error::HorizonMismatch {
            what: "state trajectory",
            got: traj.nominal.len(),
            expected: k + 1,
        });
    }
    let mut violations = Vec::new();
    for (i, (p, b)) in traj.power.iter().zip(bounds).enumerate() {
        let low = spec.p_min - (p + b.x_lower);
        if low > FEASIBILITY_TOL {
            violations.push(Violation {
                step: i,
                kind: LimitKind::PowerBelowMin,
                magnitude: low,
            });
        }
        let high = p + b.x_upper - spec.p_max;
        if high > FEASIBILITY_TOL {
            violations.push(Violation {
                step: i,
                kind: LimitKind::PowerAboveMax,
                magnitude: high,
            });
        }
    }
    for i in 1..=k {
        let low = spec.e_min - (traj.nominal[i] + traj.de_min[i]);
        if low > FEASIBILITY_TOL {
            violations.push(Violation {
                step: i,
                kind: LimitKind::EnergyBelowMin,
                magnitude: low,
            });
        }
        let high = traj.nominal[i] + traj.de_max[i] - spec.e_max;
        if high > FEASIBILITY_TOL {
            violations.push(Violation {
                step: i,
                kind: LimitKind::EnergyAboveMax,
                magnitude: high,
            });
        }
    }
    violations.sort_by_key(|v| v.step);
    Ok(FeasibilityReport { violations })
}
