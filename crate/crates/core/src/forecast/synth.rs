//! Deterministic synthetic quantile forecasts standing in for a learned
//! forecaster: 24 hourly steps from 06:00, 99 levels from 1% to 99%.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{QuantileForecast, QuantileStep, DEFAULT_START_HOUR};
use crate::error::{Error, Result};
use crate::mixed::DoubleLogisticCdf;

const HORIZON: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthProfile {
    /// PV surplus dominates from late morning to afternoon.
    PvDominant,
    /// One quantile curve repeated for every step.
    Flat,
    /// Like `PvDominant`, with a rare high-consumption peak at the first step.
    AsymmetricMorning,
}

impl FromStr for SynthProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pv_dominant" => Ok(Self::PvDominant),
            "flat" => Ok(Self::Flat),
            "asymmetric_morning" => Ok(Self::AsymmetricMorning),
            other => Err(Error::UnknownProfile(other.to_string())),
        }
    }
}

impl fmt::Display for SynthProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PvDominant => "pv_dominant",
            Self::Flat => "flat",
            Self::AsymmetricMorning => "asymmetric_morning",
        })
    }
}

fn bump(h: f64, center: f64, width: f64) -> f64 {
    (-0.5 * ((h - center) / width).powi(2)).exp()
}

/// Mean prosumption (kW) and spread (kW) of the PV-dominated household.
fn pv_day(hour: f64, pv_peak: f64, load_scale: f64) -> (f64, f64) {
    let load = load_scale * (0.45 + 0.6 * bump(hour, 7.5, 1.0) + 1.0 * bump(hour, 19.5, 1.5));
    let daylight = ((hour - 6.0) / 14.0 * std::f64::consts::PI).sin();
    let pv = if (6.0..=20.0).contains(&hour) {
        pv_peak * daylight.max(0.0).powf(1.5)
    } else {
        0.0
    };
    let spread = 0.12 + 0.05 * load + 0.16 * pv;
    (load - pv, spread)
}

/// Right-skewed mixture with the given mean: a dominant core and a wider,
/// higher component (clouds cut PV, appliances add load).
fn skewed(mean: f64, spread: f64, tail_mass: f64, tail_shift: f64) -> DoubleLogisticCdf {
    let core_s = 1.0 / spread;
    let tail_s = 1.0 / (1.8 * spread);
    let raw = DoubleLogisticCdf::new_unchecked(
        1.0 - tail_mass,
        core_s,
        0.0,
        tail_mass,
        tail_s,
        tail_shift * spread,
    );
    raw.shifted(mean - raw.mean())
}

fn levels() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

/// Quantile curve of `cdf` with tiny seeded jitter on the values.
fn sample_curve(cdf: &DoubleLogisticCdf, jitter_kw: f64, rng: &mut ChaCha8Rng) -> QuantileStep {
    let levels = levels();
    let values = levels
        .iter()
        .map(|q| cdf.quantile(*q) + jitter_kw * (rng.gen::<f64>() - 0.5))
        .collect();
    QuantileStep { levels, values }
}

/// Ground-truth per-step CDFs behind [`synth_forecast`].
pub fn synth_truth(seed: u64, profile: SynthProfile) -> Vec<DoubleLogisticCdf> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pv_peak = 5.0 * (0.9 + 0.2 * rng.gen::<f64>());
    let load_scale = 0.9 + 0.2 * rng.gen::<f64>();
    match profile {
        SynthProfile::Flat => {
            let mean = 0.3 + 0.4 * rng.gen::<f64>();
            let spread = 0.25 + 0.1 * rng.gen::<f64>();
            vec![skewed(mean, spread, 0.2, 1.5); HORIZON]
        }
        SynthProfile::PvDominant | SynthProfile::AsymmetricMorning => (0..HORIZON)
            .map(|k| {
                let hour = (DEFAULT_START_HOUR + k as f64) % 24.0;
                let (mean, spread) = pv_day(hour, pv_peak, load_scale);
                let tail_mass = 0.2 + 0.1 * rng.gen::<f64>();
                if k == 0 && profile == SynthProfile::AsymmetricMorning {
                    // occasional early appliance use around 4-5 kW
                    let core = 1.0 / 0.15;
                    let raw = DoubleLogisticCdf::new_unchecked(0.88, core, 0.4, 0.12, 1.6, 4.5);
                    raw.shifted(mean - raw.mean())
                } else {
                    skewed(mean, spread, tail_mass, 1.2)
                }
            })
            .collect(),
    }
}

/// Synthetic quantile forecast for `profile`, deterministic in `seed`.
pub fn synth_forecast(seed: u64, profile: &str) -> Result<QuantileForecast> {
    let profile: SynthProfile = profile.parse()?;
    Ok(synth_forecast_profile(seed, profile))
}

pub fn synth_forecast_profile(seed: u64, profile: SynthProfile) -> QuantileForecast {
    let truth = synth_truth(seed, profile);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let steps = match profile {
        SynthProfile::Flat => {
            let curve = sample_curve(&truth[0], 0.004, &mut rng);
            vec![curve; HORIZON]
        }
        _ => truth
            .iter()
            .map(|c| sample_curve(c, 0.004, &mut rng))
            .collect(),
    };
    QuantileForecast {
        step_hours: 1.0,
        start_hour: DEFAULT_START_HOUR,
        steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = synth_forecast(1, "pv_dominant").unwrap();
        let b = synth_forecast(1, "pv_dominant").unwrap();
        assert_eq!(a, b);
        assert_ne!(a, synth_forecast(2, "pv_dominant").unwrap());
    }

    #[test]
    fn flat_shares_one_curve() {
        let f = synth_forecast(1, "flat").unwrap();
        assert_eq!(f.horizon_steps(), 24);
        assert!(f.steps.iter().all(|s| *s == f.steps[0]));
    }

    #[test]
    fn unknown_profile() {
        assert!(matches!(
            synth_forecast(1, "sunny"),
            Err(Error::UnknownProfile(_))
        ));
    }

    #[test]
    fn pv_midday_is_negative() {
        for seed in 0..20 {
            let truth = synth_truth(seed, SynthProfile::PvDominant);
            for (k, c) in truth.iter().enumerate().take(11).skip(4) {
                assert!(c.mean() < 0.0, "seed {seed} step {k}: {}", c.mean());
            }
            assert!(truth.iter().all(|c| c.validate().is_ok()));
        }
    }
}
