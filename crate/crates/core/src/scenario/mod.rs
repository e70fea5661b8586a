//! Scenario files, the end-to-end pipeline and cross-case reports.
//!
//! A scenario is one flat TOML file; every key is optional and falls back
//! to the Case-2 defaults below. Keys:
//!
//! | key | meaning |
//! |---|---|
//! | `name` | label used in summaries |
//! | `forecast_file` | quantile CSV (`step,level,value_kw`); excludes `synthetic_profile` |
//! | `synthetic_profile` | `pv_dominant`, `flat` or `asymmetric_morning` |
//! | `seed` | synthetic forecast, solver restarts and Monte-Carlo draws |
//! | `case` | weight preset `case1`, `case2` or `case3`; excludes `c1`..`c4` |
//! | `c1`, `c2` | nominal import / export weights |
//! | `c3`, `c4` | deviation weights, a number or one number per step |
//! | `pairing` | `default` or `literal_paper_pairing` |
//! | `e_min`, `e_max`, `p_min`, `p_max`, `loss`, `e0`, `step_hours` | battery |
//! | `envelope` | `exact_loss` or `split` |
//! | `node_count`, `tail_cutoff_prob` | quadrature |
//! | `max_outer`, `max_inner`, `inner_tol`, `constraint_tol`, `initial_penalty`, `penalty_growth`, `complementarity_slack`, `gradient_mode`, `restarts` | solver |
//! | `samples`, `antithetic` | Monte Carlo |
//! | `output_dir` | where `run` writes its files |

mod run;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use run::{
    compare_cases, compare_solutions, fit_stage, load_run, run_scenario, solve_stage,
    validate_stage, write_cross_case_json, CaseColumn, CrossCaseReport, PairDifference,
    RunArtifacts, RunOutcome, FITTED_FILE, MONTECARLO_FILE, PLOT_FILE, SCENARIO_FILE,
    SOLUTION_FILE, SUMMARY_FILE,
};

use crate::battery::{BatterySpec, EnvelopeRule};
use crate::error::{Error, Result};
use crate::forecast::{parse_quantile_file, synth_forecast, QuantileForecast, SynthProfile};
use crate::mixed::QuadratureConfig;
use crate::montecarlo::McConfig;
use crate::scheduler::{CostWeights, GradientMode, Pairing, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum ForecastSource {
    File(PathBuf),
    Synthetic(SynthProfile),
}

/// A number applied to every step, or one number per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepWeight {
    Uniform(f64),
    PerStep(Vec<f64>),
}

impl StepWeight {
    fn expand(&self, field: &str, horizon: usize) -> Result<Vec<f64>> {
        match self {
            Self::Uniform(c) => Ok(vec![*c; horizon]),
            Self::PerStep(v) if v.len() == horizon => Ok(v.clone()),
            Self::PerStep(v) => Err(Error::config(
                field,
                format!("has {} entries, forecast has {horizon} steps", v.len()),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightsSpec {
    Preset(String),
    Explicit {
        c1: f64,
        c2: f64,
        c3: StepWeight,
        c4: StepWeight,
    },
}

impl WeightsSpec {
    pub fn resolve(&self, horizon: usize) -> Result<CostWeights> {
        let w = match self {
            Self::Preset(name) => CostWeights::preset(name, horizon)?,
            Self::Explicit { c1, c2, c3, c4 } => CostWeights {
                c1: *c1,
                c2: *c2,
                c3: c3.expand("c3", horizon)?,
                c4: c4.expand("c4", horizon)?,
            },
        };
        w.validate(horizon)?;
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub source: ForecastSource,
    pub seed: u64,
    pub battery: BatterySpec,
    pub weights: WeightsSpec,
    pub pairing: Pairing,
    pub solver: SolverConfig,
    pub quadrature: QuadratureConfig,
    pub mc: McConfig,
    pub output_dir: PathBuf,
}

/// On-disk form: every key optional, unknown keys rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forecast_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic_profile: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c3: Option<StepWeight>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c4: Option<StepWeight>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairing: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_hours: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_cutoff_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_outer: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_inner: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_penalty: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty_growth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complementarity_slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gradient_mode: Option<GradientMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antithetic: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn pairing_name(p: Pairing) -> &'static str {
    match p {
        Pairing::Matched => "default",
        Pairing::LiteralPaper => "literal_paper_pairing",
    }
}

fn envelope_name(e: EnvelopeRule) -> &'static str {
    match e {
        EnvelopeRule::ExactLoss => "exact_loss",
        EnvelopeRule::Split => "split",
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            // toml reports unknown keys as "unknown field `x`, expected ..."
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.starts_with("unknown field"))
                .map(str::to_string)
                .or_else(|| {
                    e.span().map(|s| {
                        let line_start = text[..s.start].rfind('\n').map_or(0, |i| i + 1);
                        text[line_start..]
                            .split('=')
                            .next()
                            .unwrap_or("")
                            .trim()
                            .to_string()
                    })
                })
                .filter(|f| !f.is_empty())
                .unwrap_or_else(|| "scenario".into());
            Error::config(field, msg)
        })
    }

    /// Resolves against the defaults. Relative `forecast_file` paths are
    /// taken relative to `base`.
    pub fn resolve(self, base: Option<&Path>) -> Result<ScenarioConfig> {
        let source = match (self.forecast_file, self.synthetic_profile) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "forecast_file",
                    "give either forecast_file or synthetic_profile, not both",
                ))
            }
            (Some(p), None) => ForecastSource::File(match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }),
            (None, Some(name)) => ForecastSource::Synthetic(name.parse().map_err(|_| {
                Error::config("synthetic_profile", format!("unknown profile '{name}'"))
            })?),
            (None, None) => ForecastSource::Synthetic(SynthProfile::PvDominant),
        };
        let explicit = [
            self.c1.is_some(),
            self.c2.is_some(),
            self.c3.is_some(),
            self.c4.is_some(),
        ];
        let weights = match (&self.case, explicit.iter().any(|b| *b)) {
            (Some(_), true) => {
                return Err(Error::config(
                    "case",
                    "give either case or c1..c4, not both",
                ))
            }
            (Some(name), false) => {
                CostWeights::preset(name, 1)?;
                WeightsSpec::Preset(name.clone())
            }
            (None, true) => {
                let missing = ["c1", "c2", "c3", "c4"]
                    .iter()
                    .zip(explicit)
                    .find(|(_, set)| !set);
                if let Some((field, _)) = missing {
                    return Err(Error::config(
                        *field,
                        "explicit weights need all of c1, c2, c3 and c4",
                    ));
                }
                WeightsSpec::Explicit {
                    c1: self.c1.unwrap_or_default(),
                    c2: self.c2.unwrap_or_default(),
                    c3: self.c3.unwrap_or(StepWeight::Uniform(0.0)),
                    c4: self.c4.unwrap_or(StepWeight::Uniform(0.0)),
                }
            }
            (None, false) => WeightsSpec::Preset("case2".into()),
        };
        let pairing = match self.pairing {
            Some(p) => p.parse()?,
            None => Pairing::default(),
        };
        let d = BatterySpec::default();
        let battery = BatterySpec {
            e_min: self.e_min.unwrap_or(d.e_min),
            e_max: self.e_max.unwrap_or(d.e_max),
            p_min: self.p_min.unwrap_or(d.p_min),
            p_max: self.p_max.unwrap_or(d.p_max),
            loss: self.loss.unwrap_or(d.loss),
            e0: self.e0.unwrap_or(d.e0),
            step_hours: self.step_hours.unwrap_or(d.step_hours),
            envelope: match self.envelope {
                Some(e) => e.parse()?,
                None => d.envelope,
            },
        };
        battery.validate()?;
        let seed = self.seed.unwrap_or(0);
        let s = SolverConfig::default();
        let solver = SolverConfig {
            max_outer: self.max_outer.unwrap_or(s.max_outer),
            max_inner: self.max_inner.unwrap_or(s.max_inner),
            inner_tol: self.inner_tol.unwrap_or(s.inner_tol),
            constraint_tol: self.constraint_tol.unwrap_or(s.constraint_tol),
            initial_penalty: self.initial_penalty.unwrap_or(s.initial_penalty),
            penalty_growth: self.penalty_growth.unwrap_or(s.penalty_growth),
            complementarity_slack: self
                .complementarity_slack
                .unwrap_or(s.complementarity_slack),
            gradient_mode: self.gradient_mode.unwrap_or(s.gradient_mode),
            restarts: self.restarts.unwrap_or(s.restarts),
            seed,
        };
        solver.validate()?;
        let q = QuadratureConfig::default();
        let quadrature = QuadratureConfig {
            node_count: self.node_count.unwrap_or(q.node_count),
            tail_cutoff_prob: self.tail_cutoff_prob.unwrap_or(q.tail_cutoff_prob),
        };
        quadrature.validate().map_err(|e| {
            if let Error::OddPanelCount(_) = e {
                Error::config("node_count", e.to_string())
            } else {
                e
            }
        })?;
        let m = McConfig::default();
        let mc = McConfig {
            sample_count: self.samples.unwrap_or(m.sample_count),
            seed,
            antithetic: self.antithetic.unwrap_or(m.antithetic),
        };
        mc.validate()
            .map_err(|_| Error::config("samples", "must be at least 1"))?;
        let name = self.name.unwrap_or_else(|| match &weights {
            WeightsSpec::Preset(n) => n.clone(),
            WeightsSpec::Explicit { .. } => "custom".into(),
        });
        let output_dir = self
            .output_dir
            .unwrap_or_else(|| PathBuf::from("out").join(&name));
        Ok(ScenarioConfig {
            name,
            source,
            seed,
            battery,
            weights,
            pairing,
            solver,
            quadrature,
            mc,
            output_dir,
        })
    }
}

impl ScenarioConfig {
    /// Built-in scenario for a weight preset on the synthetic PV day.
    pub fn preset(case: &str) -> Result<Self> {
        ScenarioFile {
            case: Some(case.into()),
            ..Default::default()
        }
        .resolve(None)
    }

    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self> {
        ScenarioFile::parse(text)?.resolve(base)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, path.parent())
    }

    /// Fully specified on-disk form.
    pub fn to_file(&self) -> ScenarioFile {
        let (forecast_file, synthetic_profile) = match &self.source {
            ForecastSource::File(p) => (Some(p.clone()), None),
            ForecastSource::Synthetic(p) => (None, Some(p.to_string())),
        };
        let (case, c1, c2, c3, c4) = match &self.weights {
            WeightsSpec::Preset(n) => (Some(n.clone()), None, None, None, None),
            WeightsSpec::Explicit { c1, c2, c3, c4 } => (
                None,
                Some(*c1),
                Some(*c2),
                Some(c3.clone()),
                Some(c4.clone()),
            ),
        };
        let b = &self.battery;
        let s = &self.solver;
        ScenarioFile {
            name: Some(self.name.clone()),
            forecast_file,
            synthetic_profile,
            seed: Some(self.seed),
            case,
            c1,
            c2,
            c3,
            c4,
            pairing: Some(pairing_name(self.pairing).into()),
            e_min: Some(b.e_min),
            e_max: Some(b.e_max),
            p_min: Some(b.p_min),
            p_max: Some(b.p_max),
            loss: Some(b.loss),
            e0: Some(b.e0),
            step_hours: Some(b.step_hours),
            envelope: Some(envelope_name(b.envelope).into()),
            node_count: Some(self.quadrature.node_count),
            tail_cutoff_prob: Some(self.quadrature.tail_cutoff_prob),
            max_outer: Some(s.max_outer),
            max_inner: Some(s.max_inner),
            inner_tol: Some(s.inner_tol),
            constraint_tol: Some(s.constraint_tol),
            initial_penalty: Some(s.initial_penalty),
            penalty_growth: Some(s.penalty_growth),
            complementarity_slack: Some(s.complementarity_slack),
            gradient_mode: Some(s.gradient_mode),
            restarts: Some(s.restarts),
            samples: Some(self.mc.sample_count),
            antithetic: Some(self.mc.antithetic),
            output_dir: Some(self.output_dir.clone()),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("scenario serializes")
    }

    /// SHA-256 over the resolved configuration, output directory excluded.
    pub fn hash(&self) -> String {
        let mut file = self.to_file();
        file.output_dir = None;
        let text = toml::to_string(&file).expect("scenario serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.solver.seed = seed;
        self.mc.seed = seed;
        self
    }

    pub fn load_forecast(&self) -> Result<QuantileForecast> {
        match &self.source {
            ForecastSource::File(p) => parse_quantile_file(p),
            ForecastSource::Synthetic(profile) => synth_forecast(self.seed, &profile.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_expand() {
        let c = ScenarioConfig::preset("case3").unwrap();
        let w = c.weights.resolve(24).unwrap();
        assert_eq!(w.c4[6], 100.0);
        assert_eq!(
            c.source,
            ForecastSource::Synthetic(SynthProfile::PvDominant)
        );
        assert!(ScenarioConfig::preset("case9").is_err());
    }

    #[test]
    fn round_trip_and_hash() {
        let c =
            ScenarioConfig::from_toml("case = \"case1\"\nseed = 4\nsamples = 10\n", None).unwrap();
        let again = ScenarioConfig::from_toml(&c.to_toml(), None).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        let moved = ScenarioConfig {
            output_dir: "elsewhere".into(),
            ..c.clone()
        };
        assert_eq!(c.hash(), moved.hash());
        assert_ne!(c.hash(), c.clone().with_seed(5).hash());
    }

    fn field_of(text: &str) -> String {
        match ScenarioConfig::from_toml(text, None) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of("bogus = 1\n"), "bogus");
        assert_eq!(field_of("case = \"case2\"\nc1 = 1.0\n"), "case");
        assert_eq!(field_of("c1 = 1.0\nc2 = 1.0\nc3 = 0.5\n"), "c4");
        assert_eq!(
            field_of("forecast_file = \"a.csv\"\nsynthetic_profile = \"flat\"\n"),
            "forecast_file"
        );
        assert_eq!(field_of("node_count = 7\n"), "node_count");
        assert_eq!(field_of("samples = 0\n"), "samples");
        assert_eq!(field_of("pairing = \"sideways\"\n"), "pairing");
        assert_eq!(field_of("e0 = \"full\"\n"), "e0");
    }

    #[test]
    fn per_step_weights_checked_against_horizon() {
        let c = ScenarioConfig::from_toml("c1 = 2.0\nc2 = 1.0\nc3 = [0.5, 0.5]\nc4 = 0.5\n", None)
            .unwrap();
        assert!(c.weights.resolve(2).is_ok());
        assert!(
            matches!(c.weights.resolve(3), Err(Error::Config { ref field, .. }) if field == "c3")
        );
    }
}
