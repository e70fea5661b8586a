//! Quantile forecasts of prosumption and their parametric (double-logistic)
//! representation.

mod fit;
mod synth;

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fit::{fit_double_logistic, fit_double_logistic_with, FitOptions, FitResult};
pub use synth::{synth_forecast, synth_forecast_profile, synth_truth, SynthProfile};

use crate::error::{Error, Result};
use crate::mixed::DoubleLogisticCdf;

/// Clock hour of the first step when nothing else is specified.
pub const DEFAULT_START_HOUR: f64 = 6.0;

/// Quantile levels and values of one forecast step, levels ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileStep {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
}

impl QuantileStep {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileForecast {
    pub step_hours: f64,
    pub start_hour: f64,
    pub steps: Vec<QuantileStep>,
}

impl QuantileForecast {
    pub fn horizon_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::Validation("forecast has no steps".into()));
        }
        if !(self.step_hours > 0.0) {
            return Err(Error::Validation(format!(
                "step duration must be positive, got {}",
                self.step_hours
            )));
        }
        for (k, s) in self.steps.iter().enumerate() {
            if s.levels.len() != s.values.len() || s.is_empty() {
                return Err(Error::Validation(format!(
                    "step {k}: empty or ragged quantile block"
                )));
            }
            if let Some(l) = s.levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
                return Err(Error::Validation(format!(
                    "step {k}: level {l} outside (0, 1)"
                )));
            }
            if s.levels.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Validation(format!(
                    "step {k}: levels not strictly increasing"
                )));
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "step {k}: non-finite quantile value"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct QuantileRow {
    step: usize,
    level: f64,
    value_kw: f64,
}

/// Reads the `step,level,value_kw` CSV layout. Rows may come in any order.
pub fn parse_quantile_file(path: impl AsRef<Path>) -> Result<QuantileForecast> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    parse_quantile_csv(file, path)
}

pub fn parse_quantile_csv<R: Read>(reader: R, origin: &Path) -> Result<QuantileForecast> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["step", "level", "value_kw"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse {
            path: origin.to_path_buf(),
            line: 1,
            msg: format!(
                "expected header `step,level,value_kw`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut blocks: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let row: QuantileRow = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                line,
                msg: e.to_string(),
            })?;
        if !(row.level > 0.0 && row.level < 1.0) {
            return Err(Error::Validation(format!(
                "line {line}: quantile level {} outside (0, 1)",
                row.level
            )));
        }
        if !row.value_kw.is_finite() {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line,
                msg: "non-finite value".into(),
            });
        }
        blocks
            .entry(row.step)
            .or_default()
            .push((row.level, row.value_kw));
    }

    if blocks.is_empty() {
        return Err(Error::Validation("forecast file contains no rows".into()));
    }
    let mut steps = Vec::with_capacity(blocks.len());
    for (expected_step, (step, mut rows)) in blocks.into_iter().enumerate() {
        if step != expected_step {
            return Err(Error::Validation(format!(
                "missing forecast step {expected_step}"
            )));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation(format!(
                "step {step}: duplicate level {}",
                w[0].0
            )));
        }
        steps.push(QuantileStep {
            levels: rows.iter().map(|r| r.0).collect(),
            values: rows.iter().map(|r| r.1).collect(),
        });
    }
    Ok(QuantileForecast {
        step_hours: 1.0,
        start_hour: DEFAULT_START_HOUR,
        steps,
    })
}

pub fn write_quantile_csv<W: Write>(forecast: &QuantileForecast, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["step", "level", "value_kw"])?;
    for (k, s) in forecast.steps.iter().enumerate() {
        for (l, v) in s.levels.iter().zip(&s.values) {
            wtr.write_record([k.to_string(), l.to_string(), v.to_string()])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_quantile_file(forecast: &QuantileForecast, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_quantile_csv(forecast, std::io::BufWriter::new(file))
}

/// Half-width of the centered moving average across quantile levels.
const SMOOTH_HALF_WIDTH: usize = 2;

/// Monotone rearrangement followed by a centered 5-point moving average
/// across levels. The window shrinks symmetrically near both ends, which
/// keeps a monotone sequence monotone.
pub fn smooth_quantiles(raw: &QuantileForecast) -> QuantileForecast {
    let steps = raw
        .steps
        .iter()
        .map(|s| {
            let mut sorted = s.values.clone();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            let values = (0..n)
                .map(|i| {
                    let hw = SMOOTH_HALF_WIDTH.min(i).min(n - 1 - i);
                    let window = &sorted[i - hw..=i + hw];
                    window.iter().sum::<f64>() / window.len() as f64
                })
                .collect();
            QuantileStep {
                levels: s.levels.clone(),
                values,
            }
        })
        .collect();
    QuantileForecast {
        steps,
        ..raw.clone()
    }
}

/// Expected prosumption and zero-mean deviation law for every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProsumptionModel {
    pub step_hours: f64,
    pub start_hour: f64,
    /// `p̂_L(k)` in kW.
    pub expected: Vec<f64>,
    /// Centered deviation CDFs, one per step.
    pub deviations: Vec<DoubleLogisticCdf>,
}

impl ProsumptionModel {
    pub fn horizon(&self) -> usize {
        self.expected.len()
    }

    /// Uncentered prosumption law at step `k`.
    pub fn prosumption_cdf(&self, k: usize) -> DoubleLogisticCdf {
        self.deviations[k].shifted(self.expected[k])
    }

    pub fn validate(&self) -> Result<()> {
        if self.expected.is_empty() {
            return Err(Error::Validation("prosumption model has no steps".into()));
        }
        if self.expected.len() != self.deviations.len() {
            return Err(Error::HorizonMismatch {
                what: "deviation CDFs",
                got: self.deviations.len(),
                expected: self.expected.len(),
            });
        }
        for d in &self.deviations {
            d.validate()?;
        }
        Ok(())
    }
}

/// Splits fitted prosumption CDFs into expected value and centered deviation.
pub fn center(fitted: &[DoubleLogisticCdf]) -> ProsumptionModel {
    center_with_clock(fitted, 1.0, DEFAULT_START_HOUR)
}

pub fn center_with_clock(
    fitted: &[DoubleLogisticCdf],
    step_hours: f64,
    start_hour: f64,
) -> ProsumptionModel {
    ProsumptionModel {
        step_hours,
        start_hour,
        expected: fitted.iter().map(DoubleLogisticCdf::mean).collect(),
        deviations: fitted.iter().map(DoubleLogisticCdf::centered).collect(),
    }
}

/// One record of the fitted-model JSON file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedStep {
    pub step: usize,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub w5: f64,
    pub w6: f64,
    pub fit_rms: f64,
}

impl FittedStep {
    pub fn cdf(&self) -> Result<DoubleLogisticCdf> {
        DoubleLogisticCdf::new(self.w1, self.w2, self.w3, self.w4, self.w5, self.w6)
    }
}

#[derive(Debug, Clone)]
pub struct FittedForecast {
    pub step_hours: f64,
    pub start_hour: f64,
    pub fits: Vec<FitResult>,
}

impl FittedForecast {
    pub fn cdfs(&self) -> Vec<DoubleLogisticCdf> {
        self.fits.iter().map(|f| f.cdf).collect()
    }

    pub fn model(&self) -> ProsumptionModel {
        center_with_clock(&self.cdfs(), self.step_hours, self.start_hour)
    }

    pub fn records(&self) -> Vec<FittedStep> {
        self.fits
            .iter()
            .enumerate()
            .map(|(step, f)| FittedStep {
                step,
                w1: f.cdf.w1,
                w2: f.cdf.w2,
                w3: f.cdf.w3,
                w4: f.cdf.w4,
                w5: f.cdf.w5,
                w6: f.cdf.w6,
                fit_rms: f.rms,
            })
            .collect()
    }

    pub fn any_degraded(&self) -> bool {
        self.fits.iter().any(|f| f.degraded)
    }
}

/// Smooths every step and fits it; steps are fitted in parallel.
pub fn fit_forecast(raw: &QuantileForecast, opts: &FitOptions) -> Result<FittedForecast> {
    raw.validate()?;
    let smoothed = smooth_quantiles(raw);
    let fits = smoothed
        .steps
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            fit_double_logistic_with(&s.levels, &s.values, opts).map_err(|e| match e {
                Error::Validation(m) => Error::Validation(format!("step {k}: {m}")),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FittedForecast {
        step_hours: raw.step_hours,
        start_hour: raw.start_hour,
        fits,
    })
}

pub fn write_fitted_json<W: Write>(records: &[FittedStep], writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, records)?;
    Ok(())
}

pub fn read_fitted_json<R: Read>(reader: R) -> Result<Vec<FittedStep>> {
    let mut records: Vec<FittedStep> = serde_json::from_reader(reader)?;
    records.sort_by_key(|r| r.step);
    for (i, r) in records.iter().enumerate() {
        if r.step != i {
            return Err(Error::Validation(format!(
                "fitted model is missing step {i}"
            )));
        }
    }
    Ok(records)
}

/// Loads a fitted-model JSON file straight into a centered model.
pub fn load_fitted_model(path: impl AsRef<Path>) -> Result<ProsumptionModel> {
    let records = read_fitted_json(std::fs::File::open(path)?)?;
    let cdfs = records
        .iter()
        .map(FittedStep::cdf)
        .collect::<Result<Vec<_>>>()?;
    Ok(center(&cdfs))
}
