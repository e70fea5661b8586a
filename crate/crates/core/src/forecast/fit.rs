//! Least-squares fit of a double-logistic CDF to quantile pairs.
//!
//! Residuals are `F(value_i) - level_i`. The search runs in transformed
//! coordinates `(logit w1, ln w2, w3, ln w5, w6)` with `w4 = 1 - w1`, using
//! damped Gauss-Newton (Levenberg-Marquardt) from three deterministic starts.

use nalgebra::{Matrix5, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixed::logistic::sigmoid;
use crate::mixed::DoubleLogisticCdf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub min_inv_scale: f64,
    pub max_inv_scale: f64,
    /// Lower bound on each component's scale `1 / w` in kW. Widens very
    /// narrow (typically night-time) distributions.
    pub min_spread_kw: Option<f64>,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            min_inv_scale: 1e-3,
            max_inv_scale: 50.0,
            min_spread_kw: None,
            max_iter: 500,
            grad_tol: 1e-9,
        }
    }
}

impl FitOptions {
    fn inv_scale_range(&self) -> (f64, f64) {
        let hi = match self.min_spread_kw {
            Some(s) if s > 0.0 => self.max_inv_scale.min(1.0 / s),
            _ => self.max_inv_scale,
        };
        (self.min_inv_scale, hi.max(self.min_inv_scale))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub cdf: DoubleLogisticCdf,
    /// Root-mean-square of `F(value_i) - level_i`.
    pub rms: f64,
    pub max_abs_residual: f64,
    pub iterations: usize,
    /// Gradient tolerance not reached within the iteration cap.
    pub degraded: bool,
}

const MASS_LOGIT_LIMIT: f64 = 30.0;

type Params = Vector5<f64>;

fn to_cdf(p: &Params) -> DoubleLogisticCdf {
    let a = sigmoid(p[0]);
    DoubleLogisticCdf::new_unchecked(a, p[1].exp(), p[2], 1.0 - a, p[3].exp(), p[4])
}

fn project(p: &mut Params, ln_lo: f64, ln_hi: f64) {
    p[0] = p[0].clamp(-MASS_LOGIT_LIMIT, MASS_LOGIT_LIMIT);
    p[1] = p[1].clamp(ln_lo, ln_hi);
    p[3] = p[3].clamp(ln_lo, ln_hi);
}

fn ssr(p: &Params, levels: &[f64], values: &[f64]) -> f64 {
    let f = to_cdf(p);
    levels
        .iter()
        .zip(values)
        .map(|(l, v)| (f.cdf(*v) - l).powi(2))
        .sum()
}

/// Gauss-Newton normal equations `(JᵀJ, Jᵀr, ssr)` at `p`.
fn normal_equations(p: &Params, levels: &[f64], values: &[f64]) -> (Matrix5<f64>, Params, f64) {
    let a = sigmoid(p[0]);
    let (s1, l1, s2, l2) = (p[1].exp(), p[2], p[3].exp(), p[4]);
    let mut jtj = Matrix5::zeros();
    let mut jtr = Params::zeros();
    let mut total = 0.0;
    for (level, v) in levels.iter().zip(values) {
        let sig1 = sigmoid(s1 * (v - l1));
        let sig2 = sigmoid(s2 * (v - l2));
        let g1 = sig1 * (1.0 - sig1);
        let g2 = sig2 * (1.0 - sig2);
        let r = a * sig1 + (1.0 - a) * sig2 - level;
        let j = Params::new(
            (sig1 - sig2) * a * (1.0 - a),
            a * g1 * s1 * (v - l1),
            -a * g1 * s1,
            (1.0 - a) * g2 * s2 * (v - l2),
            -(1.0 - a) * g2 * s2,
        );
        jtj += j * j.transpose();
        jtr += j * r;
        total += r * r;
    }
    (jtj, jtr, total)
}

/// Gradient with components that push against an active bound removed.
fn projected_grad_norm(p: &Params, g: &Params, ln_lo: f64, ln_hi: f64) -> f64 {
    let mut n: f64 = 0.0;
    for i in 0..5 {
        let at_lo = match i {
            0 => p[0] <= -MASS_LOGIT_LIMIT,
            1 | 3 => p[i] <= ln_lo,
            _ => false,
        };
        let at_hi = match i {
            0 => p[0] >= MASS_LOGIT_LIMIT,
            1 | 3 => p[i] >= ln_hi,
            _ => false,
        };
        // descent direction is -g
        if (at_lo && g[i] > 0.0) || (at_hi && g[i] < 0.0) {
            continue;
        }
        n = n.max(g[i].abs());
    }
    n
}

struct Run {
    params: Params,
    ssr: f64,
    iterations: usize,
    converged: bool,
}

fn levenberg_marquardt(start: Params, levels: &[f64], values: &[f64], opts: &FitOptions) -> Run {
    let (lo, hi) = opts.inv_scale_range();
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let mut p = start;
    project(&mut p, ln_lo, ln_hi);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let (mut jtj, mut jtr, mut cur) = normal_equations(&p, levels, values);
    let mut converged = false;
    while iterations < opts.max_iter {
        if projected_grad_norm(&p, &jtr, ln_lo, ln_hi) <= opts.grad_tol || cur < 1e-28 {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = jtj;
            for i in 0..5 {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                lambda *= 4.0;
                continue;
            };
            let mut cand = p + step;
            project(&mut cand, ln_lo, ln_hi);
            let cand_ssr = ssr(&cand, levels, values);
            if cand_ssr < cur {
                let rel = (cur - cand_ssr) / cur.max(1e-300);
                p = cand;
                lambda = (lambda / 3.0).max(1e-12);
                (jtj, jtr, cur) = normal_equations(&p, levels, values);
                accepted = true;
                if rel < 1e-15 {
                    // no further progress measurable in double precision
                    converged = projected_grad_norm(&p, &jtr, ln_lo, ln_hi) <= opts.grad_tol.sqrt();
                    return Run {
                        params: p,
                        ssr: cur,
                        iterations,
                        converged,
                    };
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            converged = projected_grad_norm(&p, &jtr, ln_lo, ln_hi) <= opts.grad_tol.sqrt();
            break;
        }
    }
    Run {
        params: p,
        ssr: cur,
        iterations,
        converged,
    }
}

/// Linear interpolation of the quantile curve at `level`.
fn interp(levels: &[f64], values: &[f64], level: f64) -> f64 {
    match levels.iter().position(|l| *l >= level) {
        Some(0) => values[0],
        None => values[values.len() - 1],
        Some(i) => {
            let t = (level - levels[i - 1]) / (levels[i] - levels[i - 1]);
            values[i - 1] + t * (values[i] - values[i - 1])
        }
    }
}

fn logit(a: f64) -> f64 {
    (a / (1.0 - a)).ln()
}

fn initial_points(levels: &[f64], values: &[f64]) -> Result<[Params; 3]> {
    let q = |l: f64| interp(levels, values, l);
    let (q10, q25, med, q75, q90) = (q(0.10), q(0.25), q(0.5), q(0.75), q(0.90));
    let range = values[values.len() - 1] - values[0];
    if !(range > 1e-12 * values[0].abs().max(1.0)) {
        return Err(Error::DegenerateQuantileCurve);
    }
    let mut iqr = q75 - q25;
    if !(iqr > 0.0) {
        iqr = range / 2.0;
    }
    // a logistic with inverse scale s has IQR 2 ln 3 / s
    let s0 = 2.0 * 3f64.ln() / iqr;
    Ok([
        Params::new(0.0, (2.0 * s0).ln(), q25, (2.0 * s0).ln(), q75),
        Params::new(
            logit(0.7),
            (1.3 * s0).ln(),
            med - 0.1 * iqr,
            (0.6 * s0).ln(),
            q90,
        ),
        Params::new(
            logit(0.7),
            (1.3 * s0).ln(),
            med + 0.1 * iqr,
            (0.6 * s0).ln(),
            q10,
        ),
    ])
}

pub fn fit_double_logistic(levels: &[f64], values: &[f64]) -> Result<FitResult> {
    fit_double_logistic_with(levels, values, &FitOptions::default())
}

pub fn fit_double_logistic_with(
    levels: &[f64],
    values: &[f64],
    opts: &FitOptions,
) -> Result<FitResult> {
    if levels.len() != values.len() {
        return Err(Error::Validation(
            "levels and values differ in length".into(),
        ));
    }
    if levels.len() < 6 {
        return Err(Error::Validation(format!(
            "need at least 6 quantile pairs, got {}",
            levels.len()
        )));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) || values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Validation("quantile pairs must be monotone".into()));
    }

    let mut best: Option<Run> = None;
    for start in initial_points(levels, values)? {
        let run = levenberg_marquardt(start, levels, values, opts);
        if best.as_ref().map_or(true, |b| run.ssr < b.ssr) {
            best = Some(run);
        }
    }
    let best = best.expect("three starts");
    let cdf = to_cdf(&best.params);
    let residuals: Vec<f64> = levels
        .iter()
        .zip(values)
        .map(|(l, v)| cdf.cdf(*v) - l)
        .collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    let max_abs_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(FitResult {
        cdf,
        rms,
        max_abs_residual,
        iterations: best.iterations,
        degraded: !best.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels99() -> Vec<f64> {
        (1..=99).map(|i| i as f64 / 100.0).collect()
    }

    #[test]
    fn rejects_flat_curve() {
        let l = levels99();
        let v = vec![1.5; l.len()];
        assert!(matches!(
            fit_double_logistic(&l, &v),
            Err(Error::DegenerateQuantileCurve)
        ));
    }

    #[test]
    fn rejects_too_few_pairs() {
        assert!(fit_double_logistic(&[0.2, 0.4, 0.6], &[0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn recovers_single_logistic() {
        let truth = DoubleLogisticCdf::single(0.7, 1.8).unwrap();
        let l = levels99();
        let v: Vec<f64> = l.iter().map(|q| truth.quantile(*q)).collect();
        let fit = fit_double_logistic(&l, &v).unwrap();
        assert!(fit.rms <= 1e-6, "rms {}", fit.rms);
        assert!(fit.cdf.validate().is_ok());
    }

    #[test]
    fn min_spread_caps_inverse_scale() {
        let truth = DoubleLogisticCdf::single(0.2, 20.0).unwrap();
        let l = levels99();
        let v: Vec<f64> = l.iter().map(|q| truth.quantile(*q)).collect();
        let opts = FitOptions {
            min_spread_kw: Some(0.25),
            ..FitOptions::default()
        };
        let fit = fit_double_logistic_with(&l, &v, &opts).unwrap();
        assert!(fit.cdf.w2 <= 4.0 + 1e-12 && fit.cdf.w5 <= 4.0 + 1e-12);
    }
}
