//! Composite Simpson quadrature and the truncation of the infinite-limit
//! deviation integrals.

use serde::{Deserialize, Serialize};

use super::logistic::DoubleLogisticCdf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    /// Minimum Simpson panels per integral (even, >= 2). Distributions whose
    /// truncated support spans many scales of their narrowest component get
    /// more, see [`QuadratureConfig::panels_for`].
    pub node_count: usize,
    /// Bound on the omitted tail of each semi-infinite integral. The
    /// truncation point is placed where the first absolute moment of the
    /// dropped tail falls to this value (kW times probability), which also
    /// bounds the dropped probability mass.
    pub tail_cutoff_prob: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            node_count: 256,
            tail_cutoff_prob: 1e-6,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 2 || self.node_count % 2 != 0 {
            return Err(Error::OddPanelCount(self.node_count));
        }
        if !(self.tail_cutoff_prob > 0.0 && self.tail_cutoff_prob < 1e-2) {
            return Err(Error::config(
                "tail_cutoff_prob",
                format!("must lie in (0, 1e-2), got {}", self.tail_cutoff_prob),
            ));
        }
        Ok(())
    }

    pub fn with_nodes(self, node_count: usize) -> Self {
        Self { node_count, ..self }
    }

    /// Panels used for every integral under `f`: `node_count`, or enough
    /// for [`PANELS_PER_SCALE`] panels per scale of the narrowest component
    /// across the whole truncated support. Depends on `f` only, so the
    /// discretized objective stays smooth in the allocation bounds.
    pub fn panels_for(&self, f: &DoubleLogisticCdf) -> usize {
        let span = upper_cutoff(f, self.tail_cutoff_prob) - lower_cutoff(f, self.tail_cutoff_prob);
        let sharpest = [(f.w1, f.w2), (f.w4, f.w5)]
            .iter()
            .filter(|(mass, _)| *mass > 1e-12)
            .map(|(_, inv_scale)| *inv_scale)
            .fold(0.0, f64::max);
        let need = (PANELS_PER_SCALE * span * sharpest).ceil() as usize;
        let n = self.node_count.max(need);
        n + n % 2
    }
}

pub const PANELS_PER_SCALE: f64 = 4.0;

/// Simpson 1/3 weight (before the `h/3` factor) of node `i` out of `0..=n`.
#[inline]
pub fn simpson_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n {
        1.0
    } else if i % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Composite Simpson 1/3 rule over `[a, b]` with `n` panels.
pub fn simpson_integrate<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, n: usize) -> Result<f64> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::OddPanelCount(n));
    }
    if a == b {
        return Ok(0.0);
    }
    let h = (b - a) / n as f64;
    let sum: f64 = (0..=n)
        .map(|i| simpson_weight(i, n) * g(a + i as f64 * h))
        .sum();
    Ok(sum * h / 3.0)
}

const BISECT_ITERS: usize = 200;

/// Left truncation point `c < 0` of a zero-mean distribution such that
/// `∫_{-∞}^{c} |u| f(u) du == tol`.
pub fn lower_cutoff(f: &DoubleLogisticCdf, tol: f64) -> f64 {
    let tail = |c: f64| -c * f.cdf(c) + f.cdf_integral_below(c);
    let mut hi = 0.0;
    if tail(hi) <= tol {
        return hi;
    }
    let mut lo = -1.0;
    while tail(lo) > tol {
        hi = lo;
        lo *= 2.0;
    }
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > tol {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    lo
}

/// Mirror of [`lower_cutoff`] for the right tail.
pub fn upper_cutoff(f: &DoubleLogisticCdf, tol: f64) -> f64 {
    let tail = |c: f64| c * f.sf(c) + f.sf_integral_above(c);
    let mut lo = 0.0;
    if tail(lo) <= tol {
        return lo;
    }
    let mut hi = 1.0;
    while tail(hi) > tol {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_cubics() {
        let v = simpson_integrate(|z| z * z * z, 0.0, 1.0, 2).unwrap();
        assert_eq!(v, 0.25);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(simpson_integrate(|z| z.exp(), 1.5, 1.5, 4).unwrap(), 0.0);
    }

    #[test]
    fn odd_panels_rejected() {
        assert!(matches!(
            simpson_integrate(|z| z, 0.0, 1.0, 3),
            Err(Error::OddPanelCount(3))
        ));
        assert!(QuadratureConfig::default()
            .with_nodes(7)
            .validate()
            .is_err());
    }

    #[test]
    fn cutoffs_bound_the_dropped_moment() {
        let f = DoubleLogisticCdf::new(0.3, 0.8, -1.0, 0.7, 2.0, 3.0 / 7.0).unwrap();
        let tol = 1e-6;
        let lo = lower_cutoff(&f, tol);
        let hi = upper_cutoff(&f, tol);
        assert!(lo < 0.0 && hi > 0.0);
        let dropped_lo = -lo * f.cdf(lo) + f.cdf_integral_below(lo);
        let dropped_hi = hi * f.sf(hi) + f.sf_integral_above(hi);
        assert!((dropped_lo - tol).abs() < 1e-9);
        assert!((dropped_hi - tol).abs() < 1e-9);
        assert!(f.cdf(lo) < tol && f.sf(hi) < tol);
    }
}
