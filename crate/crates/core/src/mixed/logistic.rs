//! Two-component logistic mixture used as the parametric prosumption law.
//!
//! `F(z) = w1 / (1 + exp(-w2 (z - w3))) + w4 / (1 + exp(-w5 (z - w6)))`
//!
//! Masses `w1, w4` are non-negative and sum to one, inverse scales `w2, w5`
//! are strictly positive, so `F` is a proper, strictly increasing CDF whose
//! mean is `w1 w3 + w4 w6`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest exponent argument fed to `exp`; beyond it the logistic saturates.
pub const EXP_CLAMP: f64 = 700.0;

const MASS_TOL: f64 = 1e-9;

/// Logistic sigmoid with its argument clamped to `±EXP_CLAMP`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-EXP_CLAMP, EXP_CLAMP);
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(x))` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleLogisticCdf {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub w5: f64,
    pub w6: f64,
}

#[derive(Debug, Clone, Copy)]
struct Component {
    mass: f64,
    inv_scale: f64,
    loc: f64,
}

impl DoubleLogisticCdf {
    /// Validated constructor.
    pub fn new(w1: f64, w2: f64, w3: f64, w4: f64, w5: f64, w6: f64) -> Result<Self> {
        let f = Self::new_unchecked(w1, w2, w3, w4, w5, w6);
        f.validate()?;
        Ok(f)
    }

    pub const fn new_unchecked(w1: f64, w2: f64, w3: f64, w4: f64, w5: f64, w6: f64) -> Self {
        Self {
            w1,
            w2,
            w3,
            w4,
            w5,
            w6,
        }
    }

    /// Single logistic with the given location and inverse scale.
    pub fn single(loc: f64, inv_scale: f64) -> Result<Self> {
        Self::new(1.0, inv_scale, loc, 0.0, inv_scale, loc)
    }

    pub fn from_array(w: [f64; 6]) -> Result<Self> {
        Self::new(w[0], w[1], w[2], w[3], w[4], w[5])
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.w1, self.w2, self.w3, self.w4, self.w5, self.w6]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.to_array();
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite CDF weight in {w:?}")));
        }
        if self.w1 < 0.0 || self.w4 < 0.0 || (self.w1 + self.w4 - 1.0).abs() > MASS_TOL {
            return Err(Error::Validation(format!(
                "mixture masses must be non-negative and sum to 1, got w1={} w4={}",
                self.w1, self.w4
            )));
        }
        if self.w2 <= 0.0 || self.w5 <= 0.0 {
            return Err(Error::Validation(format!(
                "inverse scales must be positive, got w2={} w5={}",
                self.w2, self.w5
            )));
        }
        Ok(())
    }

    #[inline]
    fn components(&self) -> [Component; 2] {
        [
            Component {
                mass: self.w1,
                inv_scale: self.w2,
                loc: self.w3,
            },
            Component {
                mass: self.w4,
                inv_scale: self.w5,
                loc: self.w6,
            },
        ]
    }

    pub fn mean(&self) -> f64 {
        self.w1 * self.w3 + self.w4 * self.w6
    }

    /// Same shape, both locations moved by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        Self {
            w3: self.w3 + delta,
            w6: self.w6 + delta,
            ..*self
        }
    }

    /// Zero-mean version of this distribution.
    pub fn centered(&self) -> Self {
        self.shifted(-self.mean())
    }

    #[inline]
    pub fn cdf(&self, z: f64) -> f64 {
        let v =
            self.w1 * sigmoid(self.w2 * (z - self.w3)) + self.w4 * sigmoid(self.w5 * (z - self.w6));
        v.clamp(0.0, 1.0)
    }

    /// `1 - F(z)`, evaluated without cancellation in the right tail.
    #[inline]
    pub fn sf(&self, z: f64) -> f64 {
        let v = self.w1 * sigmoid(-self.w2 * (z - self.w3))
            + self.w4 * sigmoid(-self.w5 * (z - self.w6));
        v.clamp(0.0, 1.0)
    }

    #[inline]
    pub fn pdf(&self, z: f64) -> f64 {
        self.components()
            .iter()
            .map(|c| {
                let s = sigmoid(c.inv_scale * (z - c.loc));
                c.mass * c.inv_scale * s * (1.0 - s)
            })
            .sum()
    }

    /// Density and its derivative at `z`.
    #[inline]
    pub fn pdf_and_deriv(&self, z: f64) -> (f64, f64) {
        let mut f = 0.0;
        let mut df = 0.0;
        for c in self.components() {
            let s = sigmoid(c.inv_scale * (z - c.loc));
            let g = s * (1.0 - s);
            f += c.mass * c.inv_scale * g;
            df += c.mass * c.inv_scale * c.inv_scale * g * (1.0 - 2.0 * s);
        }
        (f, df)
    }

    /// `∫_{-∞}^{c} F(u) du`, closed form through the softplus antiderivative.
    pub fn cdf_integral_below(&self, c: f64) -> f64 {
        self.components()
            .iter()
            .filter(|k| k.mass > 0.0)
            .map(|k| k.mass * softplus(k.inv_scale * (c - k.loc)) / k.inv_scale)
            .sum()
    }

    /// `∫_{c}^{∞} (1 - F(u)) du`, closed form.
    pub fn sf_integral_above(&self, c: f64) -> f64 {
        self.components()
            .iter()
            .filter(|k| k.mass > 0.0)
            .map(|k| k.mass * softplus(-k.inv_scale * (c - k.loc)) / k.inv_scale)
            .sum()
    }

    /// Interval guaranteed to contain the `q`-quantile: the extreme
    /// component quantiles over components with positive mass.
    fn quantile_bracket(&self, q: f64) -> (f64, f64) {
        let logit = (q / (1.0 - q)).ln();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in self.components().iter().filter(|c| c.mass > 0.0) {
            let x = c.loc + logit / c.inv_scale;
            lo = lo.min(x);
            hi = hi.max(x);
        }
        (lo, hi)
    }

    /// Inverse CDF by safeguarded Newton iteration inside a guaranteed bracket.
    pub fn quantile(&self, q: f64) -> f64 {
        assert!(
            q > 0.0 && q < 1.0,
            "quantile level must lie in (0, 1), got {q}"
        );
        let (mut lo, mut hi) = self.quantile_bracket(q);
        if hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
            return 0.5 * (lo + hi);
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let r = if q < 0.5 {
                self.cdf(x) - q
            } else {
                (1.0 - q) - self.sf(x)
            };
            if r.abs() <= 1e-16 {
                return x;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.pdf(x);
            let newton = x - r / d;
            x = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (hi - lo).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                break;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym() -> DoubleLogisticCdf {
        DoubleLogisticCdf::new(0.5, 2.0, -1.0, 0.5, 2.0, 1.0).unwrap()
    }

    #[test]
    fn cdf_closed_form_value() {
        // 0.5 σ(1) + 0.5 σ(-3)
        let expected = 0.5 / (1.0 + (-1.0f64).exp()) + 0.5 / (1.0 + 3.0f64.exp());
        assert!((sym().cdf(-0.5) - expected).abs() < 1e-15);
        assert!((sym().cdf(-0.5) - 0.38924).abs() < 5e-6);
    }

    #[test]
    fn cdf_limits_and_symmetry() {
        let f = sym();
        assert!(f.cdf(-1e6) < 1e-300);
        assert_eq!(f.cdf(1e6), 1.0);
        assert!(f.sf(1e6) < 1e-300);
        assert!((f.cdf(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn saturates_instead_of_overflowing() {
        let f = DoubleLogisticCdf::new(0.3, 50.0, 0.0, 0.7, 50.0, 1.0).unwrap();
        for z in [-1e3, -20.0, 20.0, 1e3] {
            let (p, d) = f.pdf_and_deriv(z);
            assert!(f.cdf(z).is_finite() && p.is_finite() && d.is_finite());
        }
    }

    #[test]
    fn pdf_values() {
        let f = DoubleLogisticCdf::single(0.0, 1.0).unwrap();
        assert!((f.pdf(0.0) - 0.25).abs() < 1e-15);
        let g = sym();
        for z in [0.3, 1.7] {
            assert!((g.pdf(z) - g.pdf(-z)).abs() < 1e-15);
        }
    }

    #[test]
    fn pdf_derivative_matches_central_difference() {
        let f = DoubleLogisticCdf::new(0.3, 1.5, -0.4, 0.7, 0.8, 0.9).unwrap();
        for z in [-3.0, -0.5, 0.0, 0.7, 2.5] {
            let h = 1e-5;
            let fd = (f.pdf(z + h) - f.pdf(z - h)) / (2.0 * h);
            assert!((f.pdf_and_deriv(z).1 - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn quantile_values() {
        assert!(sym().quantile(0.5).abs() < 1e-12);
        let f = DoubleLogisticCdf::single(0.0, 1.0).unwrap();
        assert!((f.quantile(0.75) - 3f64.ln()).abs() < 1e-12);
        let g = sym();
        let q = g.cdf(0.37);
        assert!((g.quantile(q) - 0.37).abs() < 1e-8);
    }

    #[test]
    fn quantile_hits_probability_tightly() {
        let f = DoubleLogisticCdf::new(0.2, 0.7, 3.0, 0.8, 3.0, -0.5).unwrap();
        for q in [1e-9, 1e-4, 0.01, 0.3, 0.5, 0.77, 0.99, 1.0 - 1e-7] {
            let x = f.quantile(q);
            assert!((f.cdf(x) - q).abs() < 1e-10, "q={q} x={x}");
        }
    }

    #[test]
    fn rejects_invalid_weights() {
        assert!(DoubleLogisticCdf::new(0.6, 1.0, 0.0, 0.6, 1.0, 0.0).is_err());
        assert!(DoubleLogisticCdf::new(0.5, 0.0, 0.0, 0.5, 1.0, 0.0).is_err());
        assert!(DoubleLogisticCdf::new(-0.1, 1.0, 0.0, 1.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn centering_moves_mean_to_zero() {
        let f = DoubleLogisticCdf::new(1.0, 1.0, 3.0, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(f.mean(), 3.0);
        let c = f.centered();
        assert_eq!(c.w3, 0.0);
        assert!(c.mean().abs() < 1e-15);
    }
}
