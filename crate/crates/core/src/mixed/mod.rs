//! Mixed random variables produced by splitting a prosumption deviation
//! between the battery and the grid.
//!
//! For allocation bounds `x_lower <= 0 <= x_upper` a deviation `d` goes to
//! the battery as `clamp(d, x_lower, x_upper)`; the remainder goes to the
//! grid. The battery share carries atoms at both bounds, the grid share an
//! atom at zero.

pub mod logistic;
pub mod quadrature;

use serde::{Deserialize, Serialize};

pub use logistic::DoubleLogisticCdf;
pub use quadrature::{
    lower_cutoff, simpson_integrate, simpson_weight, upper_cutoff, QuadratureConfig,
    PANELS_PER_SCALE,
};

use crate::error::{Error, Result};

/// Per-step battery allocation interval in kW.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AllocationBounds {
    pub x_lower: f64,
    pub x_upper: f64,
}

impl AllocationBounds {
    pub fn new(x_lower: f64, x_upper: f64) -> Result<Self> {
        let b = Self { x_lower, x_upper };
        b.validate()?;
        Ok(b)
    }

    pub const ZERO: Self = Self {
        x_lower: 0.0,
        x_upper: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.x_lower <= 0.0 && self.x_upper >= 0.0) {
            return Err(Error::Validation(format!(
                "allocation bounds must satisfy x_lower <= 0 <= x_upper, got [{}, {}]",
                self.x_lower, self.x_upper
            )));
        }
        Ok(())
    }

    /// Battery share of a realized deviation.
    #[inline]
    pub fn battery_share(&self, deviation: f64) -> f64 {
        deviation.clamp(self.x_lower, self.x_upper)
    }
}

/// `(p1, p2)`: probability that the battery share saturates at the lower
/// or the upper bound.
pub fn atom_probs(f_dev: &DoubleLogisticCdf, b: AllocationBounds) -> (f64, f64) {
    (f_dev.cdf(b.x_lower), f_dev.sf(b.x_upper))
}

/// Tail probability below which the interior integrals are clipped.
const INTERIOR_CLIP: f64 = 1e-14;

fn interior_range(f_dev: &DoubleLogisticCdf, b: AllocationBounds) -> Option<(f64, f64)> {
    let lo = b.x_lower.max(f_dev.quantile(INTERIOR_CLIP));
    let hi = b.x_upper.min(f_dev.quantile(1.0 - INTERIOR_CLIP));
    (hi > lo).then_some((lo, hi))
}

/// `E[ΔP_{L→B}] = p1 x_lower + ∫_{x_lower}^{x_upper} z f(z) dz + p2 x_upper`.
pub fn expected_battery_dev(
    f_dev: &DoubleLogisticCdf,
    b: AllocationBounds,
    qc: &QuadratureConfig,
) -> f64 {
    let (p1, p2) = atom_probs(f_dev, b);
    let interior = interior_range(f_dev, b)
        .map(|(lo, hi)| simpson_sum(|z| z * f_dev.pdf(z), lo, hi, qc.panels_for(f_dev)))
        .unwrap_or(0.0);
    p1 * b.x_lower + interior + p2 * b.x_upper
}

/// `E[ΔP_{L→G} · 1{ΔP_{L→G} < 0}]`, the (non-positive) downward part of the
/// grid deviation expectation.
pub fn expected_grid_dev_neg(
    f_dev: &DoubleLogisticCdf,
    b: AllocationBounds,
    qc: &QuadratureConfig,
) -> f64 {
    let c_lo = lower_cutoff(f_dev, qc.tail_cutoff_prob);
    grid_neg_with_deriv(f_dev, c_lo, b.x_lower, qc.panels_for(f_dev)).0
}

/// `E[ΔP_{L→G} · 1{ΔP_{L→G} > 0}]`, the (non-negative) upward part.
pub fn expected_grid_dev_pos(
    f_dev: &DoubleLogisticCdf,
    b: AllocationBounds,
    qc: &QuadratureConfig,
) -> f64 {
    let c_hi = upper_cutoff(f_dev, qc.tail_cutoff_prob);
    grid_pos_with_deriv(f_dev, c_hi, b.x_upper, qc.panels_for(f_dev)).0
}

/// Total grid deviation expectation through the battery side:
/// `E[ΔP_{L→G}] = -E[ΔP_{L→B}]` since the two shares sum to a zero-mean
/// deviation.
pub fn expected_grid_dev_via_balance(
    f_dev: &DoubleLogisticCdf,
    b: AllocationBounds,
    qc: &QuadratureConfig,
) -> f64 {
    -expected_battery_dev(f_dev, b, qc)
}

fn simpson_sum<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, n: usize) -> f64 {
    // n is validated by QuadratureConfig before we get here
    simpson_integrate(g, a, b, n).unwrap_or(f64::NAN)
}

/// Simpson value of `∫_{c_lo}^{x_lower} (u - x_lower) f(u) du` and its exact
/// derivative with respect to `x_lower` (the truncation point is fixed).
pub fn grid_neg_with_deriv(f: &DoubleLogisticCdf, c_lo: f64, x_lower: f64, n: usize) -> (f64, f64) {
    let len = x_lower - c_lo;
    if len <= 0.0 {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    let h = len / nf;
    let mut s_f = 0.0;
    let mut s_df = 0.0;
    for i in 0..n {
        // node n has weight (n - i) = 0
        let w = simpson_weight(i, n) * (nf - i as f64);
        let u = c_lo + i as f64 * h;
        let (fu, dfu) = f.pdf_and_deriv(u);
        s_f += w * fu;
        s_df += w * dfu * (i as f64 / nf);
    }
    let value = -(h * h / 3.0) * s_f;
    let deriv = -(2.0 * h / (3.0 * nf)) * s_f - (h * h / 3.0) * s_df;
    (value, deriv)
}

/// Simpson value of `∫_{x_upper}^{c_hi} (u - x_upper) f(u) du` and its exact
/// derivative with respect to `x_upper`.
pub fn grid_pos_with_deriv(f: &DoubleLogisticCdf, c_hi: f64, x_upper: f64, n: usize) -> (f64, f64) {
    let len = c_hi - x_upper;
    if len <= 0.0 {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    let h = len / nf;
    let mut s_f = 0.0;
    let mut s_df = 0.0;
    for i in 1..=n {
        let w = simpson_weight(i, n) * i as f64;
        let u = x_upper + i as f64 * h;
        let (fu, dfu) = f.pdf_and_deriv(u);
        s_f += w * fu;
        s_df += w * dfu * (1.0 - i as f64 / nf);
    }
    let value = (h * h / 3.0) * s_f;
    let deriv = -(2.0 * h / (3.0 * nf)) * s_f + (h * h / 3.0) * s_df;
    (value, deriv)
}

/// Battery share of the deviation: atoms at both bounds plus the density
/// restricted to the open interval between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedBatteryDeviation {
    pub f_dev: DoubleLogisticCdf,
    pub bounds: AllocationBounds,
    /// Mass of the atom at `x_lower`.
    pub p1: f64,
    /// Mass of the atom at `x_upper`.
    pub p2: f64,
}

impl MixedBatteryDeviation {
    pub fn core_density(&self, z: f64) -> f64 {
        if z > self.bounds.x_lower && z < self.bounds.x_upper {
            self.f_dev.pdf(z)
        } else {
            0.0
        }
    }

    /// Mass of the continuous part, integrated with Simpson's rule.
    pub fn core_mass(&self, qc: &QuadratureConfig) -> f64 {
        interior_range(&self.f_dev, self.bounds)
            .map(|(lo, hi)| simpson_sum(|z| self.f_dev.pdf(z), lo, hi, qc.panels_for(&self.f_dev)))
            .unwrap_or(0.0)
    }

    pub fn total_mass(&self, qc: &QuadratureConfig) -> f64 {
        self.p1 + self.p2 + self.core_mass(qc)
    }

    pub fn mean(&self, qc: &QuadratureConfig) -> f64 {
        expected_battery_dev(&self.f_dev, self.bounds, qc)
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z < self.bounds.x_lower {
            0.0
        } else if z < self.bounds.x_upper {
            self.f_dev.cdf(z)
        } else {
            1.0
        }
    }
}

pub fn build_battery_dev(f_dev: &DoubleLogisticCdf, b: AllocationBounds) -> MixedBatteryDeviation {
    let (p1, p2) = atom_probs(f_dev, b);
    MixedBatteryDeviation {
        f_dev: *f_dev,
        bounds: b,
        p1,
        p2,
    }
}

/// Grid share of the deviation: zero-inflated, with the two deviation tails
/// shifted onto zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedGridDeviation {
    pub f_dev: DoubleLogisticCdf,
    pub bounds: AllocationBounds,
    /// Probability that the grid sees no deviation at all.
    pub atom_zero: f64,
}

impl MixedGridDeviation {
    pub fn left_tail_density(&self, z: f64) -> f64 {
        if z < 0.0 {
            self.f_dev.pdf(z + self.bounds.x_lower)
        } else {
            0.0
        }
    }

    pub fn right_tail_density(&self, z: f64) -> f64 {
        if z > 0.0 {
            self.f_dev.pdf(z + self.bounds.x_upper)
        } else {
            0.0
        }
    }

    pub fn left_tail_mass(&self) -> f64 {
        self.f_dev.cdf(self.bounds.x_lower)
    }

    pub fn right_tail_mass(&self) -> f64 {
        self.f_dev.sf(self.bounds.x_upper)
    }

    pub fn total_mass(&self) -> f64 {
        self.left_tail_mass() + self.atom_zero + self.right_tail_mass()
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z < 0.0 {
            self.f_dev.cdf(z + self.bounds.x_lower)
        } else {
            self.f_dev.cdf(z + self.bounds.x_upper)
        }
    }

    /// Generalized inverse of [`Self::cdf`]; zero whenever `q` falls on the
    /// atom.
    pub fn quantile(&self, q: f64) -> f64 {
        assert!(
            q > 0.0 && q < 1.0,
            "quantile level must lie in (0, 1), got {q}"
        );
        let below = self.left_tail_mass();
        let above = self.right_tail_mass();
        if q < below {
            self.f_dev.quantile(q) - self.bounds.x_lower
        } else if q <= 1.0 - above {
            0.0
        } else {
            self.f_dev.quantile(q) - self.bounds.x_upper
        }
    }
}

pub fn build_grid_dev(f_dev: &DoubleLogisticCdf, b: AllocationBounds) -> MixedGridDeviation {
    let (p1, p2) = atom_probs(f_dev, b);
    MixedGridDeviation {
        f_dev: *f_dev,
        bounds: b,
        atom_zero: (1.0 - p1 - p2).max(0.0),
    }
}

pub fn grid_dev_quantile(g: &MixedGridDeviation, q: f64) -> f64 {
    g.quantile(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym() -> DoubleLogisticCdf {
        DoubleLogisticCdf::new(0.5, 2.0, -1.0, 0.5, 2.0, 1.0).unwrap()
    }

    fn std_logistic() -> DoubleLogisticCdf {
        DoubleLogisticCdf::single(0.0, 1.0).unwrap()
    }

    #[test]
    fn bounds_must_straddle_zero() {
        assert!(AllocationBounds::new(0.1, 1.0).is_err());
        assert!(AllocationBounds::new(-1.0, -0.1).is_err());
        assert!(AllocationBounds::new(0.0, 0.0).is_ok());
    }

    #[test]
    fn atoms_for_degenerate_interval() {
        let (p1, p2) = atom_probs(&sym(), AllocationBounds::ZERO);
        assert!((p1 - 0.5).abs() < 1e-15 && (p2 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn atoms_vanish_beyond_the_tails() {
        let (p1, p2) = atom_probs(&sym(), AllocationBounds::new(-20.0, 20.0).unwrap());
        assert!(p1 < 1e-6 && p2 < 1e-6);
    }

    #[test]
    fn battery_expectation_symmetric_and_degenerate() {
        let qc = QuadratureConfig::default();
        let f = sym();
        assert!(
            expected_battery_dev(&f, AllocationBounds::new(-1.0, 1.0).unwrap(), &qc).abs() < 1e-12
        );
        assert!(expected_battery_dev(&f, AllocationBounds::ZERO, &qc).abs() < 1e-15);
        assert!(expected_battery_dev(&f, AllocationBounds::new(0.0, 1.0).unwrap(), &qc) > 0.0);
    }

    #[test]
    fn grid_half_integrals_of_standard_logistic() {
        let qc = QuadratureConfig::default();
        let f = std_logistic();
        let neg = expected_grid_dev_neg(&f, AllocationBounds::ZERO, &qc);
        let pos = expected_grid_dev_pos(&f, AllocationBounds::ZERO, &qc);
        // dropped tail is at most tail_cutoff_prob
        assert!((neg + 2f64.ln()).abs() < 2e-6, "{neg}");
        assert!((pos - 2f64.ln()).abs() < 2e-6, "{pos}");
    }

    #[test]
    fn grid_expectations_vanish_beyond_cutoff() {
        let qc = QuadratureConfig::default();
        let b = AllocationBounds::new(-40.0, 40.0).unwrap();
        assert!(expected_grid_dev_neg(&sym(), b, &qc).abs() < 1e-6);
        assert!(expected_grid_dev_pos(&sym(), b, &qc).abs() < 1e-6);
    }

    #[test]
    fn grid_expectations_mirror_under_symmetry() {
        let qc = QuadratureConfig::default();
        let b = AllocationBounds::new(-0.7, 0.7).unwrap();
        let neg = expected_grid_dev_neg(&sym(), b, &qc);
        let pos = expected_grid_dev_pos(&sym(), b, &qc);
        assert!((neg + pos).abs() < 1e-12);
    }

    #[test]
    fn expectation_sum_identity() {
        let qc = QuadratureConfig::default();
        let f = DoubleLogisticCdf::new(0.3, 0.9, 1.2, 0.7, 2.5, 0.0)
            .unwrap()
            .centered();
        let b = AllocationBounds::new(-0.8, 0.3).unwrap();
        let s = expected_battery_dev(&f, b, &qc)
            + expected_grid_dev_neg(&f, b, &qc)
            + expected_grid_dev_pos(&f, b, &qc);
        assert!(s.abs() < 1e-5, "{s}");
    }

    #[test]
    fn simpson_derivatives_match_central_differences() {
        let f = DoubleLogisticCdf::new(0.3, 0.9, 1.2, 0.7, 2.5, 0.0)
            .unwrap()
            .centered();
        let c_lo = lower_cutoff(&f, 1e-6);
        let c_hi = upper_cutoff(&f, 1e-6);
        let h = 1e-6;
        for x in [-2.0, -0.4, 0.0] {
            let (_, d) = grid_neg_with_deriv(&f, c_lo, x, 64);
            let fd = (grid_neg_with_deriv(&f, c_lo, x + h, 64).0
                - grid_neg_with_deriv(&f, c_lo, x - h, 64).0)
                / (2.0 * h);
            assert!((d - fd).abs() < 1e-7, "{d} vs {fd}");
            // close to the continuous Leibniz derivative -F(x)
            assert!((d + f.cdf(x)).abs() < 1e-3);
        }
        for x in [0.0, 0.4, 2.0] {
            let (_, d) = grid_pos_with_deriv(&f, c_hi, x, 64);
            let fd = (grid_pos_with_deriv(&f, c_hi, x + h, 64).0
                - grid_pos_with_deriv(&f, c_hi, x - h, 64).0)
                / (2.0 * h);
            assert!((d - fd).abs() < 1e-7, "{d} vs {fd}");
            assert!((d + f.sf(x)).abs() < 1e-3);
        }
    }

    #[test]
    fn battery_deviation_masses() {
        let qc = QuadratureConfig::default();
        let d = build_battery_dev(&sym(), AllocationBounds::ZERO);
        assert_eq!(d.core_mass(&qc), 0.0);
        assert!((d.p1 + d.p2 - 1.0).abs() < 1e-15);

        let d = build_battery_dev(&sym(), AllocationBounds::new(-0.5, 0.5).unwrap());
        assert!((d.p1 - 0.38924).abs() < 5e-6);
        assert!((d.p2 - 0.38924).abs() < 5e-6);
        assert!((d.core_mass(&qc) - 0.22152).abs() < 1e-5);
        assert!((d.total_mass(&qc) - 1.0).abs() < 1e-6);

        let wide = build_battery_dev(&sym(), AllocationBounds::new(-30.0, 30.0).unwrap());
        assert!(wide.p1 + wide.p2 < 1e-6);
        assert!((wide.core_mass(&qc) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn grid_deviation_masses() {
        let g = build_grid_dev(&sym(), AllocationBounds::ZERO);
        assert!(g.atom_zero < 1e-15);
        for z in [-1.3, -0.2, 0.4, 2.2] {
            assert!((g.cdf(z) - sym().cdf(z)).abs() < 1e-15);
        }
        let g = build_grid_dev(&sym(), AllocationBounds::new(-0.5, 0.5).unwrap());
        assert!((g.atom_zero - 0.22152).abs() < 1e-5);
        assert!((g.total_mass() - 1.0).abs() < 1e-12);
        let g = build_grid_dev(&sym(), AllocationBounds::new(-30.0, 30.0).unwrap());
        assert!(g.atom_zero > 1.0 - 1e-6);
    }

    #[test]
    fn grid_quantile_cases() {
        let f = sym();
        let g = build_grid_dev(&f, AllocationBounds::new(-0.5, 0.5).unwrap());
        assert_eq!(g.quantile(0.5), 0.0);
        let g0 = build_grid_dev(&f, AllocationBounds::ZERO);
        for q in [0.05, 0.3, 0.95] {
            assert!((g0.quantile(q) - f.quantile(q)).abs() < 1e-12);
        }
        let b = AllocationBounds::new(-0.3, 0.8).unwrap();
        let g = build_grid_dev(&f, b);
        for q in [0.02, 0.2, 0.9, 0.99] {
            let z = g.quantile(q);
            if z != 0.0 {
                assert!((g.cdf(z) - q).abs() < 1e-10);
            }
        }
    }
}
