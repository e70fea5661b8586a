//! Probabilistic day-ahead battery scheduling.
//!
//! Prosumption uncertainty is split per time step between a home battery
//! and the grid: deviations inside a chosen interval `[x_lower, x_upper]`
//! are absorbed by the battery, the rest is passed on to the grid. Both
//! shares are mixed random variables (continuous parts plus atoms) whose
//! probabilities and expectations enter a nonlinear stochastic program over
//! the nominal battery power and the interval bounds.
//!
//! Module map:
//!
//! - [`forecast`]: quantile forecasts, smoothing, double-logistic fits
//! - [`mixed`]: mixed-distribution math and Simpson quadrature
//! - [`battery`]: nominal trajectory, uncertainty envelopes, feasibility
//! - [`scheduler`]: the stochastic program and its augmented-Lagrangian solver
//! - [`montecarlo`]: sampling oracle for every analytic quantity
//! - [`scenario`]: configuration, end-to-end runs and cross-case reports

pub mod battery;
pub mod error;
pub mod forecast;
pub mod mixed;
pub mod montecarlo;
pub mod scenario;
pub mod scheduler;

pub use error::{Error, Result};
