//! Reusable numerical kernels: adaptive quadrature for smooth oscillatory
//! complex integrands (1D, and iterated 2D over a triangular domain) and
//! derivative-free bracketing root-finding.
//!
//! All functions here are pure; they hold no shared mutable state and are
//! safe to call concurrently.

mod chebyshev;
mod quadrature;
mod roots;

pub use chebyshev::{eval_pair, Chebyshev};
pub use quadrature::{integrate_1d, integrate_triangle};
pub use roots::find_root;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ErrorCategory;

/// Tolerances and budgets for the adaptive quadrature routines.
///
/// A panel is subdivided when its error estimate is too large for the
/// requested tolerance, or when the phase of the integrand is estimated to
/// change by more than `max_phase_per_panel` across it. The phase trigger
/// keeps per-panel oscillation bounded for integrands of the form
/// `exp(i phi(t)) g(t)` whose error estimates alone can be fooled by
/// aliasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Absolute tolerance on the integral value.
    pub abs_tol: f64,
    /// Relative tolerance on the integral value.
    pub rel_tol: f64,
    /// Budget of panel evaluations before giving up.
    pub max_subdivisions: usize,
    /// Estimated phase change (radians) above which a panel is split
    /// regardless of its error estimate.
    pub max_phase_per_panel: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        // Transition probabilities are O(lambda^2) ~ 1e-4; the integrals
        // feeding them must be accurate far below that.
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 1_000_000,
            max_phase_per_panel: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(NumericsError::InvalidConfig(format!(
                "abs_tol must be positive and finite, got {}",
                self.abs_tol
            )));
        }
        if !(self.rel_tol > 0.0) || !self.rel_tol.is_finite() {
            return Err(NumericsError::InvalidConfig(format!(
                "rel_tol must be positive and finite, got {}",
                self.rel_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(NumericsError::InvalidConfig(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        if !(self.max_phase_per_panel > 0.0) {
            return Err(NumericsError::InvalidConfig(format!(
                "max_phase_per_panel must be positive, got {}",
                self.max_phase_per_panel
            )));
        }
        Ok(())
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    /// The integral estimate.
    pub value: Complex64,
    /// Estimated absolute error of `value`.
    pub error_estimate: f64,
    /// Number of panel evaluations spent.
    pub panels_used: usize,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum NumericsError {
    #[error("invalid integration interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "quadrature accuracy not reached after {panels_used} panels: \
         error estimate {error_estimate:.3e} exceeds tolerance {tolerance:.3e}"
    )]
    AccuracyNotReached {
        /// Best available estimate of the integral.
        value: Complex64,
        error_estimate: f64,
        panels_used: usize,
        tolerance: f64,
    },

    #[error(
        "root not bracketed on [{lo}, {hi}]: g({lo}) = {g_lo:.6e} and \
         g({hi}) = {g_hi:.6e} have the same sign"
    )]
    InvalidBracket {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
    },

    #[error("invalid root-finding request: {0}")]
    InvalidRootRequest(String),
}

impl NumericsError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            NumericsError::AccuracyNotReached { .. } => ErrorCategory::Accuracy,
            _ => ErrorCategory::Validation,
        }
    }
}
