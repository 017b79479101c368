//! Transition probability of an Unruh-DeWitt detector crossing a Dirichlet
//! cavity, in two settings that the equivalence principle ties together:
//!
//! * a detector released from rest that falls radially through a stationary
//!   cavity held outside a Schwarzschild black hole, and
//! * a uniformly accelerated detector crossing an inertial cavity in flat
//!   spacetime, with the acceleration matched to the local gravitational
//!   field strength at a chosen anchor point of the cavity.
//!
//! The cavity field is quantized quasi-locally: the modes are the flat-space
//! stationary waves `sin(n pi x / L)` of the cavity rest frame, which is a
//! good approximation whenever the tortoise-coordinate extent of the cavity
//! stays close to its proper length. The [`validity`] module computes that
//! estimator; [`kinematics`] provides the worldlines, [`detector`] the
//! second-order perturbative response, [`experiments`] deterministic
//! parameter sweeps, and [`numerics`] the adaptive quadrature and
//! root-finding kernels everything is built on.
//!
//! All quantities use geometric units (G = c = hbar = 1) and are expressed
//! in units of the black-hole mass.

pub mod detector;
pub mod experiments;
pub mod kinematics;
pub mod numerics;
pub mod validity;

pub use detector::{
    CavitySpec, DetectorSpec, ModeIntegral, TransitionOptions, TransitionResult,
};
pub use kinematics::{
    FreeFallWorldline, RindlerWorldline, SchwarzschildBackground, Worldline, WorldlinePoint,
};
pub use numerics::{QuadratureConfig, QuadratureResult};
pub use validity::EstimatorReport;

/// Broad classification of failures, used by callers that must map errors
/// onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// The request itself was invalid (bad parameters, physical invariant
    /// violated before any computation started).
    Validation,
    /// The computation ran but a numerical accuracy target was not met.
    Accuracy,
}
