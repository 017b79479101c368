//! Detector worldlines in cavity-frame coordinates.
//!
//! Two scenarios are covered: radial free fall from rest through a
//! stationary cavity outside a Schwarzschild black hole, and uniform
//! acceleration through an inertial cavity in flat spacetime. Both are
//! expressed as maps from detector proper time to the cavity rest frame's
//! spatial and temporal coordinates, which is what the mode functions of
//! the quasi-local quantization depend on.
//!
//! Geometric units throughout; the free-fall formulas keep the black-hole
//! mass `m` explicit so backgrounds scale exactly.

use serde::{Deserialize, Serialize};

use crate::numerics::{self, NumericsError};
use crate::ErrorCategory;

#[derive(Debug, Clone, thiserror::Error)]
pub enum KinematicsError {
    #[error("invalid background: mass must be positive, got m = {m}")]
    NonPositiveMass { m: f64 },

    #[error("invalid background: cavity entrance R = {r} must exceed the horizon 2m = {horizon}")]
    EntranceInsideHorizon { r: f64, horizon: f64 },

    #[error("radius r = {r} outside the cavity range ({horizon}, {entrance}]")]
    RadiusOutsideCavity { r: f64, horizon: f64, entrance: f64 },

    #[error(
        "cavity of proper length {length} extends to r = {exit_radius}, \
         inside or beyond the horizon 2m = {horizon}"
    )]
    CavityBeyondHorizon {
        length: f64,
        exit_radius: f64,
        horizon: f64,
    },

    #[error("proper time {tau} is outside the free-fall domain [0, {max_tau})")]
    ProperTimeOutOfRange { tau: f64, max_tau: f64 },

    #[error("proper acceleration must be positive, got {a}")]
    NonPositiveAcceleration { a: f64 },

    #[error("cavity length must be nonnegative and finite, got {length}")]
    InvalidLength { length: f64 },

    #[error(
        "cavity-frame time failed to increase along the worldline near tau = {tau}; \
         the configuration is outside the regime this model supports"
    )]
    TimeNotMonotonic { tau: f64 },

    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl KinematicsError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            KinematicsError::Numerics(e) => e.category(),
            _ => ErrorCategory::Validation,
        }
    }
}

/// Which point of the cavity the matched Rindler acceleration is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    /// The cavity entrance at r = R.
    Entrance,
    /// The proper midpoint of the cavity, r = R - sqrt(1 - 2m/R) L / 2.
    Middle,
}

impl std::fmt::Display for Anchor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Anchor::Entrance => write!(f, "entrance"),
            Anchor::Middle => write!(f, "middle"),
        }
    }
}

/// A Schwarzschild black hole of mass `m` with the cavity entrance held at
/// areal radius `R > 2m` in the asymptotic frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchwarzschildBackground {
    mass: f64,
    entrance_radius: f64,
}

impl SchwarzschildBackground {
    pub fn new(mass: f64, entrance_radius: f64) -> Result<Self, KinematicsError> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(KinematicsError::NonPositiveMass { m: mass });
        }
        if !entrance_radius.is_finite() || entrance_radius <= 2.0 * mass {
            return Err(KinematicsError::EntranceInsideHorizon {
                r: entrance_radius,
                horizon: 2.0 * mass,
            });
        }
        Ok(Self {
            mass,
            entrance_radius,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn entrance_radius(&self) -> f64 {
        self.entrance_radius
    }

    pub fn horizon_radius(&self) -> f64 {
        2.0 * self.mass
    }

    /// The metric factor 1 - 2m/R at the cavity entrance.
    pub fn redshift_factor(&self) -> f64 {
        1.0 - 2.0 * self.mass / self.entrance_radius
    }

    /// Asymptotic-frame radius of the far cavity wall for proper length `L`.
    pub fn exit_radius(&self, length: f64) -> f64 {
        self.entrance_radius - self.redshift_factor().sqrt() * length
    }

    /// Check that a cavity of proper length `length` lies entirely outside
    /// the horizon.
    pub fn check_cavity_fits(&self, length: f64) -> Result<(), KinematicsError> {
        if !(length >= 0.0) || !length.is_finite() {
            return Err(KinematicsError::InvalidLength { length });
        }
        let exit_radius = self.exit_radius(length);
        if exit_radius <= self.horizon_radius() {
            return Err(KinematicsError::CavityBeyondHorizon {
                length,
                exit_radius,
                horizon: self.horizon_radius(),
            });
        }
        Ok(())
    }
}

/// A point of a worldline in cavity-frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorldlinePoint {
    /// Detector proper time.
    pub tau: f64,
    /// Cavity-frame spatial coordinate (r' or x), zero at the entrance wall.
    pub space: f64,
    /// Cavity-frame time coordinate (t' or t), zero at entry.
    pub time: f64,
}

/// Map a worldline's proper time to cavity-frame coordinates.
pub trait Worldline: Sync {
    fn position(&self, tau: f64) -> Result<WorldlinePoint, KinematicsError>;

    /// Largest proper time for which the worldline stays in this model's
    /// domain (infinite when unbounded).
    fn max_tau(&self) -> f64;
}

/// Transform asymptotic-frame coordinates `(r, t)` to the cavity rest frame:
/// `r' = (1 - 2m/R)^{-1/2} (R - r)`, `t' = (1 - 2m/R)^{1/2} t`.
pub fn frame_transform(
    r: f64,
    t: f64,
    bg: &SchwarzschildBackground,
) -> Result<(f64, f64), KinematicsError> {
    if r <= bg.horizon_radius() || r > bg.entrance_radius() {
        return Err(KinematicsError::RadiusOutsideCavity {
            r,
            horizon: bg.horizon_radius(),
            entrance: bg.entrance_radius(),
        });
    }
    let sqrt_f = bg.redshift_factor().sqrt();
    Ok(((bg.entrance_radius() - r) / sqrt_f, sqrt_f * t))
}

/// Radial free fall from rest at the cavity entrance, parametrized by the
/// cycloid angle `theta` with `r = R cos^2(theta/2)` and
/// `tau = sqrt(R^3 / 8m) (theta + sin theta)`.
#[derive(Debug, Clone, Copy)]
pub struct FreeFallWorldline {
    bg: SchwarzschildBackground,
    /// Cycloid parameter at the horizon, `2 arccos sqrt(2m/R)`.
    theta_horizon: f64,
    /// sqrt(R^3 / 8m), the proper-time scale of the cycloid.
    cycloid_scale: f64,
    tan_half_theta_horizon: f64,
    redshift: f64,
    tau_horizon: f64,
}

/// Bracket tolerance for inverting the cycloid relation. Kept near the f64
/// resolution of the relation itself so downstream interpolation of the
/// worldline sees samples that are smooth at the 1e-13 level.
const THETA_ROOT_TOL: f64 = 1e-14;

impl FreeFallWorldline {
    pub fn new(bg: SchwarzschildBackground) -> Self {
        let theta_horizon = 2.0 * (2.0 * bg.mass() / bg.entrance_radius()).sqrt().acos();
        let cycloid_scale = (bg.entrance_radius().powi(3) / (8.0 * bg.mass())).sqrt();
        Self {
            bg,
            theta_horizon,
            cycloid_scale,
            tan_half_theta_horizon: (0.5 * theta_horizon).tan(),
            redshift: bg.redshift_factor(),
            tau_horizon: cycloid_scale * (theta_horizon + theta_horizon.sin()),
        }
    }

    pub fn background(&self) -> &SchwarzschildBackground {
        &self.bg
    }

    pub fn theta_horizon(&self) -> f64 {
        self.theta_horizon
    }

    /// Proper time elapsed since release as a function of the cycloid angle.
    pub fn tau_of_theta(&self, theta: f64) -> f64 {
        self.cycloid_scale * (theta + theta.sin())
    }

    /// Invert the cycloid relation by bracketed root-finding on
    /// `[0, theta_horizon]`.
    pub fn theta_of_tau(&self, tau: f64) -> Result<f64, KinematicsError> {
        if !(0.0..self.tau_horizon).contains(&tau) {
            return Err(KinematicsError::ProperTimeOutOfRange {
                tau,
                max_tau: self.tau_horizon,
            });
        }
        if tau == 0.0 {
            return Ok(0.0);
        }
        let theta = numerics::find_root(
            |theta| self.tau_of_theta(theta) - tau,
            0.0,
            self.theta_horizon,
            THETA_ROOT_TOL,
        )?;
        Ok(theta)
    }

    /// Cavity-frame position at cycloid angle `theta`:
    /// `r' = (1 - 2m/R)^{-1/2} R sin^2(theta/2)` and the matching
    /// coordinate time, whose last term is logarithmic in
    /// `tan(theta_H/2) - tan(theta/2)`.
    pub fn position_at_theta(&self, theta: f64) -> (f64, f64) {
        let r_entrance = self.bg.entrance_radius();
        let mass = self.bg.mass();
        let f = self.redshift;
        let half = 0.5 * theta;

        let space = r_entrance * half.sin().powi(2) / f.sqrt();

        let secular = f
            * (r_entrance.powi(3) / (2.0 * mass)).sqrt()
            * (0.5 * (theta + theta.sin()) + (2.0 * mass / r_entrance) * theta);
        let tan_half = half.tan();
        let log_term = f.sqrt()
            * 2.0
            * mass
            * (2.0 * tan_half / (self.tan_half_theta_horizon - tan_half)).ln_1p();
        (space, secular + log_term)
    }
}

impl Worldline for FreeFallWorldline {
    fn position(&self, tau: f64) -> Result<WorldlinePoint, KinematicsError> {
        let theta = self.theta_of_tau(tau)?;
        let (space, time) = self.position_at_theta(theta);
        Ok(WorldlinePoint { tau, space, time })
    }

    fn max_tau(&self) -> f64 {
        self.tau_horizon
    }
}

/// Uniformly accelerated worldline in flat spacetime, at rest at the cavity
/// entrance `x = 0` at `t = tau = 0`:
/// `x = (cosh(a tau) - 1)/a`, `t = sinh(a tau)/a`.
#[derive(Debug, Clone, Copy)]
pub struct RindlerWorldline {
    accel: f64,
}

impl RindlerWorldline {
    pub fn new(accel: f64) -> Result<Self, KinematicsError> {
        if !(accel > 0.0) || !accel.is_finite() {
            return Err(KinematicsError::NonPositiveAcceleration { a: accel });
        }
        Ok(Self { accel })
    }

    pub fn acceleration(&self) -> f64 {
        self.accel
    }
}

impl Worldline for RindlerWorldline {
    fn position(&self, tau: f64) -> Result<WorldlinePoint, KinematicsError> {
        let half = 0.5 * self.accel * tau;
        // cosh(a tau) - 1 = 2 sinh^2(a tau / 2), free of cancellation for
        // small arguments.
        let space = 2.0 * half.sinh().powi(2) / self.accel;
        let time = (self.accel * tau).sinh() / self.accel;
        Ok(WorldlinePoint { tau, space, time })
    }

    fn max_tau(&self) -> f64 {
        f64::INFINITY
    }
}

/// Proper time for the free-falling detector to cross a cavity of proper
/// length `length`: solves `r'(tau) = L` through the cycloid angle.
pub fn transit_time_schwarzschild(
    bg: &SchwarzschildBackground,
    length: f64,
) -> Result<f64, KinematicsError> {
    bg.check_cavity_fits(length)?;
    if length == 0.0 {
        return Ok(0.0);
    }
    // sin^2(theta_T / 2) = L sqrt(1 - 2m/R) / R
    let s = length * bg.redshift_factor().sqrt() / bg.entrance_radius();
    let theta_exit = 2.0 * s.sqrt().asin();
    let wl = FreeFallWorldline::new(*bg);
    Ok(wl.tau_of_theta(theta_exit))
}

/// Proper time for the accelerated detector to cross a cavity of proper
/// length `length`: `T = arccosh(1 + a L) / a`, evaluated through a series
/// for small `a L` where the direct form loses precision.
pub fn transit_time_rindler(accel: f64, length: f64) -> Result<f64, KinematicsError> {
    if !(accel > 0.0) || !accel.is_finite() {
        return Err(KinematicsError::NonPositiveAcceleration { a: accel });
    }
    if !(length >= 0.0) || !length.is_finite() {
        return Err(KinematicsError::InvalidLength { length });
    }
    let al = accel * length;
    if al < 1e-4 {
        // arccosh(1 + e) = sqrt(2 e) (1 - e/12 + 3 e^2/160 - ...)
        Ok((2.0 * length / accel).sqrt() * (1.0 - al / 12.0 + 3.0 * al * al / 160.0))
    } else {
        // arccosh(1 + e) = ln(1 + e + sqrt(e (e + 2)))
        Ok((al + (al * (al + 2.0)).sqrt()).ln_1p() / accel)
    }
}

/// The proper acceleration of a static observer at radius `r`:
/// `a = m / (r^2 sqrt(1 - 2m/r))`.
fn static_acceleration(mass: f64, r: f64) -> f64 {
    mass / (r * r * (1.0 - 2.0 * mass / r).sqrt())
}

/// Acceleration assigned to the Rindler detector so that it matches the
/// local gravitational field strength at the chosen anchor point of the
/// cavity.
pub fn matched_acceleration(
    bg: &SchwarzschildBackground,
    length: f64,
    anchor: Anchor,
) -> Result<f64, KinematicsError> {
    bg.check_cavity_fits(length)?;
    let r_anchor = match anchor {
        Anchor::Entrance => bg.entrance_radius(),
        Anchor::Middle => bg.entrance_radius() - bg.redshift_factor().sqrt() * length / 2.0,
    };
    if r_anchor <= bg.horizon_radius() {
        return Err(KinematicsError::CavityBeyondHorizon {
            length,
            exit_radius: r_anchor,
            horizon: bg.horizon_radius(),
        });
    }
    Ok(static_acceleration(bg.mass(), r_anchor))
}

/// Verify that the cavity-frame time increases strictly along `[0, tau_end]`
/// (sampled), erroring out instead of silently producing an unphysical
/// response when it does not.
pub fn check_time_monotonic<W: Worldline + ?Sized>(
    worldline: &W,
    tau_end: f64,
    samples: usize,
) -> Result<(), KinematicsError> {
    let samples = samples.max(2);
    let mut prev = worldline.position(0.0)?.time;
    for k in 1..=samples {
        let tau = tau_end * k as f64 / samples as f64;
        let time = worldline.position(tau)?.time;
        if time <= prev {
            return Err(KinematicsError::TimeNotMonotonic { tau });
        }
        prev = time;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bg_10() -> SchwarzschildBackground {
        SchwarzschildBackground::new(1.0, 10.0).unwrap()
    }

    #[test]
    fn background_rejects_entrance_inside_horizon() {
        assert!(matches!(
            SchwarzschildBackground::new(1.0, 1.5),
            Err(KinematicsError::EntranceInsideHorizon { .. })
        ));
        assert!(matches!(
            SchwarzschildBackground::new(-1.0, 10.0),
            Err(KinematicsError::NonPositiveMass { .. })
        ));
    }

    #[test]
    fn frame_transform_entrance_maps_to_origin() {
        let (rp, tp) = frame_transform(10.0, 0.0, &bg_10()).unwrap();
        assert_eq!(rp, 0.0);
        assert_eq!(tp, 0.0);
    }

    #[test]
    fn frame_transform_time_dilation() {
        let (_, tp) = frame_transform(10.0, 5.0, &bg_10()).unwrap();
        assert_relative_eq!(tp, 5.0 * 0.8_f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn frame_transform_inverts_hand_computed_radius() {
        // r' = 2 corresponds to r = R - 2 sqrt(1 - 2m/R) = 8.2111...
        let (rp, _) = frame_transform(8.2111, 0.0, &bg_10()).unwrap();
        assert!((rp - 2.0).abs() < 1e-3);
        let exact = 10.0 - 2.0 * 0.8_f64.sqrt();
        let (rp, _) = frame_transform(exact, 0.0, &bg_10()).unwrap();
        assert_relative_eq!(rp, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn frame_transform_rejects_out_of_range_radii() {
        assert!(frame_transform(10.5, 0.0, &bg_10()).is_err());
        assert!(frame_transform(1.9, 0.0, &bg_10()).is_err());
    }

    #[test]
    fn theta_of_tau_at_release() {
        let wl = FreeFallWorldline::new(bg_10());
        assert_eq!(wl.theta_of_tau(0.0).unwrap(), 0.0);
    }

    #[test]
    fn theta_of_tau_matches_forward_map() {
        let wl = FreeFallWorldline::new(bg_10());
        // Forward map: sqrt(125) (theta + sin theta) = 27.50 at theta ~ 1.4652.
        let theta = wl.theta_of_tau(27.50).unwrap();
        assert!((theta - 1.465).abs() < 1e-3);
        assert_relative_eq!(wl.tau_of_theta(theta), 27.50, epsilon = 1e-10);
    }

    #[test]
    fn theta_horizon_value() {
        let wl = FreeFallWorldline::new(bg_10());
        assert_relative_eq!(
            wl.theta_horizon(),
            2.0 * (0.2_f64).sqrt().acos(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn theta_of_tau_rejects_beyond_horizon() {
        let wl = FreeFallWorldline::new(bg_10());
        let err = wl.theta_of_tau(wl.max_tau() * 1.01).unwrap_err();
        assert!(matches!(err, KinematicsError::ProperTimeOutOfRange { .. }));
    }

    #[test]
    fn freefall_starts_at_origin() {
        let wl = FreeFallWorldline::new(bg_10());
        let p = wl.position(0.0).unwrap();
        assert_eq!(p.space, 0.0);
        assert_eq!(p.time, 0.0);
    }

    #[test]
    fn freefall_space_at_known_angle() {
        let wl = FreeFallWorldline::new(bg_10());
        let (space, _) = wl.position_at_theta(1.4650);
        // (1 - 2m/R)^{-1/2} R sin^2(theta/2) at theta = 1.4650
        assert!((space - 5.0).abs() < 1e-2);
        assert_relative_eq!(
            space,
            10.0 * (0.7325_f64).sin().powi(2) / 0.8_f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn freefall_time_exceeds_redshifted_proper_time() {
        let bg = bg_10();
        let wl = FreeFallWorldline::new(bg);
        let t_transit = transit_time_schwarzschild(&bg, 5.0).unwrap();
        let mut prev_time = 0.0;
        let mut prev_space = 0.0;
        for k in 1..=200 {
            let tau = t_transit * k as f64 / 200.0;
            let p = wl.position(tau).unwrap();
            assert!(p.time > prev_time, "time must increase at tau = {tau}");
            assert!(p.space > prev_space, "space must increase at tau = {tau}");
            assert!(p.time >= bg.redshift_factor().sqrt() * tau - 1e-12);
            prev_time = p.time;
            prev_space = p.space;
        }
    }

    #[test]
    fn transit_time_exits_at_cavity_length() {
        let bg = bg_10();
        let t = transit_time_schwarzschild(&bg, 5.0).unwrap();
        assert!((t - 27.50).abs() < 0.01);
        let wl = FreeFallWorldline::new(bg);
        let p = wl.position(t).unwrap();
        assert_relative_eq!(p.space, 5.0, max_relative = 1e-8);
    }

    #[test]
    fn transit_time_zero_length() {
        assert_eq!(transit_time_schwarzschild(&bg_10(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn transit_time_rejects_cavity_reaching_horizon() {
        let bg = bg_10();
        // exit radius = 10 - sqrt(0.8) L <= 2 for L >= 8.944
        assert!(matches!(
            transit_time_schwarzschild(&bg, 9.0),
            Err(KinematicsError::CavityBeyondHorizon { .. })
        ));
    }

    #[test]
    fn transit_time_newtonian_limit() {
        // For R >> L, m: tau_T -> sqrt(2 L / g) with g = m / R^2.
        let bg = SchwarzschildBackground::new(1.0, 1e6).unwrap();
        let t = transit_time_schwarzschild(&bg, 5.0).unwrap();
        let g = 1.0_f64 / 1e12;
        assert_relative_eq!(t, (2.0 * 5.0 / g).sqrt(), max_relative = 1e-5);
    }

    #[test]
    fn rindler_position_closed_form() {
        let wl = RindlerWorldline::new(1.0).unwrap();
        let p = wl.position(1.0).unwrap();
        assert_relative_eq!(p.space, 1.0_f64.cosh() - 1.0, epsilon = 1e-14);
        assert_relative_eq!(p.time, 1.0_f64.sinh(), epsilon = 1e-14);
        let origin = wl.position(0.0).unwrap();
        assert_eq!(origin.space, 0.0);
        assert_eq!(origin.time, 0.0);
    }

    #[test]
    fn rindler_small_argument_is_stable() {
        let a = 1e-8;
        let wl = RindlerWorldline::new(a).unwrap();
        let p = wl.position(1e-3).unwrap();
        // x ~ a tau^2 / 2 to excellent accuracy here
        assert_relative_eq!(p.space, 0.5 * a * 1e-6, max_relative = 1e-10);
    }

    #[test]
    fn rindler_transit_time_solves_exit_condition() {
        let a = 0.011180339887498949;
        let t = transit_time_rindler(a, 5.0).unwrap();
        assert!((t - 29.77).abs() < 0.01);
        let wl = RindlerWorldline::new(a).unwrap();
        assert_relative_eq!(wl.position(t).unwrap().space, 5.0, max_relative = 1e-12);
    }

    #[test]
    fn rindler_transit_series_matches_direct_at_crossover() {
        // Continuity of the two evaluation branches around a L = 1e-4.
        let length = 1.0;
        for accel in [0.99999e-4, 1.00001e-4] {
            let t = transit_time_rindler(accel, length).unwrap();
            let exact = (1.0 + accel * length).acosh() / accel;
            assert_relative_eq!(t, exact, max_relative = 1e-10);
        }
    }

    #[test]
    fn rindler_transit_small_al_limit() {
        let t = transit_time_rindler(1e-9, 2.0).unwrap();
        assert_relative_eq!(t, (2.0_f64 * 2.0 / 1e-9).sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn matched_acceleration_entrance_value() {
        let a = matched_acceleration(&bg_10(), 5.0, Anchor::Entrance).unwrap();
        assert_relative_eq!(a, 0.0111803398874989, epsilon = 1e-12);
    }

    #[test]
    fn matched_acceleration_middle_value() {
        // r_mid = 10 - sqrt(0.8) * 2 ~ 8.2111 for L = 4; direct evaluation
        // of m / (r^2 sqrt(1 - 2m/r)) there gives 0.017054.
        let a = matched_acceleration(&bg_10(), 4.0, Anchor::Middle).unwrap();
        let r_mid = 10.0 - 0.8_f64.sqrt() * 2.0;
        assert_relative_eq!(
            a,
            1.0 / (r_mid * r_mid * (1.0 - 2.0 / r_mid).sqrt()),
            epsilon = 1e-14
        );
        assert!((a - 0.017054).abs() < 2e-5);
    }

    #[test]
    fn matched_acceleration_vanishes_with_mass() {
        let bg = SchwarzschildBackground::new(1e-9, 10.0).unwrap();
        let a = matched_acceleration(&bg, 1.0, Anchor::Entrance).unwrap();
        assert!(a < 1e-10);
    }

    #[test]
    fn freefall_time_monotonic_check_passes() {
        let bg = bg_10();
        let wl = FreeFallWorldline::new(bg);
        let t = transit_time_schwarzschild(&bg, 5.0).unwrap();
        check_time_monotonic(&wl, t, 64).unwrap();
    }
}
