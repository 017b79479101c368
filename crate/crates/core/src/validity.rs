//! Validity estimator of the quasi-local approximation.
//!
//! The cavity modes are taken to be flat-space stationary waves in the
//! cavity rest frame. That is justified when the wave equation, written in
//! the tortoise (Regge-Wheeler) coordinate where it takes the flat form up
//! to a potential, stretches the cavity by close to its proper length. The
//! estimator is the ratio of the cavity's tortoise-coordinate extent to its
//! proper length; it is 1 in flat spacetime and grows as the cavity
//! approaches the horizon or gets longer.

use serde::Serialize;

use crate::kinematics::KinematicsError;

/// The estimator and the configuration it was computed for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorReport {
    /// Tortoise extent over proper length; >= 1 for every valid cavity.
    pub ratio: f64,
    /// Cavity entrance radius.
    pub entrance_radius: f64,
    /// Cavity proper length.
    pub length: f64,
    /// Black-hole mass.
    pub mass: f64,
}

/// The tortoise coordinate `r* = r + 2m ln(r / 2m - 1)`, defined for
/// `r > 2m`.
pub fn tortoise(r: f64, mass: f64) -> Result<f64, KinematicsError> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(KinematicsError::NonPositiveMass { m: mass });
    }
    if !(r > 2.0 * mass) {
        return Err(KinematicsError::RadiusOutsideCavity {
            r,
            horizon: 2.0 * mass,
            entrance: f64::INFINITY,
        });
    }
    Ok(r + 2.0 * mass * (r / (2.0 * mass) - 1.0).ln())
}

/// Validity estimator as the tortoise-coordinate difference across the
/// cavity divided by the proper length. This definitional form is the
/// ground truth; [`estimator_closed_form`] is its algebraic reduction.
pub fn estimator(
    entrance_radius: f64,
    length: f64,
    mass: f64,
) -> Result<EstimatorReport, KinematicsError> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(KinematicsError::InvalidLength { length });
    }
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(KinematicsError::NonPositiveMass { m: mass });
    }
    if !(entrance_radius > 2.0 * mass) {
        return Err(KinematicsError::EntranceInsideHorizon {
            r: entrance_radius,
            horizon: 2.0 * mass,
        });
    }
    let exit_radius = entrance_radius - (1.0 - 2.0 * mass / entrance_radius).sqrt() * length;
    if exit_radius <= 2.0 * mass {
        return Err(KinematicsError::CavityBeyondHorizon {
            length,
            exit_radius,
            horizon: 2.0 * mass,
        });
    }
    let ratio = (tortoise(entrance_radius, mass)? - tortoise(exit_radius, mass)?) / length;
    Ok(EstimatorReport {
        ratio,
        entrance_radius,
        length,
        mass,
    })
}

/// Closed form of the estimator,
/// `sqrt(1 - 2m/R) + (2m/L) ln[ sqrt(R^2 - 2mR) / (sqrt(R^2 - 2mR) - L) ]`.
///
/// The logarithmic term carries a plus sign: the tortoise difference is
/// strictly larger than the proper length outside the horizon, so the ratio
/// exceeds 1.
pub fn estimator_closed_form(
    entrance_radius: f64,
    length: f64,
    mass: f64,
) -> Result<f64, KinematicsError> {
    // Same validity domain as the definitional form.
    estimator(entrance_radius, length, mass)?;
    let s = (entrance_radius * entrance_radius - 2.0 * mass * entrance_radius).sqrt();
    Ok((1.0 - 2.0 * mass / entrance_radius).sqrt()
        + (2.0 * mass / length) * (length / (s - length)).ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tortoise_log_vanishes_at_4m() {
        assert_relative_eq!(tortoise(4.0, 1.0).unwrap(), 4.0, epsilon = 1e-15);
        assert_relative_eq!(tortoise(2.0, 0.5).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn tortoise_at_r10() {
        assert_relative_eq!(
            tortoise(10.0, 1.0).unwrap(),
            10.0 + 2.0 * 4.0_f64.ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn tortoise_rejects_horizon() {
        assert!(tortoise(2.0, 1.0).is_err());
        assert!(tortoise(1.0, 1.0).is_err());
    }

    #[test]
    fn estimator_reference_values() {
        let report = estimator(10.0, 2.0, 1.0).unwrap();
        assert!((report.ratio - 1.1475).abs() < 1e-3);
        let report = estimator(40.0, 6.0, 1.0).unwrap();
        assert!((report.ratio - 1.030).abs() < 1e-3);
    }

    #[test]
    fn estimator_tends_to_one_far_away() {
        let report = estimator(1e9, 2.0, 1.0).unwrap();
        assert!((report.ratio - 1.0).abs() < 1e-8);
    }

    #[test]
    fn estimator_always_above_one() {
        for &(r, l) in &[(5.0, 0.5), (10.0, 2.0), (10.0, 7.0), (100.0, 6.0)] {
            assert!(estimator(r, l, 1.0).unwrap().ratio > 1.0, "R={r} L={l}");
        }
    }

    #[test]
    fn estimator_closed_form_agrees_with_tortoise_difference() {
        for &(r, l, m) in &[(10.0, 2.0, 1.0), (40.0, 6.0, 1.0), (5.5, 1.2, 0.7)] {
            let diff = estimator(r, l, m).unwrap().ratio;
            let closed = estimator_closed_form(r, l, m).unwrap();
            assert_relative_eq!(diff, closed, max_relative = 1e-12);
        }
    }

    #[test]
    fn estimator_rejects_cavity_reaching_horizon() {
        assert!(matches!(
            estimator(5.0, 6.0, 1.0),
            Err(KinematicsError::CavityBeyondHorizon { .. })
        ));
        assert!(estimator(1.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn estimator_scale_invariance() {
        let base = estimator(10.0, 2.0, 1.0).unwrap().ratio;
        for kappa in [0.25, 3.0, 1e3] {
            let scaled = estimator(10.0 * kappa, 2.0 * kappa, kappa).unwrap().ratio;
            assert_relative_eq!(base, scaled, max_relative = 1e-13);
        }
    }
}
