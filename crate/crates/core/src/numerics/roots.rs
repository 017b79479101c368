//! Bracketing root-finder: secant steps inside a sign-change bracket, with
//! periodic bisection to guarantee convergence. No derivatives are used.

use super::NumericsError;

/// Find the root of a continuous function bracketed by `[lo, hi]`.
///
/// Requires `g(lo)` and `g(hi)` to have opposite signs (or one of them to
/// vanish, in which case that endpoint is returned). The bracket is shrunk
/// until its width is at most `tol`; the midpoint of the final bracket is
/// returned.
pub fn find_root<G>(g: G, lo: f64, hi: f64, tol: f64) -> Result<f64, NumericsError>
where
    G: Fn(f64) -> f64,
{
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(NumericsError::InvalidRootRequest(format!(
            "invalid bracket [{lo}, {hi}]"
        )));
    }
    if !(tol > 0.0) {
        return Err(NumericsError::InvalidRootRequest(format!(
            "tolerance must be positive, got {tol}"
        )));
    }

    let g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(NumericsError::InvalidBracket { lo, hi, g_lo, g_hi });
    }

    let mut a = lo;
    let mut b = hi;
    let mut ga = g_lo;
    let mut gb = g_hi;

    // Width halves at least every third iteration, so 3 * 64 bisections
    // always saturate f64 resolution.
    for iteration in 0.. {
        if b - a <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break; // bracket at floating-point resolution
        }
        let secant = b - gb * (b - a) / (gb - ga);
        let x = if iteration % 3 == 2 || !secant.is_finite() || secant <= a || secant >= b {
            mid
        } else {
            secant
        };
        let gx = g(x);
        if gx == 0.0 {
            return Ok(x);
        }
        if gx.signum() == ga.signum() {
            a = x;
            ga = gx;
        } else {
            b = x;
            gb = gx;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let root = find_root(|x| x * x - 2.0, 1.0, 2.0, 1e-12).unwrap();
        assert!((root - std::f64::consts::SQRT_2).abs() < 1e-11);
    }

    #[test]
    fn endpoint_root_is_returned_directly() {
        let root = find_root(|x| x - 1.0, 1.0, 3.0, 1e-12).unwrap();
        assert_eq!(root, 1.0);
        let root = find_root(|x| x - 3.0, 1.0, 3.0, 1e-12).unwrap();
        assert_eq!(root, 3.0);
    }

    #[test]
    fn same_sign_bracket_is_rejected() {
        let err = find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12).unwrap_err();
        assert!(matches!(err, NumericsError::InvalidBracket { .. }));
    }

    #[test]
    fn cycloid_residual_round_trip() {
        // tau(theta) = sqrt(R^3 / 8m) (theta + sin theta) at R = 10, m = 1;
        // forward-evaluating at theta = 1.465 gives tau ~ 27.50.
        let c = (10.0_f64.powi(3) / 8.0).sqrt();
        let tau = c * (1.465 + 1.465_f64.sin());
        let theta = find_root(|th| c * (th + th.sin()) - tau, 0.0, 3.0, 1e-12).unwrap();
        assert!((theta - 1.465).abs() < 1e-10);
    }

    #[test]
    fn steep_logarithmic_function() {
        let root = find_root(|x| (x / 3.0).ln(), 0.1, 50.0, 1e-13).unwrap();
        assert!((root - 3.0).abs() < 1e-12);
    }
}
