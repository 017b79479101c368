//! Globally adaptive Gauss-Kronrod quadrature for complex-valued integrands.
//!
//! Panels are refined worst-error-first until the summed error estimate
//! meets `max(abs_tol, rel_tol * |value|)`. Before entering the refinement
//! queue every panel must pass the phase test: if the integrand's argument
//! is estimated to wind by more than `max_phase_per_panel` across the panel
//! it is bisected outright, so oscillatory integrands are resolved even
//! where a coarse error estimate would look converged.
//!
//! The QUADPACK-style error estimates are floored at 50 eps of the L1 norm
//! of the integrand, so no tolerance below that floor can ever be reported
//! as met; acceptance therefore also admits estimates that have reached the
//! roundoff floor of the requested integral.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::{NumericsError, QuadratureConfig, QuadratureResult};

// 15-point Kronrod abscissae (positive half) and the embedded 7-point Gauss
// weights, from the QUADPACK tables.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Multiple of `eps * integral(|f|)` at which an error estimate counts as
/// having reached the roundoff floor. The per-panel floors sum to exactly
/// 50 eps of the L1 norm, so 60 leaves headroom for aggregation noise.
const ROUNDOFF_FLOOR: f64 = 60.0 * f64::EPSILON;

struct PanelEval {
    value: Complex64,
    error: f64,
    res_abs: f64,
    phase: f64,
}

/// QUADPACK-style error rescaling: sharpen the raw |K15 - G7| difference
/// using the variation of the integrand, floored at 50 eps of the absolute
/// integral.
fn rescale_error(raw: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = raw.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

/// Estimated winding of the oscillatory phase of f across the panel, from
/// consecutive node values.
///
/// Arguments are compared modulo pi (the direction of the line through the
/// origin), so a real-valued envelope factor crossing zero contributes
/// nothing: a sign flip is a point event that no amount of subdivision can
/// shrink, while genuine `exp(i phi(t))` winding accumulates gap by gap.
/// Nodes where |f| is negligible relative to the panel maximum carry no
/// phase information and are skipped.
fn phase_change(values: &[Complex64; 15]) -> f64 {
    let max_norm = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max_norm == 0.0 {
        return 0.0;
    }
    let cutoff = 1e-14 * max_norm;
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for v in values {
        if v.norm() < cutoff {
            continue;
        }
        let arg = v.arg();
        if let Some(p) = prev {
            let mut d = arg - p;
            d -= PI * (d / PI).round();
            total += d.abs();
        }
        prev = Some(arg);
    }
    total
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> PanelEval {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    // All 15 nodes in ascending position, so the phase estimate can walk
    // them in order. values[i] and values[14 - i] share the weight WGK[i].
    let mut values = [Complex64::ZERO; 15];
    for i in 0..7 {
        values[i] = f(center - half * XGK[i]);
        values[14 - i] = f(center + half * XGK[i]);
    }
    values[7] = f(center);

    let mut kronrod = WGK[7] * values[7];
    let mut res_abs = WGK[7] * values[7].norm();
    for i in 0..7 {
        kronrod += WGK[i] * (values[i] + values[14 - i]);
        res_abs += WGK[i] * (values[i].norm() + values[14 - i].norm());
    }

    // The embedded 7-point Gauss rule lives on the odd Kronrod nodes.
    let mut gauss = WG[3] * values[7];
    for j in 0..3 {
        gauss += WG[j] * (values[2 * j + 1] + values[13 - 2 * j]);
    }

    let mean = kronrod * 0.5;
    let mut res_asc = WGK[7] * (values[7] - mean).norm();
    for i in 0..7 {
        res_asc += WGK[i] * ((values[i] - mean).norm() + (values[14 - i] - mean).norm());
    }

    let raw = ((kronrod - gauss) * half).norm();
    PanelEval {
        value: kronrod * half,
        error: rescale_error(raw, res_abs * half.abs(), res_asc * half.abs()),
        res_abs: res_abs * half.abs(),
        phase: phase_change(&values),
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
    res_abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    // Max-heap on error; ties resolved by position so pop order (and with it
    // the whole refinement history) is deterministic.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn min_width(a: f64, b: f64) -> f64 {
    64.0 * f64::EPSILON * (1.0 + a.abs().max(b.abs()))
}

/// Compensated (Neumaier) summation of the final panel list, in ascending
/// position order, so the result is independent of the refinement history's
/// heap order. Returns (value, error sum, L1-norm sum).
fn ordered_sum(panels: &mut Vec<Panel>) -> (Complex64, f64, f64) {
    panels.sort_unstable_by(|p, q| p.a.total_cmp(&q.a));
    let mut sum_re = 0.0;
    let mut sum_im = 0.0;
    let mut c_re = 0.0;
    let mut c_im = 0.0;
    let mut err = 0.0;
    let mut res_abs = 0.0;
    for p in panels.iter() {
        let t = sum_re + p.value.re;
        c_re += if sum_re.abs() >= p.value.re.abs() {
            (sum_re - t) + p.value.re
        } else {
            (p.value.re - t) + sum_re
        };
        sum_re = t;
        let t = sum_im + p.value.im;
        c_im += if sum_im.abs() >= p.value.im.abs() {
            (sum_im - t) + p.value.im
        } else {
            (p.value.im - t) + sum_im
        };
        sum_im = t;
        err += p.error;
        res_abs += p.res_abs;
    }
    (Complex64::new(sum_re + c_re, sum_im + c_im), err, res_abs)
}

pub(crate) struct IntegralDiagnostics {
    /// Approximate integral of |f| over the interval.
    pub res_abs: f64,
}

pub(crate) fn integrate_1d_full<F>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<(QuadratureResult, IntegralDiagnostics), NumericsError>
where
    F: Fn(f64) -> Complex64,
{
    cfg.validate()?;
    if !a.is_finite() || !b.is_finite() || a > b {
        return Err(NumericsError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok((
            QuadratureResult {
                value: Complex64::ZERO,
                error_estimate: 0.0,
                panels_used: 0,
            },
            IntegralDiagnostics { res_abs: 0.0 },
        ));
    }

    let mut evals: usize = 0;
    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();

    // Depth-first phase pre-splitting: bisect until each panel's estimated
    // phase change is below the configured bound, then hand it to the
    // error-driven refinement queue. Left halves are processed first so the
    // traversal order is fixed.
    let mut pending: Vec<(f64, f64)> = vec![(a, b)];
    while let Some((pa, pb)) = pending.pop() {
        let ev = gk15(&f, pa, pb);
        evals += 1;
        let splittable = (pb - pa) > min_width(pa, pb);
        if ev.phase > cfg.max_phase_per_panel && splittable && evals < cfg.max_subdivisions {
            let mid = 0.5 * (pa + pb);
            pending.push((mid, pb));
            pending.push((pa, mid));
        } else {
            heap.push(Panel {
                a: pa,
                b: pb,
                value: ev.value,
                error: ev.error,
                res_abs: ev.res_abs,
            });
        }
    }

    // Running totals steer the refinement; the authoritative value is
    // re-summed in position order at the end.
    let mut total_value: Complex64 = heap.iter().map(|p| p.value).sum();
    let mut total_error: f64 = heap.iter().map(|p| p.error).sum();
    let mut total_res_abs: f64 = heap.iter().map(|p| p.res_abs).sum();

    // Refinement stops when splitting no longer reduces the error estimate
    // (roundoff-limited panels), tracked over consecutive splits.
    let mut stagnant_splits = 0_u32;

    while evals < cfg.max_subdivisions && stagnant_splits < 40 {
        let tol = cfg
            .abs_tol
            .max(cfg.rel_tol * total_value.norm())
            .max(ROUNDOFF_FLOOR * total_res_abs);
        if total_error <= tol {
            break;
        }
        let worst = heap.pop().expect("refinement queue cannot be empty");
        if (worst.b - worst.a) <= min_width(worst.a, worst.b) {
            // Cannot usefully split further; the interval is resolution
            // limited at this tolerance.
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        evals += 2;
        if left.error + right.error >= 0.99 * worst.error {
            stagnant_splits += 1;
        } else {
            stagnant_splits = 0;
        }
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        total_res_abs += left.res_abs + right.res_abs - worst.res_abs;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: left.value,
            error: left.error,
            res_abs: left.res_abs,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: right.value,
            error: right.error,
            res_abs: right.res_abs,
        });
    }

    let mut panels = heap.into_vec();
    let (value, error_estimate, res_abs) = ordered_sum(&mut panels);
    let tolerance = cfg
        .abs_tol
        .max(cfg.rel_tol * value.norm())
        .max(ROUNDOFF_FLOOR * res_abs);
    let result = QuadratureResult {
        value,
        error_estimate,
        panels_used: evals,
    };
    if error_estimate <= tolerance {
        Ok((result, IntegralDiagnostics { res_abs }))
    } else {
        Err(NumericsError::AccuracyNotReached {
            value,
            error_estimate,
            panels_used: evals,
            tolerance,
        })
    }
}

/// Adaptive quadrature of a complex integrand over `[a, b]`.
///
/// The returned `error_estimate` satisfies
/// `error_estimate <= max(abs_tol, rel_tol * |value|)` up to the roundoff
/// floor of the integral; if that cannot be reached within the subdivision
/// budget an [`NumericsError::AccuracyNotReached`] carrying the best
/// estimate is returned instead.
pub fn integrate_1d<F>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult, NumericsError>
where
    F: Fn(f64) -> Complex64,
{
    integrate_1d_full(f, a, b, cfg).map(|(result, _)| result)
}

/// Iterated integral of `f(t, t1)` over the triangle `0 <= t1 <= t <= t_max`.
///
/// Realized as an adaptive outer integral whose integrand is itself an
/// adaptive inner integral with proportionally tightened tolerances, per
/// axis, rather than a genuine 2D rule. The reported error adds the mean
/// inner estimate integrated over the outer range.
pub fn integrate_triangle<F>(
    f: F,
    t_max: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult, NumericsError>
where
    F: Fn(f64, f64) -> Complex64,
{
    cfg.validate()?;
    if !t_max.is_finite() || t_max < 0.0 {
        return Err(NumericsError::InvalidInterval { a: 0.0, b: t_max });
    }
    if t_max == 0.0 {
        return Ok(QuadratureResult {
            value: Complex64::ZERO,
            error_estimate: 0.0,
            panels_used: 0,
        });
    }

    // Inner errors enter the outer integral weighted by the outer measure;
    // give the inner a share of the budget scaled by 1/t_max.
    let inner_cfg = QuadratureConfig {
        abs_tol: (cfg.abs_tol / (8.0 * t_max.max(1.0))).max(1e-300),
        rel_tol: (cfg.rel_tol / 8.0).max(1e-13),
        ..*cfg
    };
    let outer_cfg = QuadratureConfig {
        abs_tol: 0.5 * cfg.abs_tol,
        rel_tol: 0.5 * cfg.rel_tol,
        ..*cfg
    };

    let inner_failure: std::cell::RefCell<Option<NumericsError>> = std::cell::RefCell::new(None);
    let inner_error_sum = std::cell::Cell::new(0.0_f64);
    let inner_res_abs_sum = std::cell::Cell::new(0.0_f64);
    let inner_calls = std::cell::Cell::new(0_usize);
    let inner_panels = std::cell::Cell::new(0_usize);

    let outer_integrand = |t: f64| -> Complex64 {
        if inner_failure.borrow().is_some() {
            return Complex64::ZERO;
        }
        match integrate_1d_full(|t1| f(t, t1), 0.0, t, &inner_cfg) {
            Ok((inner, diag)) => {
                inner_error_sum.set(inner_error_sum.get() + inner.error_estimate);
                inner_res_abs_sum.set(inner_res_abs_sum.get() + diag.res_abs);
                inner_calls.set(inner_calls.get() + 1);
                inner_panels.set(inner_panels.get() + inner.panels_used);
                inner.value
            }
            Err(err) => {
                *inner_failure.borrow_mut() = Some(err);
                Complex64::ZERO
            }
        }
    };

    let outer = integrate_1d_full(outer_integrand, 0.0, t_max, &outer_cfg);
    if let Some(err) = inner_failure.into_inner() {
        return Err(err);
    }
    let (outer, outer_diag) = outer?;

    let calls = inner_calls.get().max(1) as f64;
    let value = outer.value;
    let error_estimate = outer.error_estimate + t_max * inner_error_sum.get() / calls;
    // Roundoff floor of the iterated integral: eps-level noise on the
    // two-dimensional L1 mass plus the outer aggregation.
    let vol_abs = t_max * inner_res_abs_sum.get() / calls;
    let tolerance = cfg
        .abs_tol
        .max(cfg.rel_tol * value.norm())
        .max(ROUNDOFF_FLOOR * (vol_abs + outer_diag.res_abs));
    let panels_used = outer.panels_used + inner_panels.get();
    if error_estimate <= tolerance {
        Ok(QuadratureResult {
            value,
            error_estimate,
            panels_used,
        })
    } else {
        Err(NumericsError::AccuracyNotReached {
            value,
            error_estimate,
            panels_used,
            tolerance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn complex_exponential_has_closed_form() {
        // int_0^1 e^{it} dt = sin 1 + i (1 - cos 1)
        let r = integrate_1d(|t| Complex64::new(0.0, t).exp(), 0.0, 1.0, &cfg()).unwrap();
        let exact = Complex64::new(1.0_f64.sin(), 1.0 - 1.0_f64.cos());
        assert!((r.value - exact).norm() < 1e-12, "got {}", r.value);
    }

    #[test]
    fn empty_interval_is_zero() {
        let r = integrate_1d(|t| Complex64::new(t.exp(), t), 2.5, 2.5, &cfg()).unwrap();
        assert_eq!(r.value, Complex64::ZERO);
        assert_eq!(r.error_estimate, 0.0);
        assert_eq!(r.panels_used, 0);
    }

    #[test]
    fn reversed_interval_is_rejected() {
        let err = integrate_1d(|_| Complex64::ZERO, 1.0, 0.0, &cfg()).unwrap_err();
        assert!(matches!(err, NumericsError::InvalidInterval { .. }));
    }

    #[test]
    fn oscillatory_integrand_matches_closed_form() {
        // int_0^20 e^{i w t} dt = (e^{20 i w} - 1) / (i w), w = 37.
        let w = 37.0;
        let r = integrate_1d(|t| Complex64::new(0.0, w * t).exp(), 0.0, 20.0, &cfg()).unwrap();
        let exact = (Complex64::new(0.0, w * 20.0).exp() - 1.0) / Complex64::new(0.0, w);
        assert!(
            (r.value - exact).norm() < 1e-11,
            "got {} want {}",
            r.value,
            exact
        );
        // The phase trigger alone forces at least total_phase / (pi/2) panels.
        assert!(r.panels_used as f64 > 20.0 * w / PI);
    }

    #[test]
    fn strongly_oscillatory_high_frequency() {
        // Representative of the high-mode integrals: w ~ 2e4 over a short
        // window, against the analytic antiderivative.
        let w = 2.0e4;
        let r = integrate_1d(|t| Complex64::new(0.0, w * t).exp(), 0.0, 0.9, &cfg()).unwrap();
        let exact = (Complex64::new(0.0, w * 0.9).exp() - 1.0) / Complex64::new(0.0, w);
        assert!((r.value - exact).norm() < 1e-11 * (1.0 + exact.norm()));
    }

    #[test]
    fn subdivision_budget_reports_best_estimate() {
        let tight = QuadratureConfig {
            max_subdivisions: 8,
            ..cfg()
        };
        let err = integrate_1d(
            |t| Complex64::new(0.0, 200.0 * t).exp(),
            0.0,
            20.0,
            &tight,
        )
        .unwrap_err();
        match err {
            NumericsError::AccuracyNotReached {
                error_estimate,
                panels_used,
                ..
            } => {
                assert!(error_estimate > 0.0);
                assert!(panels_used >= 8);
            }
            other => panic!("expected AccuracyNotReached, got {other:?}"),
        }
    }

    #[test]
    fn unreachable_tolerance_terminates_at_roundoff_floor() {
        // abs_tol far below what any f64 quadrature can certify; the floor
        // logic must terminate quickly instead of exhausting the budget.
        let demanding = QuadratureConfig {
            abs_tol: 1e-35,
            rel_tol: 1e-30,
            ..cfg()
        };
        let r = integrate_1d(
            |t| Complex64::new((3.0 * t).cos(), (2.0 * t).sin()),
            0.0,
            10.0,
            &demanding,
        )
        .unwrap();
        assert!(r.panels_used < 50_000, "used {} panels", r.panels_used);
        let exact_re = (3.0_f64 * 10.0).sin() / 3.0;
        assert!((r.value.re - exact_re).abs() < 1e-13);
    }

    #[test]
    fn triangle_constant_integrand_gives_area() {
        let r = integrate_triangle(|_, _| Complex64::new(1.0, 0.0), 2.0, &cfg()).unwrap();
        assert!((r.value - Complex64::new(2.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn triangle_empty_domain_is_zero() {
        let r = integrate_triangle(|_, _| Complex64::new(3.0, 1.0), 0.0, &cfg()).unwrap();
        assert_eq!(r.value, Complex64::ZERO);
    }

    #[test]
    fn triangle_polynomial_closed_form() {
        // int_0^T dt int_0^t dt1 t * t1 = T^4 / 8
        let r = integrate_triangle(|t, t1| Complex64::new(t * t1, 0.0), 1.5, &cfg()).unwrap();
        let exact = 1.5_f64.powi(4) / 8.0;
        assert!((r.value.re - exact).abs() < 1e-11);
        assert!(r.value.im.abs() < 1e-13);
    }
}
