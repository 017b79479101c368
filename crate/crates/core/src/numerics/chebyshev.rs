//! Chebyshev interpolation on an interval.
//!
//! Used to replace repeated expensive evaluations of smooth functions
//! (worldline coordinates involve a root-find per call) with a polynomial
//! proxy that is cheap to evaluate and accurate to near machine precision
//! for analytic functions.

/// A Chebyshev interpolant of degree `n` on `[a, b]`, fitted at the
/// Chebyshev-Lobatto points.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolate `f` at the `n + 1` Lobatto nodes of `[a, b]`.
    ///
    /// `n` must be at least 1 and `a < b`.
    pub fn fit<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> Self {
        assert!(n >= 1, "Chebyshev degree must be at least 1");
        assert!(a < b && a.is_finite() && b.is_finite(), "invalid interval");

        // Lobatto nodes x_k = cos(pi k / n), mapped to [a, b].
        let mut samples = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let x = (std::f64::consts::PI * k as f64 / n as f64).cos();
            let t = 0.5 * (a + b) + 0.5 * (b - a) * x;
            samples.push(f(t));
        }

        // Discrete cosine transform (type I):
        // c_j = (2 / n) gamma_j sum_k gamma_k f_k cos(pi j k / n),
        // gamma_i = 1/2 at the endpoints, 1 otherwise.
        let step = std::f64::consts::PI / n as f64;
        let mut coeffs = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let mut acc = 0.5 * (samples[0] + if j % 2 == 0 { samples[n] } else { -samples[n] });
            for (k, fk) in samples.iter().enumerate().take(n).skip(1) {
                acc += fk * (step * (j * k % (2 * n)) as f64).cos();
            }
            let gamma_j = if j == 0 || j == n { 0.5 } else { 1.0 };
            coeffs.push(2.0 * gamma_j * acc / n as f64);
        }
        Chebyshev { a, b, coeffs }
    }

    /// Evaluate the interpolant by Clenshaw recurrence.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let y = (2.0 * t - self.a - self.b) / (self.b - self.a);
        let y2 = 2.0 * y;
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            let next = y2 * b1 - b2 + c;
            b2 = b1;
            b1 = next;
        }
        y * b1 - b2 + self.coeffs[0]
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// Evaluate two interpolants sharing an interval and degree at the same
/// point. The two Clenshaw recurrences interleave, hiding the serial
/// dependency latency that dominates a lone evaluation.
#[inline]
pub fn eval_pair(first: &Chebyshev, second: &Chebyshev, t: f64) -> (f64, f64) {
    debug_assert_eq!(first.coeffs.len(), second.coeffs.len());
    debug_assert_eq!((first.a, first.b), (second.a, second.b));
    let y = (2.0 * t - first.a - first.b) / (first.b - first.a);
    let y2 = 2.0 * y;
    let mut p1 = 0.0;
    let mut p2 = 0.0;
    let mut q1 = 0.0;
    let mut q2 = 0.0;
    for (&cp, &cq) in first.coeffs.iter().zip(&second.coeffs).skip(1).rev() {
        let np = y2 * p1 - p2 + cp;
        let nq = y2 * q1 - q2 + cq;
        p2 = p1;
        p1 = np;
        q2 = q1;
        q1 = nq;
    }
    (
        y * p1 - p2 + first.coeffs[0],
        y * q1 - q2 + second.coeffs[0],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_polynomials_exactly() {
        let f = |t: f64| 3.0 - 2.0 * t + 0.5 * t * t * t;
        let ch = Chebyshev::fit(f, -1.5, 2.0, 8);
        for i in 0..=40 {
            let t = -1.5 + 3.5 * i as f64 / 40.0;
            assert!((ch.eval(t) - f(t)).abs() < 1e-13, "t = {t}");
        }
    }

    #[test]
    fn analytic_function_converges_fast() {
        let f = |t: f64| (0.7 * t).sin() * (-0.3 * t).exp();
        let ch = Chebyshev::fit(f, 0.0, 10.0, 48);
        let mut worst = 0.0_f64;
        for i in 0..=200 {
            let t = 10.0 * i as f64 / 200.0;
            worst = worst.max((ch.eval(t) - f(t)).abs());
        }
        assert!(worst < 1e-13, "worst residual {worst:.3e}");
    }

    #[test]
    fn interpolates_nodes() {
        let f = |t: f64| 1.0 / (1.0 + t * t);
        let n = 16;
        let (a, b) = (-2.0, 3.0);
        let ch = Chebyshev::fit(f, a, b, n);
        for k in 0..=n {
            let x = (std::f64::consts::PI * k as f64 / n as f64).cos();
            let t = 0.5 * (a + b) + 0.5 * (b - a) * x;
            assert!((ch.eval(t) - f(t)).abs() < 1e-12);
        }
    }
}
