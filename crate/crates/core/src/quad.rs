//! Adaptive quadrature.
//!
//! Two engines:
//!
//! * [`adaptive_simpson`] — classic recursive Simpson with Richardson
//!   correction on a bounded interval.
//! * [`integrate_decaying`] — improper integrals over `[0, ∞)` of a
//!   nonnegative decaying integrand, evaluated over dyadic panels
//!   `[2^j, 2^{j+1}]` with a geometric-ratio tail estimate.  Integrals with
//!   an endpoint singularity at 0 are brought to this form by the caller
//!   through a logarithmic substitution, which turns both power-law and
//!   log-power integrands into panelwise geometric decay.

/// Outcome of a quadrature run.
#[derive(Clone, Copy, Debug)]
pub struct QuadOutcome {
    pub value: f64,
    /// Estimated absolute error (quadrature error plus tail estimate error).
    pub error: f64,
    /// For improper integrals: the upper end of the last panel actually
    /// integrated before the tail was extrapolated.
    pub cutoff: f64,
    pub converged: bool,
}

fn simpson(a: f64, fa: f64, fm: f64, b: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    err_acc: &mut f64,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, fa, flm, m, fm);
    let right = simpson(m, fm, frm, b, fb);
    let delta = left + right - whole;
    // Tolerance floor: once delta is at the roundoff scale of the panel
    // values, further subdivision only chases noise.
    let floor = 4.0 * f64::EPSILON * (left.abs() + right.abs() + whole.abs());
    if depth == 0 || delta.abs() <= (15.0 * tol).max(floor) || (b - a).abs() < 1e-13 * (1.0 + a.abs() + b.abs())
    {
        *err_acc += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    let child_tol = 0.5 * tol;
    adapt(f, a, fa, m, fm, lm, flm, left, child_tol, depth - 1, err_acc)
        + adapt(f, m, fm, b, fb, rm, frm, right, child_tol, depth - 1, err_acc)
}

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> QuadOutcome {
    if a == b {
        return QuadOutcome { value: 0.0, error: 0.0, cutoff: b, converged: true };
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, fa, fm, b, fb);
    let mut err = 0.0;
    let value = adapt(&f, a, fa, b, fb, m, fm, whole, tol.max(1e-300), 36, &mut err);
    QuadOutcome { value, error: err, cutoff: b, converged: true }
}

/// Integrates a nonnegative integrand over `[0, ∞)` assuming eventual
/// panelwise geometric decay on the dyadic panels `[0,1], [1,2], [2,4], …`.
///
/// Stops once the extrapolated tail is below `tol / 2` and stable, or after
/// `max_panels` panels (reported as not converged).
pub fn integrate_decaying(f: impl Fn(f64) -> f64, tol: f64, max_panels: usize) -> QuadOutcome {
    let panel_tol = tol / 256.0;
    let mut total = 0.0;
    let mut quad_err = 0.0;
    let mut s_lo = 0.0_f64;
    let mut s_hi = 1.0_f64;
    let mut prev_contrib = f64::NAN;
    let mut prev_prediction = f64::NAN;
    for _ in 0..max_panels {
        let panel = adaptive_simpson(&f, s_lo, s_hi, panel_tol);
        total += panel.value;
        quad_err += panel.error;
        let c = panel.value.max(0.0);
        if c <= 1e-300 {
            return QuadOutcome { value: total, error: quad_err, cutoff: s_hi, converged: true };
        }
        if prev_contrib.is_finite() && prev_contrib > 0.0 {
            let rho = c / prev_contrib;
            if rho < 0.999 {
                let tail = c * rho / (1.0 - rho);
                // Stability: the previous prediction (tail seen from one
                // panel back) should agree with contribution + new tail.
                let realized = c + tail;
                let stable = prev_prediction.is_finite()
                    && (realized - prev_prediction).abs() <= 0.25 * tol + 0.05 * tail;
                if tail <= 0.5 * tol && stable {
                    return QuadOutcome {
                        value: total + tail,
                        error: quad_err + tail + (realized - prev_prediction).abs(),
                        cutoff: s_hi,
                        converged: true,
                    };
                }
                prev_prediction = tail;
            } else {
                prev_prediction = f64::NAN;
            }
        }
        prev_contrib = c;
        s_lo = s_hi;
        s_hi *= 2.0;
    }
    QuadOutcome { value: total, error: f64::INFINITY, cutoff: s_lo, converged: false }
}

/// `∫_r^1 g(t) / t^(1+alpha) dt` via the substitution `t = e^(-s)`,
/// which maps the integral to `∫_0^(ln 1/r) g(e^(-s)) e^(alpha s) ds`.
pub fn integrate_profile_tail(
    g: impl Fn(f64) -> f64,
    r: f64,
    alpha: f64,
    rel_tol: f64,
) -> f64 {
    assert!(r > 0.0 && r <= 1.0);
    if r == 1.0 {
        return 0.0;
    }
    let upper = (1.0 / r).ln();
    let integrand = |s: f64| g((-s).exp()) * (alpha * s).exp();
    // Two-pass absolute tolerance: rough value first, then refine.
    let rough = adaptive_simpson(&integrand, 0.0, upper, 1e-6);
    let tol = (rough.value.abs() * rel_tol).max(1e-300);
    adaptive_simpson(&integrand, 0.0, upper, tol).value
}

/// `∫_lo^hi g(r)/r dr` via the same logarithmic substitution.
pub fn integrate_over_log(g: impl Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> f64 {
    assert!(lo > 0.0 && hi >= lo);
    let integrand = |s: f64| g((-s).exp());
    let a = (1.0 / hi).ln();
    let b = (1.0 / lo).ln();
    let rough = adaptive_simpson(&integrand, a, b, 1e-6);
    let tol = (rough.value.abs() * rel_tol).max(1e-300);
    adaptive_simpson(&integrand, a, b, tol).value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial() {
        let q = adaptive_simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12);
        // ∫ = 4 - 4 + 2 = 2
        assert!((q.value - 2.0).abs() < 1e-11);
    }

    #[test]
    fn simpson_oscillatory() {
        let q = adaptive_simpson(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((q.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn decaying_exponential() {
        // ∫_0^∞ e^(-s) ds = 1
        let q = integrate_decaying(|s| (-s).exp(), 1e-10, 200);
        assert!(q.converged);
        assert!((q.value - 1.0).abs() < 1e-9, "value {}", q.value);
    }

    #[test]
    fn decaying_algebraic() {
        // ∫_0^∞ (1+s)^(-2) ds = 1
        let q = integrate_decaying(|s| (1.0 + s).powi(-2), 1e-9, 400);
        assert!(q.converged);
        assert!((q.value - 1.0).abs() < 1e-8, "value {}", q.value);
    }

    #[test]
    fn decaying_slow_algebraic() {
        // ∫_0^∞ 1.5 (1+s)^(-2.5) ds = 1 ; panel decay ratio 2^(-1.5)… slow case
        let q = integrate_decaying(|s| 1.5 * (1.0 + s).powf(-2.5), 1e-9, 400);
        assert!(q.converged);
        assert!((q.value - 1.0).abs() < 1e-8, "value {}", q.value);
    }

    #[test]
    fn profile_tail_power_law() {
        // g(t) = t^beta: ∫_r^1 t^(beta-1-alpha) dt = (1 - r^(beta-alpha))/(beta-alpha)
        let (alpha, beta, r) = (0.5f64, 1.25f64, 0.01f64);
        let exact = (1.0 - r.powf(beta - alpha)) / (beta - alpha);
        let got = integrate_profile_tail(|t| t.powf(beta), r, alpha, 1e-12);
        assert!((got - exact).abs() < 1e-10 * exact.max(1.0), "got {got}, exact {exact}");
    }

    #[test]
    fn log_weighted_integral() {
        // ∫_lo^hi r / r dr = hi - lo
        let got = integrate_over_log(|r| r, 0.25, 1.0, 1e-12);
        assert!((got - 0.75).abs() < 1e-11);
    }
}
