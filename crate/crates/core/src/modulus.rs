//! Moduli γ(r) and the Dini integral classifier.
//!
//! A modulus is a nondecreasing function γ : (0, R0] → [0, ∞).  The sharp
//! dividing line for boundary differentiability is whether
//!
//! ```text
//!   ∫_0^R0  γ(r) / r²  dr
//! ```
//!
//! is finite.  Writing γ(r) = r σ(r), the same integral is ∫ σ(r)/r dr, and
//! the substitution r = R0 e^(-s) turns it into ∫_0^∞ σ(R0 e^(-s)) ds, which
//! decays panelwise geometrically for every analytic family here.  That form
//! is what the numeric integrator consumes, so no underflowing radii are
//! ever produced.

use crate::error::{Error, Result};
use crate::quad;

/// Analytic families plus tabulated samples.
#[derive(Clone, Debug)]
pub enum ModulusKind {
    /// γ ≡ 0 (the convex case).
    Zero,
    /// γ(r) = c · r / ln(e/r)^q, `c > 0`, `q > 0`.
    LogPower { c: f64, q: f64 },
    /// γ(r) = c · r^p, `c > 0`, `p > 0`.
    Power { c: f64, p: f64 },
    /// Piecewise-linear interpolation of sorted samples (r_i, γ(r_i)).
    Tabulated(Vec<(f64, f64)>),
    /// γ(r) = inner(t·r)/t — the image of `inner` under parabolic rescaling.
    Scaled { inner: Box<ModulusKind>, t: f64 },
}

/// A modulus with its validity radius.
#[derive(Clone, Debug)]
pub struct Modulus {
    pub kind: ModulusKind,
    pub r0: f64,
}

/// Dini verdicts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DiniVerdict {
    Convergent { value: f64, error_bound: f64 },
    Divergent,
    Inconclusive,
}

/// Classifier output.
#[derive(Clone, Copy, Debug)]
pub struct DiniReport {
    pub verdict: DiniVerdict,
    /// Smallest radius the numeric integration actually reached before the
    /// tail was extrapolated (0 when the tail is known exactly).
    pub lower_cutoff_used: f64,
}

impl ModulusKind {
    fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match self {
            ModulusKind::Zero => 0.0,
            ModulusKind::LogPower { c, q } => c * r / (1.0 - r.ln()).powf(*q),
            ModulusKind::Power { c, p } => c * r.powf(*p),
            ModulusKind::Tabulated(samples) => {
                let n = samples.len();
                if n == 0 {
                    return 0.0;
                }
                if r <= samples[0].0 {
                    // Interpolate toward (0, 0); the Dini classifier never
                    // trusts this region, but pointwise evaluation needs a
                    // continuous nonnegative extension.
                    return samples[0].1 * r / samples[0].0;
                }
                if r >= samples[n - 1].0 {
                    return samples[n - 1].1;
                }
                let i = samples.partition_point(|&(rs, _)| rs <= r);
                let (r1, g1) = samples[i - 1];
                let (r2, g2) = samples[i];
                g1 + (g2 - g1) * (r - r1) / (r2 - r1)
            }
            ModulusKind::Scaled { inner, t } => inner.eval(t * r) / t,
        }
    }

    /// σ(R0 e^(-s)) evaluated without forming the (possibly underflowing)
    /// radius, for the analytic kinds.
    fn sigma_log(&self, s: f64, r0: f64) -> f64 {
        match self {
            ModulusKind::Zero => 0.0,
            ModulusKind::LogPower { c, q } => c / (1.0 - r0.ln() + s).powf(*q),
            ModulusKind::Power { c, p } => c * r0.powf(p - 1.0) * (-(p - 1.0) * s).exp(),
            ModulusKind::Scaled { inner, t } => inner.sigma_log(s, t * r0),
            ModulusKind::Tabulated(_) => unreachable!("tabulated handled separately"),
        }
    }
}

impl Modulus {
    pub fn new(kind: ModulusKind, r0: f64) -> Result<Self> {
        let m = Self { kind, r0 };
        m.validate()?;
        Ok(m)
    }

    pub fn zero() -> Self {
        Self { kind: ModulusKind::Zero, r0: 1.0 }
    }

    pub fn power(c: f64, p: f64) -> Result<Self> {
        Self::new(ModulusKind::Power { c, p }, 1.0)
    }

    pub fn log_power(c: f64, q: f64) -> Result<Self> {
        Self::new(ModulusKind::LogPower { c, q }, 1.0)
    }

    pub fn tabulated(samples: Vec<(f64, f64)>, r0: f64) -> Result<Self> {
        Self::new(ModulusKind::Tabulated(samples), r0)
    }

    /// γ(r).  Evaluations past R0 clamp to γ(R0): callers stay inside the
    /// validity radius in all shipped drivers, but probing code may overshoot.
    pub fn eval(&self, r: f64) -> f64 {
        self.kind.eval(r.min(self.r0))
    }

    /// σ(r) = γ(r)/r.
    pub fn sigma(&self, r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else {
            self.eval(r) / r
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0) {
            return Err(Error::InvalidModulus(format!("R0 must be positive, got {}", self.r0)));
        }
        match &self.kind {
            ModulusKind::Zero => Ok(()),
            ModulusKind::LogPower { c, q } => {
                if *c > 0.0 && *q > 0.0 && self.r0 < std::f64::consts::E {
                    Ok(())
                } else {
                    Err(Error::InvalidModulus(format!(
                        "log-power needs c > 0, q > 0, R0 < e; got c={c}, q={q}, R0={}",
                        self.r0
                    )))
                }
            }
            ModulusKind::Power { c, p } => {
                if *c > 0.0 && *p > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidModulus(format!("power needs c > 0, p > 0; got c={c}, p={p}")))
                }
            }
            ModulusKind::Tabulated(samples) => {
                if samples.is_empty() {
                    return Err(Error::InvalidModulus("tabulated modulus has no samples".into()));
                }
                for w in samples.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::InvalidModulus(format!(
                            "sample radii not strictly increasing at r={}",
                            w[1].0
                        )));
                    }
                    if w[1].1 < w[0].1 {
                        return Err(Error::InvalidModulus(format!(
                            "samples decrease at r={} ({} -> {})",
                            w[1].0, w[0].1, w[1].1
                        )));
                    }
                }
                if samples[0].1 < 0.0 {
                    return Err(Error::InvalidModulus("negative sample value".into()));
                }
                Ok(())
            }
            ModulusKind::Scaled { inner, t } => {
                if !(*t > 0.0) {
                    return Err(Error::InvalidModulus("scale factor must be positive".into()));
                }
                Modulus { kind: (**inner).clone(), r0: self.r0 * t }.validate()
            }
        }
        .and_then(|()| self.check_monotone())
    }

    /// Spot-check monotonicity and nonnegativity on a log-spaced grid.
    fn check_monotone(&self) -> Result<()> {
        let mut prev = -1.0f64;
        for k in (0..=200).rev() {
            let r = self.r0 * (-(k as f64) * 0.1).exp();
            let g = self.eval(r);
            if g < -1e-15 {
                return Err(Error::InvalidModulus(format!("γ({r}) = {g} < 0")));
            }
            if g < prev - 1e-12 * (1.0 + prev.abs()) {
                return Err(Error::InvalidModulus(format!("γ not nondecreasing near r={r}")));
            }
            prev = g;
        }
        Ok(())
    }
}

/// γ̃(r) = γ(t r)/t with validity radius R0/t.
///
/// Power moduli rescale in closed form; log-power shifts its logarithm and is
/// kept as a scaled wrapper; tabulated samples are remapped exactly.
pub fn rescale_modulus(gamma: &Modulus, t: f64) -> Result<Modulus> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("rescale factor must be in (0,1], got {t}")));
    }
    let r0 = gamma.r0 / t;
    let kind = match &gamma.kind {
        ModulusKind::Zero => ModulusKind::Zero,
        ModulusKind::Power { c, p } => ModulusKind::Power { c: c * t.powf(p - 1.0), p: *p },
        ModulusKind::Tabulated(samples) => {
            ModulusKind::Tabulated(samples.iter().map(|&(r, g)| (r / t, g / t)).collect())
        }
        other => ModulusKind::Scaled { inner: Box::new(other.clone()), t },
    };
    Ok(Modulus { kind, r0 })
}

/// Classifies `∫_0^R0 γ(r)/r² dr`.
///
/// Analytic kinds are classified exactly; convergent values are computed by
/// the dyadic-panel integrator with a geometric tail estimate.  Tabulated
/// moduli are integrated exactly down to their smallest sample; below that
/// the tail is only known when the first sample value is zero (monotonicity
/// then forces γ ≡ 0 there), otherwise the verdict is `Inconclusive`.
/// The verdict is the sharp dividing line, so the tail is never guessed.
pub fn dini_classify(gamma: &Modulus, tol: f64) -> Result<DiniReport> {
    gamma.validate()?;
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("tolerance must be positive, got {tol}")));
    }
    match &gamma.kind {
        ModulusKind::Tabulated(samples) => classify_tabulated(samples, gamma.r0),
        _ => classify_analytic(gamma, tol),
    }
}

fn converges(kind: &ModulusKind) -> bool {
    match kind {
        ModulusKind::Zero => true,
        ModulusKind::Power { p, .. } => *p > 1.0,
        ModulusKind::LogPower { q, .. } => *q > 1.0,
        ModulusKind::Scaled { inner, .. } => converges(inner),
        ModulusKind::Tabulated(_) => unreachable!(),
    }
}

fn classify_analytic(gamma: &Modulus, tol: f64) -> Result<DiniReport> {
    if matches!(gamma.kind, ModulusKind::Zero) {
        return Ok(DiniReport {
            verdict: DiniVerdict::Convergent { value: 0.0, error_bound: 0.0 },
            lower_cutoff_used: 0.0,
        });
    }
    if !converges(&gamma.kind) {
        return Ok(DiniReport { verdict: DiniVerdict::Divergent, lower_cutoff_used: 0.0 });
    }
    let kind = gamma.kind.clone();
    let r0 = gamma.r0;
    let q = quad::integrate_decaying(move |s| kind.sigma_log(s, r0), tol, 4000);
    let cutoff = r0 * (-q.cutoff).exp(); // may underflow to 0 for slow tails
    if !q.converged || q.error >= tol {
        return Ok(DiniReport { verdict: DiniVerdict::Inconclusive, lower_cutoff_used: cutoff });
    }
    Ok(DiniReport {
        verdict: DiniVerdict::Convergent { value: q.value, error_bound: q.error },
        lower_cutoff_used: cutoff,
    })
}

fn classify_tabulated(samples: &[(f64, f64)], r0: f64) -> Result<DiniReport> {
    let r_min = samples[0].0.min(r0);
    // Exact integral of the piecewise-linear interpolant over [r_min, R0]:
    // on a panel γ(r) = a + b r, so γ(r)/r² integrates to  -a/r + b ln r.
    let mut value = 0.0;
    let mut pts: Vec<(f64, f64)> = samples.iter().copied().filter(|&(r, _)| r < r0).collect();
    pts.push((r0, samples_eval(samples, r0)));
    for w in pts.windows(2) {
        let (r1, g1) = w[0];
        let (r2, g2) = w[1];
        let b = (g2 - g1) / (r2 - r1);
        let a = g1 - b * r1;
        value += a * (1.0 / r1 - 1.0 / r2) + b * (r2 / r1).ln();
    }
    if samples[0].1 == 0.0 {
        // Monotone and nonnegative with γ(r_min) = 0 forces γ ≡ 0 below.
        Ok(DiniReport {
            verdict: DiniVerdict::Convergent { value, error_bound: 1e-14 * (1.0 + value.abs()) },
            lower_cutoff_used: 0.0,
        })
    } else {
        Ok(DiniReport { verdict: DiniVerdict::Inconclusive, lower_cutoff_used: r_min })
    }
}

fn samples_eval(samples: &[(f64, f64)], r: f64) -> f64 {
    ModulusKind::Tabulated(samples.to_vec()).eval(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn value_of(report: &DiniReport) -> f64 {
        match report.verdict {
            DiniVerdict::Convergent { value, .. } => value,
            _ => panic!("expected convergent, got {:?}", report.verdict),
        }
    }

    #[test]
    fn quadratic_power_integral_is_one() {
        // γ = r² on (0,1]: integrand ≡ 1.
        let g = Modulus::power(1.0, 2.0).unwrap();
        let rep = dini_classify(&g, 1e-10).unwrap();
        assert!((value_of(&rep) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn linear_power_diverges() {
        let g = Modulus::power(1.0, 1.0).unwrap();
        let rep = dini_classify(&g, 1e-10).unwrap();
        assert_eq!(rep.verdict, DiniVerdict::Divergent);
    }

    #[test]
    fn log_square_integral_is_one() {
        // γ = r/ln²(e/r): antiderivative of the integrand is -1/ln(e/r),
        // so the integral over (0,1] is exactly 1.
        let g = Modulus::log_power(1.0, 2.0).unwrap();
        let rep = dini_classify(&g, 1e-9).unwrap();
        let v = value_of(&rep);
        assert!((v - 1.0).abs() < 1e-8, "value {v}");
    }

    #[test]
    fn analytic_family_matches_closed_form() {
        for &c in &[0.5, 1.0, 2.0] {
            for &e in &[0.5, 1.0, 1.5, 2.0] {
                let gp = Modulus::power(c, e).unwrap();
                let rp = dini_classify(&gp, 1e-9).unwrap();
                if e > 1.0 {
                    // ∫ c r^(e-2) dr = c/(e-1) on (0,1]
                    assert!((value_of(&rp) - c / (e - 1.0)).abs() < 1e-8);
                } else {
                    assert_eq!(rp.verdict, DiniVerdict::Divergent);
                }
                let gl = Modulus::log_power(c, e).unwrap();
                let rl = dini_classify(&gl, 1e-9).unwrap();
                if e > 1.0 {
                    // ∫ c/(r ln^e(e/r)) dr = c/(e-1) on (0,1]  (ln(e/1) = 1)
                    assert!((value_of(&rl) - c / (e - 1.0)).abs() < 1e-8);
                } else {
                    assert_eq!(rl.verdict, DiniVerdict::Divergent);
                }
            }
        }
    }

    #[test]
    fn rescale_power_closed_form() {
        // γ = r², t = 1/2  →  γ̃(r) = r²/2
        let g = Modulus::power(1.0, 2.0).unwrap();
        let g2 = rescale_modulus(&g, 0.5).unwrap();
        for &r in &[0.1, 0.3, 0.7, 1.5] {
            assert!((g2.eval(r) - r * r / 2.0).abs() < 1e-15);
        }
        assert!((g2.r0 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rescale_identity() {
        let g = Modulus::log_power(1.0, 2.0).unwrap();
        let g1 = rescale_modulus(&g, 1.0).unwrap();
        for &r in &[0.05, 0.2, 0.9] {
            assert!((g1.eval(r) - g.eval(r)).abs() < 1e-15);
        }
    }

    #[test]
    fn rescale_tabulated_pointwise() {
        let samples = vec![(0.1, 0.0), (0.25, 0.01), (0.5, 0.05), (1.0, 0.2)];
        let g = Modulus::tabulated(samples.clone(), 1.0).unwrap();
        let g4 = rescale_modulus(&g, 0.25).unwrap();
        for &(r, _) in &samples {
            let mapped = r / 0.25;
            assert!((g4.eval(mapped) - 4.0 * g.eval(r)).abs() < 1e-14);
        }
        // Piecewise-linear structure survives affine remapping pointwise.
        for &r in &[0.5, 0.77, 1.3, 2.9] {
            assert!((g4.eval(r) - g.eval(0.25 * r) / 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn rescale_covariance_grid() {
        let fams: Vec<Modulus> = vec![
            Modulus::power(1.0, 1.5).unwrap(),
            Modulus::log_power(2.0, 2.0).unwrap(),
            Modulus::tabulated(vec![(0.01, 0.0), (0.1, 0.02), (1.0, 0.3)], 1.0).unwrap(),
        ];
        for g in &fams {
            for &t in &[1.0, 0.5, 0.25, 0.125] {
                let gt = rescale_modulus(g, t).unwrap();
                for k in 1..=20 {
                    let r = k as f64 / 20.0;
                    let lhs = gt.eval(r) * t;
                    let rhs = g.eval(t * r);
                    assert!(
                        (lhs - rhs).abs() <= 1e-14 * (1.0 + rhs.abs()),
                        "t={t} r={r}: {lhs} vs {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn rescaled_dini_value_is_invariant() {
        // Substituting s = t r leaves the Dini integral unchanged.
        let g = Modulus::log_power(1.0, 2.0).unwrap();
        let gt = rescale_modulus(&g, 0.25).unwrap();
        let v0 = value_of(&dini_classify(&g, 1e-9).unwrap());
        let vt = value_of(&dini_classify(&gt, 1e-9).unwrap());
        assert!((v0 - vt).abs() < 1e-8, "{v0} vs {vt}");
    }

    #[test]
    fn sigma_decays_for_dini_family() {
        // γ(r)/r → 0 along r = 2^-k for every convergent member.
        let fams = [Modulus::power(2.0, 1.5).unwrap(), Modulus::log_power(2.0, 1.5).unwrap()];
        for g in &fams {
            let mut prev = f64::INFINITY;
            for k in 1..=60 {
                let s = g.sigma(2f64.powi(-k));
                assert!(s <= prev + 1e-15);
                prev = s;
            }
            assert!(prev < 1e-2, "σ(2^-60) = {prev}");
        }
    }

    #[test]
    fn tabulated_zero_head_converges_exactly() {
        // Linear pieces through zero at the smallest sample: integral is exact.
        let g = Modulus::tabulated(vec![(0.5, 0.0), (1.0, 0.5)], 1.0).unwrap();
        // On [0.5,1]: γ = r - 0.5 → ∫ (r-0.5)/r² = ln 2 - 0.5.
        let rep = dini_classify(&g, 1e-10).unwrap();
        let expect = std::f64::consts::LN_2 - 0.5;
        assert!((value_of(&rep) - expect).abs() < 1e-12);
        assert_eq!(rep.lower_cutoff_used, 0.0);
    }

    #[test]
    fn tabulated_unknown_tail_is_inconclusive() {
        let g = Modulus::tabulated(vec![(0.5, 0.1), (1.0, 0.5)], 1.0).unwrap();
        let rep = dini_classify(&g, 1e-10).unwrap();
        assert_eq!(rep.verdict, DiniVerdict::Inconclusive);
        assert!((rep.lower_cutoff_used - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_monotone_samples_rejected() {
        assert!(Modulus::tabulated(vec![(0.1, 0.2), (0.5, 0.1)], 1.0).is_err());
    }
}
