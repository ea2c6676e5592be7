//! Dyadic iteration machinery.
//!
//! Two recurrences propagate linear bounds on a solution through the scales
//! δ⁰ > δ¹ > δ² > …:
//!
//! * the *corner* pair (K_m, B_m), giving one-sided bounds u ≤ K_m x_n + B_m,
//! * the *flat* quadruple (k_m, K_m, b_m, B_m), giving the two-sided sandwich
//!   k_m x_n - b_m ≤ u ≤ K_m x_n + B_m, with a per-step branch choice that
//!   in the coupled setting is read off the solution itself.
//!
//! Profiles supply the data entering each step: f_r (right-hand-side norms),
//! σ_r = γ(r)/r (modulus slope) and D_r (boundary-deviation envelope).  All
//! are nonincreasing in the step index.  Summability of the step values —
//! the Dini side of the dichotomy — is exactly what keeps the sequences
//! bounded; the evaluators [`corner_bound`] and [`gap_bound`] reproduce the
//! closed bound shapes and are checked for dominance against brute-force
//! runs in the test suite.

use crate::error::{Error, Result};
use crate::quad;
use crate::rng::SplitMix64;
use std::sync::Arc;

/// A profile over radii with the derived per-step view `value(m) = density(δᵐ)`.
#[derive(Clone)]
pub struct Profile {
    density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    step_override: Option<Arc<dyn Fn(usize) -> f64 + Send + Sync>>,
}

impl std::fmt::Debug for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Profile(step_override={})", self.step_override.is_some())
    }
}

impl Profile {
    pub fn from_density(density: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { density: Arc::new(density), step_override: None }
    }

    /// Both views supplied independently; consistency is checked by
    /// [`IterationInputs::validate`].
    pub fn from_parts(
        at_step: impl Fn(usize) -> f64 + Send + Sync + 'static,
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { density: Arc::new(density), step_override: Some(Arc::new(at_step)) }
    }

    pub fn zero() -> Self {
        Self::from_density(|_| 0.0)
    }

    /// coef · r^beta.
    pub fn power(coef: f64, beta: f64) -> Self {
        Self::from_density(move |r| coef * r.powf(beta))
    }

    pub fn constant(c: f64) -> Self {
        Self::from_density(move |_| c)
    }

    pub fn density(&self, r: f64) -> f64 {
        (self.density)(r)
    }

    pub fn at_step(&self, m: usize, delta: f64) -> f64 {
        match &self.step_override {
            Some(f) => f(m),
            None => (self.density)(delta.powi(m as i32)),
        }
    }

    /// The profile seen after zooming in by one scale: value(m) ↦ value(m+1).
    pub fn shifted(&self, delta: f64) -> Self {
        let d = self.density.clone();
        let s = self.step_override.clone();
        Self {
            density: Arc::new(move |r| d(delta * r)),
            step_override: s.map(|f| {
                Arc::new(move |m: usize| f(m + 1)) as Arc<dyn Fn(usize) -> f64 + Send + Sync>
            }),
        }
    }
}

/// Shared inputs of both recurrences.
#[derive(Clone, Debug)]
pub struct IterationInputs {
    pub delta: f64,
    pub mu: f64,
    /// Slope amplification constant M.
    pub m_big: f64,
    pub a1: f64,
    pub a2: f64,
    pub f_profile: Profile,
    pub sigma_profile: Profile,
    /// Flat case only; nonnegative envelope with D(r) ≥ r·σ(r).
    pub d_profile: Option<Profile>,
    /// Corner geometry constant (enters only through configuration).
    pub r0: f64,
}

/// Overflow guard: growth past this signals non-summable profiles.
pub const COMBO_GUARD: f64 = 1e12;

impl IterationInputs {
    /// Defaults: μ = 1/2, A1 = 4, A2 = 2M + 1 with M = 4·M1 derived from
    /// (n, λ), δ = 1/4, zero profiles.
    pub fn defaults(n: usize, lambda: f64) -> Result<Self> {
        let c = crate::barriers::default_constants(n, lambda)?;
        let m_big = c.m;
        Ok(Self {
            delta: 0.25,
            mu: 0.5,
            m_big,
            a1: 4.0,
            a2: 2.0 * m_big + 1.0,
            f_profile: Profile::zero(),
            sigma_profile: Profile::zero(),
            d_profile: None,
            r0: 1.0,
        })
    }

    /// α with μ = δ^α (corner decay exponent).
    pub fn alpha_corner(&self) -> f64 {
        self.mu.ln() / self.delta.ln()
    }

    /// α with 1 - μ = δ^α (flat gap decay exponent).
    pub fn alpha_flat(&self) -> f64 {
        (1.0 - self.mu).ln() / self.delta.ln()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Validation(format!("delta must be in (0,1), got {}", self.delta)));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::Validation(format!("mu must be in (0,1), got {}", self.mu)));
        }
        if !(self.m_big > 0.0 && self.a1 >= 0.0 && self.a2 >= 0.0 && self.r0 > 0.0) {
            return Err(Error::Validation("constants must be positive".into()));
        }
        let check = |name: &str, p: &Profile, cap0: bool| -> Result<()> {
            let mut prev = f64::INFINITY;
            for m in 0..=30 {
                let v = p.at_step(m, self.delta);
                if v < 0.0 {
                    return Err(Error::Validation(format!("{name} profile negative at m={m}")));
                }
                if v > prev + 1e-12 {
                    return Err(Error::Validation(format!("{name} profile increases at m={m}")));
                }
                let dens = p.density(self.delta.powi(m as i32));
                if (v - dens).abs() > 1e-9 * (1.0 + dens.abs()) {
                    return Err(Error::Validation(format!(
                        "{name} profile step/density views disagree at m={m}: {v} vs {dens}"
                    )));
                }
                if cap0 && m == 0 && v > 1.0 + 1e-12 {
                    return Err(Error::Validation(format!("{name} profile must start ≤ 1")));
                }
                prev = v;
            }
            Ok(())
        };
        check("f", &self.f_profile, true)?;
        check("sigma", &self.sigma_profile, false)?;
        if let Some(d) = &self.d_profile {
            check("D", d, false)?;
            for m in 0..=30 {
                let dm = self.delta.powi(m as i32);
                if d.at_step(m, self.delta) < dm * self.sigma_profile.at_step(m, self.delta) - 1e-12 {
                    return Err(Error::Validation(format!(
                        "D profile undercuts r·σ(r) at m={m}"
                    )));
                }
            }
        }
        Ok(())
    }
}

// --- Corner recurrence ------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct CornerState {
    pub big_k: f64,
    pub big_b: f64,
    pub m: usize,
}

impl CornerState {
    /// K_0 = 0, B_0 = 1.
    pub fn initial() -> Self {
        Self { big_k: 0.0, big_b: 1.0, m: 0 }
    }
}

/// One corner step:
/// K' = μ(K + M·B/δᵐ),  B' = A1·δᵐ·f_m + A2·(K + B/δᵐ)·δᵐ·σ_m.
pub fn corner_step(state: &CornerState, inputs: &IterationInputs) -> Result<CornerState> {
    if state.big_k < 0.0 || state.big_b < 0.0 {
        return Err(Error::Validation("corner state must be nonnegative".into()));
    }
    let dm = inputs.delta.powi(state.m as i32);
    if dm == 0.0 {
        return Err(Error::Divergence("scale underflow".into()));
    }
    let combo = state.big_k + state.big_b / dm;
    if !combo.is_finite() || combo > COMBO_GUARD {
        return Err(Error::Divergence(format!(
            "K + B/δᵐ = {combo:.3e} exceeds the guard at m={}; profiles are not summable",
            state.m
        )));
    }
    let fm = inputs.f_profile.at_step(state.m, inputs.delta);
    let sm = inputs.sigma_profile.at_step(state.m, inputs.delta);
    Ok(CornerState {
        big_k: inputs.mu * (state.big_k + inputs.m_big * state.big_b / dm),
        big_b: inputs.a1 * dm * fm + inputs.a2 * combo * dm * sm,
        m: state.m + 1,
    })
}

/// Runs the corner recurrence from (K_0, B_0) = (0, 1) for `m_max` steps;
/// returns all states including the initial one.
pub fn corner_run(inputs: &IterationInputs, m_max: usize) -> Result<Vec<CornerState>> {
    inputs.validate()?;
    let mut states = Vec::with_capacity(m_max + 1);
    states.push(CornerState::initial());
    for _ in 0..m_max {
        let next = corner_step(states.last().unwrap(), inputs)?;
        states.push(next);
    }
    Ok(states)
}

/// Evaluates the closed corner bound
/// `C·r·( r^α (1 + ∫_r^1 (f_t + σ_t)/t^(1+α) dt) + f_(Λr) + σ_(Λr) )`
/// with α from μ = δ^α.
pub fn corner_bound(r: f64, inputs: &IterationInputs, c: f64, lambda_big: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0 / lambda_big) {
        return Err(Error::Domain(format!("r must lie in (0, {}], got {r}", 1.0 / lambda_big)));
    }
    let alpha = inputs.alpha_corner();
    let f = inputs.f_profile.clone();
    let s = inputs.sigma_profile.clone();
    let integral =
        quad::integrate_profile_tail(move |t| f.density(t) + s.density(t), r, alpha, 1e-12);
    let tail = inputs.f_profile.density(lambda_big * r) + inputs.sigma_profile.density(lambda_big * r);
    Ok(c * r * (r.powf(alpha) * (1.0 + integral) + tail))
}

/// Partial sum of a step profile against its integral majorant:
/// `Σ_{i=0}^{m} value(i)  ≤  1 + δ/(1-δ) ∫_{δ^m}^1 density(r)/r dr`.
///
/// The majorant form needs value(0) ≤ 1 and a nonincreasing profile; both
/// are validated.  (It additionally needs density(r)/r nondecreasing to
/// actually dominate — the equality case is density(r) = r.)
pub fn sum_bound_check(profile: &Profile, delta: f64, m_max: usize) -> Result<(f64, f64)> {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for i in 0..=m_max {
        let v = profile.at_step(i, delta);
        if i == 0 && v > 1.0 + 1e-12 {
            return Err(Error::Validation(format!("profile must start ≤ 1, got {v}")));
        }
        if v > prev + 1e-12 {
            return Err(Error::Validation(format!("profile increases at step {i}")));
        }
        prev = v;
        sum += v;
    }
    let lo = delta.powi(m_max as i32);
    let integral = if lo < 1.0 {
        quad::integrate_over_log(|r| profile.density(r), lo, 1.0, 1e-12)
    } else {
        0.0
    };
    let bound = 1.0 + delta / (1.0 - delta) * integral;
    Ok((sum, bound))
}

// --- Flat recurrence --------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    A,
    B,
}

#[derive(Clone, Copy, Debug)]
pub struct FlatState {
    pub k: f64,
    pub big_k: f64,
    pub b: f64,
    pub big_b: f64,
    pub m: usize,
}

impl FlatState {
    /// k_0 = K_0 = b_0 = 0, B_0 = 1.
    pub fn initial() -> Self {
        Self { k: 0.0, big_k: 0.0, b: 0.0, big_b: 1.0, m: 0 }
    }

    pub fn gap(&self) -> f64 {
        self.big_k - self.k
    }
}

/// One flat step.  Offsets update first from the current state:
///
/// ```text
///   b' = A1 δᵐ f_m + A2 (K + k + b/δᵐ) δᵐ D_m
///   B' = A1 δᵐ f_m + A2 (K + k + B/δᵐ) δᵐ σ_m
/// ```
///
/// then the slopes update along the chosen branch:
///
/// ```text
///   A:  k' = (k - M b/δᵐ + μ(K - k))⁺ ,  K' = K + M B/δᵐ
///   B:  k' = (k - M b/δᵐ)⁺ ,             K' = K + M B/δᵐ - μ(K - k)
/// ```
pub fn flat_step(state: &FlatState, branch: Branch, inputs: &IterationInputs) -> Result<FlatState> {
    if state.k < 0.0 || state.big_k < state.k || state.b < 0.0 || state.big_b < 0.0 {
        return Err(Error::Validation(format!("flat state violates K ≥ k ≥ 0: {state:?}")));
    }
    let dm = inputs.delta.powi(state.m as i32);
    if dm == 0.0 {
        return Err(Error::Divergence("scale underflow".into()));
    }
    let combo = state.big_k + state.k + state.big_b / dm + state.b / dm;
    if !combo.is_finite() || combo > COMBO_GUARD {
        return Err(Error::Divergence(format!(
            "K + k + (B+b)/δᵐ = {combo:.3e} exceeds the guard at m={}; profiles are not summable",
            state.m
        )));
    }
    let fm = inputs.f_profile.at_step(state.m, inputs.delta);
    let sm = inputs.sigma_profile.at_step(state.m, inputs.delta);
    let ddm = inputs.d_profile.as_ref().map_or(0.0, |p| p.at_step(state.m, inputs.delta));
    let base = inputs.a1 * dm * fm;
    let b_next = base + inputs.a2 * (state.big_k + state.k + state.b / dm) * dm * ddm;
    let bb_next = base + inputs.a2 * (state.big_k + state.k + state.big_b / dm) * dm * sm;
    let mu = inputs.mu;
    let shrink = mu * (state.big_k - state.k);
    let lowered = state.k - inputs.m_big * state.b / dm;
    let raised = state.big_k + inputs.m_big * state.big_b / dm;
    let (k_next, kk_next) = match branch {
        Branch::A => ((lowered + shrink).max(0.0), raised),
        Branch::B => (lowered.max(0.0), raised - shrink),
    };
    Ok(FlatState { k: k_next, big_k: kk_next, b: b_next, big_b: bb_next, m: state.m + 1 })
}

/// Per-step branch selection.
pub enum BranchOracle {
    /// Cycles through a fixed pattern.
    Fixed(Vec<Branch>),
    /// Seeded coin flips.
    Random(SplitMix64),
    /// Always picks the branch maximizing the next gap K' - k'.
    Adversarial,
    /// Driven by external data (the solver couples through this).
    Coupled(Arc<dyn Fn(usize, &FlatState) -> Branch + Send + Sync>),
}

impl BranchOracle {
    pub fn random(seed: u64) -> Self {
        BranchOracle::Random(SplitMix64::new(seed))
    }

    pub fn choose(&mut self, m: usize, state: &FlatState, inputs: &IterationInputs) -> Branch {
        match self {
            BranchOracle::Fixed(pattern) => {
                if pattern.is_empty() {
                    Branch::A
                } else {
                    pattern[m % pattern.len()]
                }
            }
            BranchOracle::Random(rng) => {
                if rng.next_f64() < 0.5 {
                    Branch::A
                } else {
                    Branch::B
                }
            }
            BranchOracle::Adversarial => {
                let ga = flat_step(state, Branch::A, inputs).map(|s| s.gap());
                let gb = flat_step(state, Branch::B, inputs).map(|s| s.gap());
                match (ga, gb) {
                    (Ok(a), Ok(b)) if b > a => Branch::B,
                    _ => Branch::A,
                }
            }
            BranchOracle::Coupled(f) => f(m, state),
        }
    }
}

/// Full flat run with its branch trace and limit estimate.
#[derive(Clone, Debug)]
pub struct FlatRun {
    pub states: Vec<FlatState>,
    pub branches: Vec<Branch>,
    /// Limit of (K_m + k_m)/2, reported once the increments stay below
    /// 1e-10 for five consecutive steps.
    pub a: Option<f64>,
}

/// Summary quantities for the convergence claims.
#[derive(Clone, Copy, Debug)]
pub struct ClaimSummary {
    /// sup_m (K_m + k_m).
    pub sup_slope_sum: f64,
    pub final_lower_offset_rate: f64,
    pub final_upper_offset_rate: f64,
    pub final_gap: f64,
    pub mean_limit: Option<f64>,
    /// max |Δ(K+k)| over the last five steps.
    pub cauchy_tail: f64,
}

impl FlatRun {
    /// Per-step gaps K_m - k_m.
    pub fn gaps(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.gap()).collect()
    }

    pub fn claim_summary(&self, delta: f64) -> ClaimSummary {
        let last = self.states.last().unwrap();
        let dm = delta.powi(last.m as i32);
        let sums: Vec<f64> = self.states.iter().map(|s| s.big_k + s.k).collect();
        let mut cauchy_tail: f64 = 0.0;
        for w in sums.windows(2).rev().take(5) {
            cauchy_tail = cauchy_tail.max((w[1] - w[0]).abs());
        }
        ClaimSummary {
            sup_slope_sum: sums.iter().cloned().fold(0.0, f64::max),
            final_lower_offset_rate: last.b / dm,
            final_upper_offset_rate: last.big_b / dm,
            final_gap: last.gap(),
            mean_limit: self.a,
            cauchy_tail,
        }
    }
}

/// Runs the flat recurrence `m_max` steps under the given oracle.
/// Detects divergence (strictly growing gap for five consecutive steps).
pub fn flat_run(inputs: &IterationInputs, oracle: &mut BranchOracle, m_max: usize) -> Result<FlatRun> {
    if m_max < 50 {
        return Err(Error::Validation(format!("m_max must be >= 50, got {m_max}")));
    }
    inputs.validate()?;
    let mut states = vec![FlatState::initial()];
    let mut branches = Vec::with_capacity(m_max);
    // The gap can only grow through the data term M(B+b)/δᵐ, and a decaying
    // data term lets it grow for a bounded transient; sustained growth of
    // the data term itself is the divergence signal (non-summable profiles).
    let mut growth_streak = 0usize;
    let mut prev_rate = f64::INFINITY;
    for m in 0..m_max {
        let state = *states.last().unwrap();
        let branch = oracle.choose(m, &state, inputs);
        let next = flat_step(&state, branch, inputs)?;
        let dm = inputs.delta.powi(next.m as i32);
        let rate = (next.big_b + next.b) / dm;
        if rate > prev_rate && next.gap() > state.gap() {
            growth_streak += 1;
            // Decaying profiles produce bounded transients (the amplification
            // M·A2·σ₀/δ dies off geometrically); only a long joint growth
            // streak indicates non-summable input.
            if growth_streak >= 12 {
                return Err(Error::Divergence(format!(
                    "offset rate and gap grew together for twelve consecutive steps up to m={}",
                    next.m
                )));
            }
        } else {
            growth_streak = 0;
        }
        prev_rate = rate;
        branches.push(branch);
        states.push(next);
    }
    // Limit detection on (K+k).
    let sums: Vec<f64> = states.iter().map(|s| s.big_k + s.k).collect();
    let mut a = None;
    let mut quiet = 0usize;
    for w in sums.windows(2) {
        if (w[1] - w[0]).abs() < 1e-10 {
            quiet += 1;
            if quiet >= 5 {
                a = Some(0.5 * sums[sums.len() - 1]);
                break;
            }
        } else {
            quiet = 0;
        }
    }
    Ok(FlatRun { states, branches, a })
}

/// Evaluates the gap envelope
/// `C6 · δ^(mα) (1 + ∫_(δᵐ)^1 (f_r + D_r + σ_r)/r^(1+α) dr)`
/// with α from 1 - μ = δ^α.
pub fn gap_bound(inputs: &IterationInputs, m: usize, c6: f64) -> Result<f64> {
    let alpha = inputs.alpha_flat();
    if !(alpha > 0.0) {
        return Err(Error::Validation("need 0 < 1 - mu < 1 for a positive exponent".into()));
    }
    let r = inputs.delta.powi(m as i32);
    let f = inputs.f_profile.clone();
    let s = inputs.sigma_profile.clone();
    let d = inputs.d_profile.clone();
    let integral = if r < 1.0 {
        quad::integrate_profile_tail(
            move |t| f.density(t) + s.density(t) + d.as_ref().map_or(0.0, |p| p.density(t)),
            r,
            alpha,
            1e-12,
        )
    } else {
        0.0
    };
    Ok(c6 * r.powf(alpha) * (1.0 + integral))
}

/// The constant with which the gap envelope provably dominates a given run:
///
/// ```text
///   C6 = max(M, C5 / ((1-δ) δ^(2α))),   C5 = M(2 A1 + A2 C4)/δ,
///   C4 = 2 sup_m (K_m + k_m + (B_m + b_m)/δᵐ),
/// ```
///
/// obtained by unrolling gap' ≤ (1-μ)gap + M(B+b)/δᵐ and comparing the
/// resulting geometric sum against the profile integral.  Any fitted
/// dominance constant must come in at or below this value.
pub fn gap_bound_constant(inputs: &IterationInputs, run: &FlatRun) -> f64 {
    let mut c4: f64 = 0.0;
    for s in &run.states {
        let dm = inputs.delta.powi(s.m as i32);
        if dm > 0.0 {
            c4 = c4.max(2.0 * (s.big_k + s.k + (s.big_b + s.b) / dm));
        }
    }
    let c5 = inputs.m_big * (2.0 * inputs.a1 + inputs.a2 * c4) / inputs.delta;
    let alpha = inputs.alpha_flat();
    inputs
        .m_big
        .max(c5 / ((1.0 - inputs.delta) * inputs.delta.powf(2.0 * alpha)))
}

/// C = max_m values[m]/envelope[m] over entries with a positive envelope:
/// the smallest constant making the envelope dominate the run.
pub fn fit_dominance_constant(values: &[f64], envelope: &[f64]) -> f64 {
    values
        .iter()
        .zip(envelope)
        .filter(|&(_, &e)| e > 0.0)
        .map(|(&v, &e)| v / e)
        .fold(0.0, f64::max)
}
