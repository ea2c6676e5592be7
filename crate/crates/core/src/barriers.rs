//! Explicit barrier pair and its certification.
//!
//! The two barriers live on the slab Q[Mδ, δ] and transfer boundary bounds
//! inward.  With g = γ(2Mδ) and s = (x_n + g)/(2δ):
//!
//! ```text
//!   Ψ(x)  = 4s - s² + (λ²/(8(n-1)))  Σ_{i<n} ((|x_i|/δ - 1)⁺)^(2+ε)
//!   Ψ~(x) = (s + s²)/2 - (λ²/(16(n-1))) Σ_{i<n} ((|x_i|/δ - 1)⁺)^(2+ε)
//! ```
//!
//! Ψ is a supersolution and Ψ~ a subsolution for every admissible operator
//! provided ε satisfies the feasibility inequality
//! `4 - (1+ε)(2+ε)(M-1)^ε ≥ 0`.  Ten inequalities (five per barrier) make
//! the pair usable; [`verify_barrier`] certifies all ten by deterministic
//! sampling and reports the worst margin of each.

use crate::coeffs::EllipticCoefficients;
use crate::error::{Error, Result};
use crate::modulus::Modulus;
use crate::rng::SplitMix64;

/// Parameters of one barrier pair.
#[derive(Clone, Copy, Debug)]
pub struct BarrierParams {
    pub n: usize,
    pub lambda: f64,
    /// Lateral half-width ratio M (the slab is Q[Mδ, δ]).
    pub m: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// g = γ(2Mδ).
    pub g: f64,
}

/// Constants derived from (n, λ) that every default configuration uses:
/// the lateral ratio `m1`, the slope amplification `m = 4 m1`, the two slab
/// heights `delta1 = 1/(2 m1)` and `delta = delta1/(2 m1)`, and the slope
/// smallness threshold `c_small`.
#[derive(Clone, Copy, Debug)]
pub struct DefaultConstants {
    pub m1: f64,
    pub m: f64,
    pub delta1: f64,
    pub delta: f64,
    pub c_small: f64,
}

/// Derives the default constant set from dimension and ellipticity.
pub fn default_constants(n: usize, lambda: f64) -> Result<DefaultConstants> {
    if n < 2 {
        return Err(Error::Validation(format!("dimension must be >= 2, got {n}")));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Validation(format!("lambda must be in (0,1], got {lambda}")));
    }
    let root = ((n - 1) as f64).sqrt();
    let m1 = 2.0 * root * (1.0 + 2.0 * root / lambda);
    let delta1 = 1.0 / (2.0 * m1);
    Ok(DefaultConstants {
        m1,
        m: 4.0 * m1,
        delta1,
        delta: delta1 / (2.0 * m1),
        c_small: 1.0 / (32.0 * (n - 1) as f64 * (1.0 + 2.0 * root / lambda).powi(2)),
    })
}

/// Feasibility margin of the lateral exponent: `4 - (1+ε)(2+ε)(M-1)^ε`.
pub fn epsilon_margin(m: f64, eps: f64) -> f64 {
    4.0 - (1.0 + eps) * (2.0 + eps) * (m - 1.0).powf(eps)
}

/// Largest ε in (0, 1] with nonnegative feasibility margin, found by a
/// downward scan and bisection to machine precision.  The returned ε always
/// satisfies the inequality itself (feasible endpoint of the final bracket).
pub fn choose_epsilon(m: f64) -> Result<f64> {
    if !(m > 1.0) {
        return Err(Error::Domain(format!("M must exceed 1, got {m}")));
    }
    if epsilon_margin(m, 1.0) >= 0.0 {
        return Ok(1.0);
    }
    // Scan downward for the highest feasible grid point.
    let grid = 64;
    let mut feasible = None;
    for k in (1..grid).rev() {
        let eps = k as f64 / grid as f64;
        if epsilon_margin(m, eps) >= 0.0 {
            feasible = Some((eps, (k + 1) as f64 / grid as f64));
            break;
        }
    }
    let (mut lo, mut hi) = match feasible {
        Some(pair) => pair,
        None => {
            // Margin tends to 2 as ε → 0, so bracket below the first grid point.
            let mut lo = 1.0 / grid as f64;
            while epsilon_margin(m, lo) < 0.0 {
                lo *= 0.5;
                if lo < 1e-300 {
                    return Err(Error::Domain("no feasible epsilon".into()));
                }
            }
            (lo, 2.0 * lo)
        }
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if epsilon_margin(m, mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

impl BarrierParams {
    /// Builds params from the geometry and a modulus; ε is chosen maximal
    /// feasible and g = γ(2Mδ).  Only structural sanity is enforced here so
    /// that deliberately broken configurations can still be *certified*
    /// (and fail with negative slack); see [`BarrierParams::validate_hypotheses`].
    pub fn new(n: usize, lambda: f64, m: f64, delta: f64, gamma: &Modulus) -> Result<Self> {
        if n < 2 {
            return Err(Error::Validation(format!("dimension must be >= 2, got {n}")));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Validation(format!("lambda must be in (0,1], got {lambda}")));
        }
        if !(delta > 0.0) || !(m > 1.0) {
            return Err(Error::Validation(format!("need delta > 0 and M > 1, got {delta}, {m}")));
        }
        // The canonical constants instantiate the slab exactly at Mδ = 1/2,
        // so the half-width cap is non-strict.
        if m * delta > 0.5 + 1e-12 {
            return Err(Error::Validation(format!("M*delta must stay within 1/2, got {}", m * delta)));
        }
        let epsilon = choose_epsilon(m)?;
        let g = gamma.eval(2.0 * m * delta);
        Ok(Self { n, lambda, m, delta, epsilon, g })
    }

    /// Full hypothesis check: M above its lower bound, g < δ, ε feasible.
    pub fn validate_hypotheses(&self) -> Result<()> {
        let root = ((self.n - 1) as f64).sqrt();
        let m_min = root * (1.0 + 4.0 * root / self.lambda);
        if self.m < m_min - 1e-12 {
            return Err(Error::Validation(format!(
                "M = {} below its lower bound {m_min}",
                self.m
            )));
        }
        if !(self.g < self.delta) {
            return Err(Error::Validation(format!(
                "γ(2Mδ) = {} must stay below δ = {}",
                self.g, self.delta
            )));
        }
        if !(self.epsilon > 0.0) || epsilon_margin(self.m, self.epsilon) < 0.0 {
            return Err(Error::Validation(format!("epsilon {} infeasible", self.epsilon)));
        }
        Ok(())
    }

    fn lateral_coef(&self) -> f64 {
        self.lambda * self.lambda / (8.0 * (self.n - 1) as f64)
    }

    fn lateral_sum(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for &xi in &x[..self.n - 1] {
            let t = (xi.abs() / self.delta - 1.0).max(0.0);
            s += t.powf(2.0 + self.epsilon);
        }
        s
    }
}

/// Evaluates (Ψ, Ψ~) at a point of R^n.
pub fn eval_barriers(params: &BarrierParams, x: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), params.n);
    let s = (x[params.n - 1] + params.g) / (2.0 * params.delta);
    let lat = params.lateral_sum(x);
    let psi = 4.0 * s - s * s + params.lateral_coef() * lat;
    let psi_tilde = 0.5 * (s + s * s) - 0.5 * params.lateral_coef() * lat;
    (psi, psi_tilde)
}

/// Analytic Hessians of (Ψ, Ψ~): both are diagonal.
pub fn barrier_hessians(params: &BarrierParams, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    assert_eq!(x.len(), params.n);
    let n = params.n;
    let d2 = params.delta * params.delta;
    let mut h = vec![vec![0.0; n]; n];
    let mut ht = vec![vec![0.0; n]; n];
    h[n - 1][n - 1] = -1.0 / (2.0 * d2);
    ht[n - 1][n - 1] = 1.0 / (4.0 * d2);
    let e = params.epsilon;
    let fac = (2.0 + e) * (1.0 + e) / d2;
    for i in 0..n - 1 {
        let t = (x[i].abs() / params.delta - 1.0).max(0.0);
        let second = fac * t.powf(e);
        h[i][i] = params.lateral_coef() * second;
        ht[i][i] = -0.5 * params.lateral_coef() * second;
    }
    (h, ht)
}

/// Coefficient model for operator bounds.
pub enum CoeffSpec<'a> {
    /// Diagonal matrices with a_nn in [λ, 1/λ] and Σ_{i<n} a_ii ≤ (n-1)/λ:
    /// the admissible envelope the barrier construction closes against.
    WorstCase,
    /// An explicit 2D coefficient field, minimized/maximized over a grid.
    Explicit { coeffs: &'a EllipticCoefficients, grid: usize },
}

/// Returns `(psi_lower, psi_tilde_upper)`: the infimum of `-a^{ij} D_ij Ψ`
/// and the supremum of `-a^{ij} D_ij Ψ~` over the coefficient model (and,
/// for explicit coefficients, over a sample grid of the slab).
pub fn operator_bound(params: &BarrierParams, spec: CoeffSpec<'_>) -> Result<(f64, f64)> {
    let d2 = params.delta * params.delta;
    let e = params.epsilon;
    let lam = params.lambda;
    match spec {
        CoeffSpec::WorstCase => {
            let growth = (1.0 + e) * (2.0 + e) * (params.m - 1.0).powf(e);
            let psi_lower = lam / (2.0 * d2) - lam * growth / (8.0 * d2);
            let psi_tilde_upper = -lam / (4.0 * d2) + lam * growth / (16.0 * d2);
            Ok((psi_lower, psi_tilde_upper))
        }
        CoeffSpec::Explicit { coeffs, grid } => {
            if params.n != 2 {
                return Err(Error::Validation(
                    "explicit coefficient fields are 2D; use WorstCase for n > 2".into(),
                ));
            }
            let half = params.m * params.delta;
            let mut lower = f64::INFINITY;
            let mut upper = f64::NEG_INFINITY;
            for i in 0..grid {
                for j in 0..grid {
                    let x = -half + 2.0 * half * (i as f64 + 0.5) / grid as f64;
                    let y = -params.delta + 2.0 * params.delta * (j as f64 + 0.5) / grid as f64;
                    coeffs.check_point(x, y)?;
                    let [a11, _, a22] = coeffs.at(x, y);
                    let (h, ht) = barrier_hessians(params, &[x, y]);
                    // Off-diagonal Hessian entries vanish, so cross terms drop.
                    lower = lower.min(-(a11 * h[0][0] + a22 * h[1][1]));
                    upper = upper.max(-(a11 * ht[0][0] + a22 * ht[1][1]));
                }
            }
            Ok((lower, upper))
        }
    }
}

/// One certified inequality.
#[derive(Clone, Debug)]
pub struct PropertyCheck {
    pub id: &'static str,
    pub region: &'static str,
    pub passed: bool,
    pub min_slack: f64,
    pub argmin: Vec<f64>,
    /// Secondary margin where a stronger threshold is also tracked
    /// (the lateral face admits both Ψ ≥ 1 and Ψ ≥ 2).
    pub aux_slack: Option<f64>,
}

/// Certification report: ten properties, five per barrier.
#[derive(Clone, Debug)]
pub struct BarrierReport {
    pub properties: Vec<PropertyCheck>,
    pub samples_per_property: usize,
}

impl BarrierReport {
    pub fn all_pass(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }
}

/// Certifies the ten barrier inequalities by seeded sampling over the
/// regions where each must hold.  The slab is modeled as
/// `{|x'| ≤ Mδ, -γ(2|x'|) ≤ x_n ≤ δ}`, the envelope every admissible domain
/// respects.  `budget` is the sample count per property (≥ 10^4).
pub fn verify_barrier(
    params: &BarrierParams,
    gamma: &Modulus,
    budget: usize,
    seed: u64,
) -> Result<BarrierReport> {
    if budget < 10_000 {
        return Err(Error::Validation(format!("sample budget must be >= 10^4, got {budget}")));
    }
    let expected_g = gamma.eval(2.0 * params.m * params.delta);
    if (params.g - expected_g).abs() > 1e-9 * (1.0 + expected_g.abs()) {
        return Err(Error::Validation(format!(
            "params.g = {} inconsistent with γ(2Mδ) = {expected_g}",
            params.g
        )));
    }
    let n = params.n;
    let delta = params.delta;
    let mdelta = params.m * delta;
    let mut rng = SplitMix64::new(seed);

    // Samplers -------------------------------------------------------------
    let ball = |rng: &mut SplitMix64, radius: f64| -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n - 1).map(|_| rng.range(-radius, radius)).collect();
            if v.iter().map(|t| t * t).sum::<f64>() <= radius * radius {
                return v;
            }
        }
    };
    let sphere = |rng: &mut SplitMix64, radius: f64| -> Vec<f64> {
        if n == 2 {
            vec![if rng.next_f64() < 0.5 { -radius } else { radius }]
        } else {
            loop {
                let v = ball(rng, radius);
                let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
                if norm > 1e-9 {
                    return v.iter().map(|t| t * radius / norm).collect();
                }
            }
        }
    };
    let floor_at = |xp: &[f64]| -> f64 {
        let r = xp.iter().map(|t| t * t).sum::<f64>().sqrt();
        -gamma.eval(2.0 * r)
    };
    let point = |xp: Vec<f64>, xn: f64| -> Vec<f64> {
        let mut x = xp;
        x.push(xn);
        x
    };

    let mut checks: Vec<PropertyCheck> = Vec::with_capacity(10);
    let mut run = |id: &'static str,
                   region: &'static str,
                   rng: &mut SplitMix64,
                   mut gen: Box<dyn FnMut(&mut SplitMix64) -> Vec<f64>>,
                   slack_of: Box<dyn Fn(&[f64]) -> (f64, Option<f64>)>| {
        let mut min_slack = f64::INFINITY;
        let mut min_aux: Option<f64> = None;
        let mut argmin = vec![0.0; n];
        for _ in 0..budget {
            let x = gen(rng);
            let (s, aux) = slack_of(&x);
            if s < min_slack {
                min_slack = s;
                argmin = x;
            }
            if let Some(a) = aux {
                min_aux = Some(min_aux.map_or(a, |m: f64| m.min(a)));
            }
        }
        checks.push(PropertyCheck {
            id,
            region,
            passed: min_slack > 0.0,
            min_slack,
            argmin,
            aux_slack: min_aux,
        });
    };

    let p = *params;
    // Upper barrier ---------------------------------------------------------
    run(
        "U1",
        "top_face",
        &mut rng,
        Box::new(move |r| point(ball(r, mdelta), delta)),
        Box::new(move |x| (eval_barriers(&p, x).0 - 1.0, None)),
    );
    run(
        "U2",
        "slab",
        &mut rng,
        Box::new(move |r| {
            let xp = ball(r, mdelta);
            let lo = floor_at(&xp);
            let xn = r.range(lo, delta);
            point(xp, xn)
        }),
        Box::new(move |x| (eval_barriers(&p, x).0, None)),
    );
    run(
        "U3",
        "lateral_face",
        &mut rng,
        Box::new(move |r| {
            let xp = sphere(r, mdelta);
            let lo = floor_at(&xp);
            let xn = r.range(lo, delta);
            point(xp, xn)
        }),
        Box::new(move |x| {
            let v = eval_barriers(&p, x).0;
            (v - 1.0, Some(v - 2.0))
        }),
    );
    run(
        "U4",
        "core_slab",
        &mut rng,
        Box::new(move |r| {
            let xp = ball(r, delta);
            let lo = floor_at(&xp);
            let xn = r.range(lo, delta);
            point(xp, xn)
        }),
        Box::new(move |x| {
            let lin = 2.0 * (x[p.n - 1] + p.g) / p.delta;
            (lin - eval_barriers(&p, x).0, None)
        }),
    );
    run(
        "U5",
        "slab_operator",
        &mut rng,
        Box::new(move |r| {
            let xp = ball(r, mdelta);
            let lo = floor_at(&xp);
            let xn = r.range(lo, delta);
            let mut x = point(xp, xn);
            // Append a random admissible diagonal coefficient matrix.
            for _ in 0..n {
                x.push(r.range(p.lambda, 1.0 / p.lambda));
            }
            x
        }),
        Box::new(move |xa| {
            let (x, a) = xa.split_at(p.n);
            let (h, _) = barrier_hessians(&p, x);
            let mut val = 0.0;
            for i in 0..p.n {
                val -= a[i] * h[i][i];
            }
            (val, None)
        }),
    );
    // Lower barrier ---------------------------------------------------------
    run(
        "L1",
        "top_face",
        &mut rng,
        Box::new(move |r| point(ball(r, mdelta), delta)),
        Box::new(move |x| (1.0 - eval_barriers(&p, x).1, None)),
    );
    run(
        "L2",
        "slab",
        &mut rng,
        Box::new(move |r| {
            let xp = ball(r, mdelta);
            let lo = floor_at(&xp);
            point(xp, r.range(lo, delta))
        }),
        Box::new(move |x| {
            let lin = (x[p.n - 1] + p.g) / p.delta;
            (lin - eval_barriers(&p, x).1, None)
        }),
    );
    run(
        "L3",
        "lateral_face",
        &mut rng,
        Box::new(move |r| {
            let xp = sphere(r, mdelta);
            let lo = floor_at(&xp);
            point(xp, r.range(lo, delta))
        }),
        Box::new(move |x| (-eval_barriers(&p, x).1, None)),
    );
    run(
        "L4",
        "core_slab",
        &mut rng,
        Box::new(move |r| {
            let xp = ball(r, delta);
            let lo = floor_at(&xp);
            point(xp, r.range(lo, delta))
        }),
        Box::new(move |x| {
            let lin = (x[p.n - 1] + p.g) / (4.0 * p.delta);
            (eval_barriers(&p, x).1 - lin, None)
        }),
    );
    run(
        "L5",
        "slab_operator",
        &mut rng,
        Box::new(move |r| {
            let xp = ball(r, mdelta);
            let lo = floor_at(&xp);
            let mut x = point(xp, r.range(lo, delta));
            for _ in 0..n {
                x.push(r.range(p.lambda, 1.0 / p.lambda));
            }
            x
        }),
        Box::new(move |xa| {
            let (x, a) = xa.split_at(p.n);
            let (_, ht) = barrier_hessians(&p, x);
            let mut val = 0.0;
            for i in 0..p.n {
                val += a[i] * ht[i][i];
            }
            (val, None)
        }),
    );

    Ok(BarrierReport { properties: checks, samples_per_property: budget })
}

/// Maximum relative deviation between analytic and central finite-difference
/// Hessians over `points` random admissible points.
///
/// A band around the lateral kinks |x_i| = δ is excluded: the fourth
/// derivative grows like dist^(ε-2) there, so the band must scale with the
/// step (400·h keeps the truncation term below 1e-7).  Deviations are
/// measured relative to the Hessian's own magnitude at the point, which is
/// the scale finite differences can resolve against the eps·|Ψ|/h² noise
/// floor.
pub fn hessian_fd_max_rel_err(params: &BarrierParams, points: usize, h: f64, seed: u64) -> f64 {
    let n = params.n;
    let mut rng = SplitMix64::new(seed);
    let mdelta = params.m * params.delta;
    let band = (1e-4f64).max(400.0 * h);
    let mut worst: f64 = 0.0;
    let mut sampled = 0usize;
    while sampled < points {
        let mut x: Vec<f64> = (0..n - 1).map(|_| rng.range(-mdelta, mdelta)).collect();
        x.push(rng.range(-params.g, params.delta));
        if x[..n - 1].iter().any(|t| (t.abs() - params.delta).abs() < band) {
            continue;
        }
        sampled += 1;
        let (ha, hta) = barrier_hessians(params, &x);
        let mut h_scale = 1.0f64;
        for i in 0..n {
            h_scale = h_scale.max(ha[i][i].abs()).max(hta[i][i].abs());
        }
        for i in 0..n {
            for j in 0..n {
                for pick in 0..2 {
                    let f = |y: &[f64]| {
                        let (a, b) = eval_barriers(params, y);
                        if pick == 0 {
                            a
                        } else {
                            b
                        }
                    };
                    let fd = if i == j {
                        let mut xp = x.clone();
                        let mut xm = x.clone();
                        xp[i] += h;
                        xm[i] -= h;
                        (f(&xp) - 2.0 * f(&x) + f(&xm)) / (h * h)
                    } else {
                        let mut xpp = x.clone();
                        let mut xpm = x.clone();
                        let mut xmp = x.clone();
                        let mut xmm = x.clone();
                        xpp[i] += h;
                        xpp[j] += h;
                        xpm[i] += h;
                        xpm[j] -= h;
                        xmp[i] -= h;
                        xmp[j] += h;
                        xmm[i] -= h;
                        xmm[j] -= h;
                        (f(&xpp) - f(&xpm) - f(&xmp) + f(&xmm)) / (4.0 * h * h)
                    };
                    let exact = if pick == 0 { ha[i][j] } else { hta[i][j] };
                    let rel = (fd - exact).abs() / h_scale;
                    worst = worst.max(rel);
                }
            }
        }
    }
    worst
}
