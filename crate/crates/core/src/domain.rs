//! Planar boundary geometry: graph domains, supporting directions, blow-up
//! cones and the corner/flat taxonomy.
//!
//! The domain is described locally as Ω = {(x, y) : y > ν(x)} with ν(0) = 0.
//! Blow-up sets at boundary points of such domains are circular sectors; a
//! boundary point is *flat* when the sector is a half-plane and *corner*
//! otherwise.

use crate::error::{Error, Result};
use crate::extrapolate::neville_at_zero;
use crate::modulus::Modulus;
use crate::rng::SplitMix64;
use std::f64::consts::PI;
use std::sync::Arc;

/// Boundary graph families used throughout the test corpus, plus a custom
/// escape hatch.
#[derive(Clone)]
pub enum BoundaryGraph {
    /// ν ≡ 0.
    Flat,
    /// ν = |x| (convex wedge).
    Wedge,
    /// ν = -|x| (concave wedge: no supporting direction exists at 0).
    NegWedge,
    /// ν = x².
    Parabola,
    /// ν = m·x.
    Slope(f64),
    /// ν = -|x| / ln^q(e/|x|): an exterior cusp; Dini iff q > 1.
    LogCusp { q: f64 },
    /// ν = +|x| / ln^q(e/|x|): interior log cusp (flat, not Lipschitz).
    PosLogCusp { q: f64 },
    /// ν = -|x|^alpha with alpha in (0,1]: exterior power cusp, never Dini.
    PowerCusp { alpha: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for BoundaryGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryGraph::Flat => write!(f, "Flat"),
            BoundaryGraph::Wedge => write!(f, "Wedge"),
            BoundaryGraph::NegWedge => write!(f, "NegWedge"),
            BoundaryGraph::Parabola => write!(f, "Parabola"),
            BoundaryGraph::Slope(m) => write!(f, "Slope({m})"),
            BoundaryGraph::LogCusp { q } => write!(f, "LogCusp(q={q})"),
            BoundaryGraph::PosLogCusp { q } => write!(f, "PosLogCusp(q={q})"),
            BoundaryGraph::PowerCusp { alpha } => write!(f, "PowerCusp(alpha={alpha})"),
            BoundaryGraph::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl BoundaryGraph {
    pub fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            BoundaryGraph::Flat => 0.0,
            BoundaryGraph::Wedge => a,
            BoundaryGraph::NegWedge => -a,
            BoundaryGraph::Parabola => x * x,
            BoundaryGraph::Slope(m) => m * x,
            BoundaryGraph::LogCusp { q } => {
                if a == 0.0 {
                    0.0
                } else {
                    -a / (1.0 - a.ln()).powf(*q)
                }
            }
            BoundaryGraph::PosLogCusp { q } => {
                if a == 0.0 {
                    0.0
                } else {
                    a / (1.0 - a.ln()).powf(*q)
                }
            }
            BoundaryGraph::PowerCusp { alpha } => -a.powf(*alpha),
            BoundaryGraph::Custom(f) => f(x),
        }
    }
}

/// A local boundary graph over [-half_width, half_width], oriented so the
/// domain lies above: Ω = {y > ν(x)}.
#[derive(Clone, Debug)]
pub struct GraphDomain {
    pub graph: BoundaryGraph,
    pub half_width: f64,
    /// Continuity budget (c, p): spot checks require |Δν| ≤ c·|Δx|^p.
    pub continuity: (f64, f64),
}

pub const BOUNDARY_TOL: f64 = 1e-9;

impl GraphDomain {
    pub fn new(graph: BoundaryGraph) -> Result<Self> {
        let d = Self { graph, half_width: 1.0, continuity: (10.0, 0.25) };
        d.validate()?;
        Ok(d)
    }

    pub fn nu(&self, x: f64) -> f64 {
        self.graph.eval(x)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[1] > self.nu(p[0])
    }

    pub fn on_boundary(&self, p: [f64; 2]) -> bool {
        p[0].abs() <= self.half_width && (p[1] - self.nu(p[0])).abs() <= BOUNDARY_TOL
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu(0.0).abs() > 1e-14 {
            return Err(Error::Domain(format!("ν(0) = {} must vanish", self.nu(0.0))));
        }
        match &self.graph {
            BoundaryGraph::PowerCusp { alpha } if !(*alpha > 0.0 && *alpha <= 1.0) => {
                return Err(Error::Domain(format!("power cusp exponent must be in (0,1], got {alpha}")));
            }
            BoundaryGraph::LogCusp { q } | BoundaryGraph::PosLogCusp { q } if !(*q > 0.0) => {
                return Err(Error::Domain(format!("log cusp exponent must be positive, got {q}")));
            }
            _ => {}
        }
        let (c, p) = self.continuity;
        let mut prev_x = -self.half_width;
        let mut prev_v = self.nu(prev_x);
        for k in 1..=512 {
            let x = -self.half_width + 2.0 * self.half_width * k as f64 / 512.0;
            let v = self.nu(x);
            let step = (x - prev_x).abs();
            if (v - prev_v).abs() > c * step.powf(p) + 1e-12 {
                return Err(Error::Domain(format!(
                    "continuity check failed near x={x}: |Δν|={} exceeds {}",
                    (v - prev_v).abs(),
                    c * step.powf(p)
                )));
            }
            prev_x = x;
            prev_v = v;
        }
        Ok(())
    }
}

/// A unit supporting direction anchored at a boundary point.
#[derive(Clone, Copy, Debug)]
pub struct SupportDirection {
    pub eta: [f64; 2],
    pub anchor: [f64; 2],
}

impl SupportDirection {
    pub fn new(eta: [f64; 2], anchor: [f64; 2]) -> Result<Self> {
        let norm = (eta[0] * eta[0] + eta[1] * eta[1]).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("η must be unit length, |η| = {norm}")));
        }
        Ok(Self { eta, anchor })
    }

    pub fn from_angle(theta: f64, anchor: [f64; 2]) -> Self {
        Self { eta: [theta.cos(), theta.sin()], anchor }
    }
}

/// A planar sector about the origin, angles measured from the positive
/// x-axis.  Membership is scale invariant by construction.
#[derive(Clone, Copy, Debug)]
pub struct ConeSector {
    pub theta_lo: f64,
    pub theta_hi: f64,
}

impl ConeSector {
    pub fn new(theta_lo: f64, theta_hi: f64) -> Result<Self> {
        let w = theta_hi - theta_lo;
        if !(0.0..=2.0 * PI + 1e-12).contains(&w) {
            return Err(Error::Validation(format!("sector width {w} outside [0, 2π]")));
        }
        Ok(Self { theta_lo, theta_hi })
    }

    pub fn width(&self) -> f64 {
        self.theta_hi - self.theta_lo
    }

    /// Closed membership with an angular slack.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        if p[0] == 0.0 && p[1] == 0.0 {
            return true;
        }
        let a = p[1].atan2(p[0]);
        for shift in [-2.0 * PI, 0.0, 2.0 * PI] {
            let t = a + shift;
            if t >= self.theta_lo - tol && t <= self.theta_hi + tol {
                return true;
            }
        }
        false
    }
}

/// Corner/flat taxonomy of a boundary point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointClass {
    Corner,
    Flat,
}

/// Outcome of a supporting-direction check.
#[derive(Clone, Copy, Debug)]
pub enum SupportOutcome {
    Ok,
    /// A probe point where η·(x - x0) < -γ(|x - x0|) by more than the slack.
    Violation([f64; 2]),
}

impl SupportOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, SupportOutcome::Ok)
    }
}

const SUPPORT_SLACK: f64 = 1e-12;

/// Checks η·(x - x0) ≥ -γ(|x - x0|) over sampled boundary and interior
/// points of Ω̄ ∩ B(x0, R0).
///
/// Boundary samples use geometric ladders on both sides of the anchor (cusp
/// witnesses live at small scales); interior samples use a polar grid.
pub fn support_check(
    domain: &GraphDomain,
    x0: [f64; 2],
    eta: &SupportDirection,
    gamma: &Modulus,
    samples: usize,
) -> Result<SupportOutcome> {
    if samples < 16 {
        return Err(Error::Validation(format!("samples must be >= 16, got {samples}")));
    }
    if !domain.on_boundary(x0) {
        return Err(Error::Domain(format!(
            "x0 = ({}, {}) is off the boundary (|y - ν(x)| > {BOUNDARY_TOL})",
            x0[0], x0[1]
        )));
    }
    let radius = gamma.r0.min(2.0 * domain.half_width);
    let e = eta.eta;
    let deficit = |p: [f64; 2]| -> f64 {
        let dx = [p[0] - x0[0], p[1] - x0[1]];
        let dist = (dx[0] * dx[0] + dx[1] * dx[1]).sqrt();
        e[0] * dx[0] + e[1] * dx[1] + gamma.eval(dist)
    };
    let mut worst: Option<([f64; 2], f64)> = None;
    let mut consider = |p: [f64; 2], val: f64| {
        if val < -SUPPORT_SLACK && worst.map_or(true, |(_, w)| val < w) {
            worst = Some((p, val));
        }
    };

    // Boundary ladder: offsets decaying geometrically from radius to ~1e-12.
    let decay = (1e-12f64 / radius).powf(1.0 / samples as f64);
    let mut t = radius;
    for _ in 0..samples {
        for sgn in [-1.0, 1.0] {
            let x = x0[0] + sgn * t;
            if x.abs() <= domain.half_width {
                let p = [x, domain.nu(x)];
                let dx = [p[0] - x0[0], p[1] - x0[1]];
                if dx[0] * dx[0] + dx[1] * dx[1] <= radius * radius {
                    consider(p, deficit(p));
                }
            }
        }
        t *= decay;
    }

    // Interior polar grid (clipped to Ω̄ ∩ B(x0, radius)).
    let nr = samples.min(64);
    let na = samples.min(128);
    for i in 0..nr {
        let r = radius * (1e-6f64).powf(i as f64 / (nr - 1).max(1) as f64);
        for j in 0..na {
            let th = 2.0 * PI * j as f64 / na as f64;
            let p = [x0[0] + r * th.cos(), x0[1] + r * th.sin()];
            if p[0].abs() <= domain.half_width && p[1] >= domain.nu(p[0]) {
                consider(p, deficit(p));
            }
        }
    }

    Ok(match worst {
        Some((p, _)) => SupportOutcome::Violation(p),
        None => SupportOutcome::Ok,
    })
}

/// Searches for a supporting direction by a uniform angle sweep followed by
/// bisection refinement of the passing arc.  Returns `None` when no angle
/// passes.
pub fn find_support_direction(
    domain: &GraphDomain,
    x0: [f64; 2],
    gamma: &Modulus,
) -> Result<Option<SupportDirection>> {
    find_support_direction_with(domain, x0, gamma, 1024, 40, 128)
}

pub fn find_support_direction_with(
    domain: &GraphDomain,
    x0: [f64; 2],
    gamma: &Modulus,
    angles: usize,
    bisections: usize,
    samples: usize,
) -> Result<Option<SupportDirection>> {
    let passes = |theta: f64| -> Result<bool> {
        let eta = SupportDirection::from_angle(theta, x0);
        Ok(support_check(domain, x0, &eta, gamma, samples)?.is_ok())
    };
    let mut mark = vec![false; angles];
    for (k, m) in mark.iter_mut().enumerate() {
        *m = passes(2.0 * PI * k as f64 / angles as f64)?;
    }
    if !mark.iter().any(|&m| m) {
        return Ok(None);
    }
    if mark.iter().all(|&m| m) {
        // Every direction supports (only possible for γ large at all scales);
        // pick the upward normal by convention.
        return Ok(Some(SupportDirection::from_angle(PI / 2.0, x0)));
    }
    // Largest contiguous passing arc, wrap-aware.
    let start = (0..angles).find(|&k| !mark[k] && mark[(k + 1) % angles]).unwrap();
    let mut best = (0usize, 0usize); // (arc start index, length)
    let mut k = (start + 1) % angles;
    while k != start {
        if mark[k] {
            let arc_start = k;
            let mut len = 0;
            while mark[k] {
                len += 1;
                k = (k + 1) % angles;
                if k == arc_start {
                    break;
                }
            }
            if len > best.1 {
                best = (arc_start, len);
            }
        } else {
            k = (k + 1) % angles;
        }
    }
    let step = 2.0 * PI / angles as f64;
    let mut lo = best.0 as f64 * step; // first passing angle
    let mut hi = (best.0 + best.1 - 1) as f64 * step; // last passing angle
    // Refine both endpoints against their failing neighbors.
    let mut fail_lo = lo - step;
    for _ in 0..bisections {
        let mid = 0.5 * (fail_lo + lo);
        if passes(mid)? {
            lo = mid;
        } else {
            fail_lo = mid;
        }
    }
    let mut fail_hi = hi + step;
    for _ in 0..bisections {
        let mid = 0.5 * (hi + fail_hi);
        if passes(mid)? {
            hi = mid;
        } else {
            fail_hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let eta = SupportDirection::from_angle(theta, x0);
    if support_check(domain, x0, &eta, gamma, samples.max(256))?.is_ok() {
        Ok(Some(eta))
    } else {
        Ok(None)
    }
}

/// Blow-up sector with the extrapolation residual of its slope estimates.
#[derive(Clone, Copy, Debug)]
pub struct BlowUpCone {
    pub sector: ConeSector,
    pub residual: f64,
}

/// Estimates the blow-up sector at `x0` from one-sided difference quotients
/// of ν over the given scale sequence.
///
/// Slopes are extrapolated polynomially in v = 1/ln(e/t), which resolves the
/// logarithmic families exactly (their slopes are polynomials in v) and is
/// harmless for power-law slopes.
pub fn blow_up_cone(domain: &GraphDomain, x0: [f64; 2], scales: &[f64]) -> Result<BlowUpCone> {
    if !domain.on_boundary(x0) {
        return Err(Error::Domain("x0 is off the boundary".into()));
    }
    if scales.len() < 4 {
        return Err(Error::Domain("need at least 4 scales".into()));
    }
    for w in scales.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Domain("scales must be strictly decreasing".into()));
        }
    }
    if *scales.last().unwrap() >= 1e-6 {
        return Err(Error::Domain("scales must decrease below 1e-6".into()));
    }
    let (m_plus, res_p) = one_sided_slope(domain, x0, scales, 1.0)?;
    let (m_minus, res_m) = one_sided_slope(domain, x0, scales, -1.0)?;
    let theta_lo = m_plus.atan();
    let theta_hi = PI + m_minus.atan();
    Ok(BlowUpCone { sector: ConeSector::new(theta_lo, theta_hi)?, residual: res_p.max(res_m) })
}

/// One-sided slope limit.  Two polynomial extrapolations are run — in the
/// scale t itself (exact for power-type slopes) and in v = 1/ln(e/t) (exact
/// for the logarithmic families) — and the self-consistent one wins.
fn one_sided_slope(
    domain: &GraphDomain,
    x0: [f64; 2],
    scales: &[f64],
    side: f64,
) -> Result<(f64, f64)> {
    let slopes: Vec<f64> = scales
        .iter()
        .map(|&t| (domain.nu(x0[0] + side * t) - x0[1]) / (side * t))
        .collect();
    let take = slopes.len().min(8);
    let extrapolate = |xs: &[f64]| -> (f64, f64) {
        let pts: Vec<(f64, f64)> =
            xs.iter().zip(&slopes).map(|(&x, &s)| (x, s)).collect();
        let tail = &pts[pts.len() - take..];
        let full = neville_at_zero(tail);
        let shorter = neville_at_zero(&tail[..take - 1]);
        (full, (full - shorter).abs())
    };
    let in_t: Vec<f64> = scales.to_vec();
    let in_v: Vec<f64> = scales.iter().map(|&t| 1.0 / (1.0 - t.ln())).collect();
    let (val_t, res_t) = extrapolate(&in_t);
    let (val_v, res_v) = extrapolate(&in_v);
    let (mut value, mut residual) = if res_t <= res_v { (val_t, res_t) } else { (val_v, res_v) };
    let raw_change = (slopes[slopes.len() - 1] - slopes[slopes.len() - 2]).abs();
    residual = residual.max(1e-6 * raw_change);
    if !value.is_finite() || residual > 0.05 {
        return Err(Error::Inconclusive(format!(
            "slope extrapolation residual {residual:.3e} too large on side {side}"
        )));
    }
    if value.abs() < residual {
        value = value.max(-residual).min(residual);
    }
    Ok((value, residual))
}

pub const FLAT_ANGLE_TOL: f64 = 1e-4;

/// Default dyadic scale ladder for blow-up estimation.
pub fn default_scales() -> Vec<f64> {
    (4..=28).map(|k| 2f64.powi(-k)).collect()
}

/// Flat iff the blow-up sector is a half-plane to within the angular
/// tolerance; otherwise corner.
pub fn classify_point(domain: &GraphDomain, x0: [f64; 2]) -> Result<PointClass> {
    let cone = blow_up_cone(domain, x0, &default_scales())?;
    if (cone.sector.width() - PI).abs() <= FLAT_ANGLE_TOL {
        Ok(PointClass::Flat)
    } else {
        Ok(PointClass::Corner)
    }
}

/// Randomized check of the cone axioms: scale invariance (t ∈ {1/2, 2}) and
/// additivity of membership.
pub fn cone_check(sector: &ConeSector, probes: usize) -> Result<bool> {
    cone_check_seeded(sector, probes, 1234567)
}

pub fn cone_check_seeded(sector: &ConeSector, probes: usize, seed: u64) -> Result<bool> {
    if probes < 100 {
        return Err(Error::Validation(format!("probes must be >= 100, got {probes}")));
    }
    let mut rng = SplitMix64::new(seed);
    let tol = 1e-12;
    let sample = |rng: &mut SplitMix64| -> [f64; 2] {
        let th = rng.range(sector.theta_lo, sector.theta_hi);
        let r = (rng.range(-1.0, 1.0) * std::f64::consts::LN_10).exp();
        [r * th.cos(), r * th.sin()]
    };
    for _ in 0..probes {
        let x = sample(&mut rng);
        for t in [0.5, 2.0] {
            if !sector.contains([t * x[0], t * x[1]], tol) {
                return Ok(false);
            }
        }
        let y = sample(&mut rng);
        let s = [x[0] + y[0], x[1] + y[1]];
        if !sector.contains(s, tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Finds a dyadic localization radius r0 such that sampled points of
/// Ω̄ ∩ B_r0 satisfy y ≥ -γ(2|x|), the graph-over-tangent-plane form of the
/// supporting inequality.  Returns `None` when no radius down to 2^-20 works.
pub fn localization_radius(domain: &GraphDomain, gamma: &Modulus, samples: usize) -> Option<f64> {
    'radii: for k in 1..=20 {
        let r0 = 2f64.powi(-k).min(domain.half_width);
        for i in 0..samples {
            let x = -r0 + 2.0 * r0 * i as f64 / (samples - 1).max(1) as f64;
            let y = domain.nu(x);
            if x * x + y * y <= r0 * r0 && y < -gamma.eval(2.0 * x.abs()) - 1e-12 {
                continue 'radii;
            }
        }
        return Some(r0);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wedge() -> GraphDomain {
        GraphDomain::new(BoundaryGraph::Wedge).unwrap()
    }

    fn e2(anchor: [f64; 2]) -> SupportDirection {
        SupportDirection::new([0.0, 1.0], anchor).unwrap()
    }

    #[test]
    fn half_plane_supports_upward() {
        let d = GraphDomain::new(BoundaryGraph::Flat).unwrap();
        let out = support_check(&d, [0.0, 0.0], &e2([0.0, 0.0]), &Modulus::zero(), 64).unwrap();
        assert!(out.is_ok());
    }

    #[test]
    fn wedge_supports_upward() {
        let out = support_check(&wedge(), [0.0, 0.0], &e2([0.0, 0.0]), &Modulus::zero(), 64).unwrap();
        assert!(out.is_ok());
    }

    #[test]
    fn concave_wedge_violates_for_log_modulus() {
        let d = GraphDomain::new(BoundaryGraph::NegWedge).unwrap();
        let g = Modulus::log_power(1.0, 2.0).unwrap();
        let out = support_check(&d, [0.0, 0.0], &e2([0.0, 0.0]), &g, 64).unwrap();
        match out {
            SupportOutcome::Violation(p) => {
                // Witness on a flank: y = -|x| beats -γ(√2 |x|) once γ(√2 t) < t.
                assert!(p[1] < 0.0, "witness {p:?}");
            }
            SupportOutcome::Ok => panic!("expected a violation"),
        }
    }

    #[test]
    fn off_boundary_anchor_rejected() {
        let err = support_check(&wedge(), [0.0, 0.5], &e2([0.0, 0.5]), &Modulus::zero(), 64);
        assert!(err.is_err());
    }

    #[test]
    fn support_direction_for_parabola_is_vertical() {
        let d = GraphDomain::new(BoundaryGraph::Parabola).unwrap();
        let g = Modulus::log_power(1.0, 2.0).unwrap();
        let eta = find_support_direction_with(&d, [0.0, 0.0], &g, 256, 30, 64)
            .unwrap()
            .expect("parabola must have a supporting direction");
        assert!((eta.eta[0].abs()) < 0.15, "η = {:?}", eta.eta);
        assert!(eta.eta[1] > 0.9);
        let recheck = support_check(&d, [0.0, 0.0], &eta, &g, 256).unwrap();
        assert!(recheck.is_ok());
    }

    #[test]
    fn support_direction_for_wedge_in_normal_cone() {
        let g = Modulus::zero();
        let eta = find_support_direction_with(&wedge(), [0.0, 0.0], &g, 256, 30, 64)
            .unwrap()
            .expect("convex wedge has a normal cone");
        let theta = eta.eta[1].atan2(eta.eta[0]);
        assert!(theta > PI / 4.0 - 0.05 && theta < 3.0 * PI / 4.0 + 0.05, "θ = {theta}");
        assert!(support_check(&wedge(), [0.0, 0.0], &eta, &g, 256).unwrap().is_ok());
    }

    #[test]
    fn no_support_direction_on_concave_wedge() {
        let d = GraphDomain::new(BoundaryGraph::NegWedge).unwrap();
        for g in [Modulus::log_power(1.0, 2.0).unwrap(), Modulus::power(1.0, 1.5).unwrap()] {
            let eta = find_support_direction_with(&d, [0.0, 0.0], &g, 256, 30, 64).unwrap();
            assert!(eta.is_none(), "unexpected support direction for {:?}", g.kind);
        }
    }

    #[test]
    fn wedge_sector_is_quarter_plane() {
        let cone = blow_up_cone(&wedge(), [0.0, 0.0], &default_scales()).unwrap();
        assert!((cone.sector.theta_lo - PI / 4.0).abs() < 1e-6);
        assert!((cone.sector.theta_hi - 3.0 * PI / 4.0).abs() < 1e-6);
    }

    #[test]
    fn parabola_sector_is_half_plane() {
        let d = GraphDomain::new(BoundaryGraph::Parabola).unwrap();
        let cone = blow_up_cone(&d, [0.0, 0.0], &default_scales()).unwrap();
        assert!(cone.sector.theta_lo.abs() < 1e-8);
        assert!((cone.sector.theta_hi - PI).abs() < 1e-8);
    }

    #[test]
    fn log_cusp_sector_is_half_plane() {
        // Slopes decay like 1/ln(e/t); the extrapolation must still land on 0.
        let d = GraphDomain::new(BoundaryGraph::LogCusp { q: 1.0 }).unwrap();
        let cone = blow_up_cone(&d, [0.0, 0.0], &default_scales()).unwrap();
        assert!(cone.sector.theta_lo.abs() < 1e-5, "θ_lo = {}", cone.sector.theta_lo);
        assert!((cone.sector.theta_hi - PI).abs() < 1e-5);
    }

    #[test]
    fn classify_fixture_points() {
        assert_eq!(classify_point(&wedge(), [0.0, 0.0]).unwrap(), PointClass::Corner);
        let parab = GraphDomain::new(BoundaryGraph::Parabola).unwrap();
        assert_eq!(classify_point(&parab, [0.0, 0.0]).unwrap(), PointClass::Flat);
        let pos_cusp = GraphDomain::new(BoundaryGraph::PosLogCusp { q: 1.0 }).unwrap();
        assert_eq!(classify_point(&pos_cusp, [0.0, 0.0]).unwrap(), PointClass::Flat);
    }

    #[test]
    fn diverging_slopes_are_inconclusive() {
        // The power cusp's one-sided slopes -t^(α-1) diverge, so no sector
        // estimate exists and the classification must refuse.
        let d = GraphDomain::new(BoundaryGraph::PowerCusp { alpha: 0.5 }).unwrap();
        let err = blow_up_cone(&d, [0.0, 0.0], &default_scales());
        assert!(matches!(err, Err(Error::Inconclusive(_))), "{err:?}");
    }

    #[test]
    fn classify_smooth_point_away_from_tip() {
        // At x=1/4 the wedge boundary is smooth: a tilted half-plane, flat.
        let a = 0.25;
        assert_eq!(classify_point(&wedge(), [a, a]).unwrap(), PointClass::Flat);
    }

    #[test]
    fn cone_axioms_on_sectors() {
        let quarter = ConeSector::new(PI / 4.0, 3.0 * PI / 4.0).unwrap();
        assert!(cone_check(&quarter, 500).unwrap());
        let half = ConeSector::new(0.0, PI).unwrap();
        assert!(cone_check(&half, 500).unwrap());
        let wide = ConeSector::new(0.0, 1.5 * PI).unwrap();
        assert!(!cone_check(&wide, 500).unwrap(), "additivity must fail past a half-plane");
    }

    #[test]
    fn localization_radius_exists_for_matched_pairs() {
        let cases: Vec<(GraphDomain, Modulus)> = vec![
            (wedge(), Modulus::zero()),
            (
                GraphDomain::new(BoundaryGraph::LogCusp { q: 2.0 }).unwrap(),
                Modulus::log_power(1.0, 2.0).unwrap(),
            ),
            (GraphDomain::new(BoundaryGraph::Parabola).unwrap(), Modulus::power(1.0, 2.0).unwrap()),
        ];
        for (d, g) in &cases {
            let r0 = localization_radius(d, g, 2001);
            assert!(r0.is_some(), "no localization radius for {:?}", d.graph);
        }
    }
}
