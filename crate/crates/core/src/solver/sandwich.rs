//! Two-sided sandwich verification coupling the flat recurrence to the
//! discrete solution.
//!
//! The solution is normalized so ‖u‖_∞ ≤ 1 and ‖f‖_L² ≤ 1 on the unit
//! window, the flat recurrence is driven by the *coupled* branch rule
//! (compare u(δ^{m+1} e₂) against the mean slope at scale δ^{m+1}), and the
//! resulting bounds k_m y - b_m ≤ u ≤ K_m y + B_m are then checked at every
//! grid node of Q[δᵐ] ∩ Ω, up to a discretization slack.

use super::grid::Rect;
use super::probe::ProbeConfig;
use super::sor::SolutionField;
use super::Region;
use crate::coeffs::EllipticCoefficients;
use crate::error::{Error, Result};
use crate::iteration::{Branch, BranchOracle, FlatRun};
use std::sync::Arc;

/// One telescoping refinement level: a square window of the given half-width
/// around the origin solved at spacing `h`.
#[derive(Clone, Copy, Debug)]
pub struct WindowSpec {
    pub half: f64,
    pub h: f64,
}

/// Coarse-to-fine stack of window solutions with a common scalar applied to
/// every nodal value (the normalization factor).
#[derive(Clone, Debug)]
pub struct CompositeField {
    pub levels: Vec<SolutionField>,
    pub scale: f64,
}

impl CompositeField {
    /// Value at a point from the finest level whose rectangle contains it.
    pub fn value(&self, x: f64, y: f64, region: &Region) -> Option<f64> {
        for field in self.levels.iter().rev() {
            if field.rect.contains(x, y) {
                if let Some(v) = field.value_near(x, y, region) {
                    return Some(self.scale * v);
                }
            }
        }
        None
    }

    /// Finest level whose rectangle covers the square Q[half].
    pub fn finest_covering(&self, half: f64) -> Option<&SolutionField> {
        self.levels
            .iter()
            .rev()
            .find(|f| f.rect.x0 <= -half && f.rect.x1 >= half && f.rect.y1 >= half)
    }
}

/// Solves the telescoping stack: the first window is the base problem with
/// homogeneous data; each finer window takes its frame data from the level
/// above.  Windows must be ordered coarse to fine.
pub fn solve_telescoped(
    region: &Region,
    coeffs: &EllipticCoefficients,
    f: &dyn Fn(f64, f64) -> f64,
    windows: &[WindowSpec],
    tol: f64,
) -> Result<CompositeField> {
    if windows.is_empty() {
        return Err(Error::Validation("need at least one window".into()));
    }
    let bbox = region.bbox();
    let mut levels: Vec<SolutionField> = Vec::with_capacity(windows.len());
    for spec in windows {
        let snap = |v: f64, up: bool| {
            if up {
                (v / spec.h).ceil() * spec.h
            } else {
                (v / spec.h).floor() * spec.h
            }
        };
        let rect = Rect {
            x0: snap(bbox.x0.max(-spec.half), true),
            x1: snap(bbox.x1.min(spec.half), false),
            y0: snap(bbox.y0.max(-spec.half), true),
            y1: snap(bbox.y1.min(spec.half), false),
        };
        let outer = levels.last();
        let bc = |x: f64, y: f64, on_frame: bool| -> f64 {
            if !on_frame {
                return 0.0;
            }
            match outer {
                Some(field) => field.value_near(x, y, region).unwrap_or(0.0),
                None => 0.0,
            }
        };
        let problem = super::grid::discretize(region, rect, coeffs, f, &bc, spec.h)?;
        levels.push(super::sor::solve(&problem, tol)?);
    }
    Ok(CompositeField { levels, scale: 1.0 })
}

/// Normalization factor c ≤ 1 such that c·‖u‖_∞ ≤ 1 on Q1 ∩ Ω and
/// c·‖f‖_L²(Q1 ∩ Ω) ≤ 1.  The sup norm comes from the base grid; the f-norm
/// is integrated on the grid unless the caller supplies an exact value
/// (needed when the same norm seeds a profile that must stay ≤ 1).
pub fn normalization_scale(
    base: &SolutionField,
    region: &Region,
    f: &dyn Fn(f64, f64) -> f64,
    exact_fnorm: Option<f64>,
) -> f64 {
    let mut umax = 0.0f64;
    let mut f_sq = 0.0f64;
    for j in 0..=base.ny {
        for i in 0..=base.nx {
            let (x, y) = base.node_pos(i, j);
            if x.abs() > 1.0 || y.abs() > 1.0 || !region.contains(x, y) {
                continue;
            }
            if let Some(v) = base.value_at_node(i, j) {
                umax = umax.max(v.abs());
            }
            f_sq += f(x, y).powi(2) * base.h * base.h;
        }
    }
    let fnorm = exact_fnorm.unwrap_or(f_sq.sqrt());
    (1.0f64).min(1.0 / umax.max(1e-300)).min(1.0 / fnorm.max(1e-300))
}

/// The coupled branch rule: branch A iff u(δ^(m+1) e₂) ≥ ½(K_m + k_m)·δ^(m+1).
pub fn coupled_branch_oracle(
    composite: Arc<CompositeField>,
    region: Region,
    delta: f64,
) -> BranchOracle {
    BranchOracle::Coupled(Arc::new(move |m, state| {
        let t = delta.powi(m as i32 + 1);
        let u = composite.value(0.0, t, &region).unwrap_or(0.0);
        if u >= 0.5 * (state.big_k + state.k) * t {
            Branch::A
        } else {
            Branch::B
        }
    }))
}

/// Per-scale sandwich outcome.  Margins are the raw worst-case slacks of the
/// two inequalities over the grid nodes in Q[δᵐ] ∩ Ω; `slack` is the
/// discretization allowance C·h/δᵐ a margin may dip into before failing.
#[derive(Clone, Copy, Debug)]
pub struct SandwichRow {
    pub m: usize,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub slack: f64,
    pub pass: bool,
    pub nodes_checked: usize,
}

/// Checks k_m y - b_m ≤ u ≤ K_m y + B_m for m = 0..=m_max at every node of
/// the finest window covering Q[δᵐ].  Errors when δ^m_max is not resolvable
/// (δ^m_max < 8h on the covering grid).
pub fn sandwich_check(
    composite: &CompositeField,
    region: &Region,
    run: &FlatRun,
    delta: f64,
    m_max: usize,
    slack_c: f64,
) -> Result<Vec<SandwichRow>> {
    if m_max >= run.states.len() {
        return Err(Error::Range(format!(
            "run provides {} steps, requested m_max = {m_max}",
            run.states.len() - 1
        )));
    }
    let deepest = delta.powi(m_max as i32);
    let finest = composite
        .finest_covering(deepest)
        .ok_or_else(|| Error::Range("no window covers the deepest scale".into()))?;
    if deepest < 8.0 * finest.h {
        return Err(Error::Range(format!(
            "δ^{m_max} = {deepest:.3e} finer than 8h = {:.3e}: grid cannot resolve the check",
            8.0 * finest.h
        )));
    }
    let mut rows = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        let r = delta.powi(m as i32);
        let state = &run.states[m];
        let field = composite.finest_covering(r).unwrap();
        let mut lower = f64::INFINITY;
        let mut upper = f64::INFINITY;
        let mut count = 0usize;
        for j in 0..=field.ny {
            for i in 0..=field.nx {
                let (x, y) = field.node_pos(i, j);
                if x.abs() > r || y.abs() > r || !region.contains(x, y) {
                    continue;
                }
                if let Some(raw) = field.value_at_node(i, j) {
                    let u = composite.scale * raw;
                    lower = lower.min(u - (state.k * y - state.b));
                    upper = upper.min(state.big_k * y + state.big_b - u);
                    count += 1;
                }
            }
        }
        let slack = slack_c * field.h / r;
        rows.push(SandwichRow {
            m,
            lower_margin: lower,
            upper_margin: upper,
            slack,
            pass: lower > -slack && upper > -slack,
            nodes_checked: count,
        });
    }
    Ok(rows)
}

/// Exact area of Q[r] ∩ upper half-disk (unit radius): 2r² while the square
/// sits inside the disk, then the circular-segment correction.
pub fn half_disk_slab_area(r: f64) -> f64 {
    let r = r.clamp(0.0, 1.0);
    if 2.0 * r * r <= 1.0 {
        return 2.0 * r * r;
    }
    let xs = (1.0 - r * r).max(0.0).sqrt();
    let cap = |x: f64| 0.5 * (x * (1.0 - x * x).sqrt() + x.asin());
    2.0 * (r * xs + cap(r) - cap(xs))
}

/// Convenience driver assembling everything criterion-style: builds the
/// telescoped stack, normalizes, runs the coupled flat recurrence and checks
/// the sandwich.  Returns the rows, the run and the composite.
pub fn coupled_sandwich_on_half_disk(
    windows: &[WindowSpec],
    delta: f64,
    m_max: usize,
    cfg: &ProbeConfig,
) -> Result<(Vec<SandwichRow>, FlatRun, CompositeField)> {
    use crate::iteration::{flat_run, IterationInputs, Profile};
    let region = Region::UpperHalfDisk { radius: 1.0 };
    let coeffs = EllipticCoefficients::identity();
    let f = |_: f64, _: f64| 1.0;
    let mut composite = solve_telescoped(&region, &coeffs, &f, windows, cfg.solver_tol)?;
    let exact_fnorm = half_disk_slab_area(1.0).sqrt();
    let scale = normalization_scale(&composite.levels[0], &region, &f, Some(exact_fnorm));
    composite.scale = scale;

    let mut inputs = IterationInputs::defaults(2, 1.0)?;
    inputs.delta = delta;
    // ‖f‖_L²(Ω_r) for the normalized constant right-hand side.
    inputs.f_profile = Profile::from_density(move |r| scale * half_disk_slab_area(r).sqrt());
    inputs.sigma_profile = Profile::zero();
    inputs.d_profile = Some(Profile::zero());

    let composite = Arc::new(composite);
    let mut oracle = coupled_branch_oracle(composite.clone(), region.clone(), delta);
    // The recurrence itself needs at least 50 steps; only m_max are checked.
    let run = flat_run(&inputs, &mut oracle, 50.max(m_max))?;
    let rows = sandwich_check(&composite, &region, &run, delta, m_max, 1.0)?;
    let composite = Arc::try_unwrap(composite).unwrap_or_else(|arc| (*arc).clone());
    Ok((rows, run, composite))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_disk_area_closed_form() {
        assert!((half_disk_slab_area(0.25) - 2.0 * 0.0625).abs() < 1e-15);
        assert!((half_disk_slab_area(1.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        // Monotone in r.
        let mut prev = 0.0;
        for k in 1..=100 {
            let a = half_disk_slab_area(k as f64 / 100.0);
            assert!(a >= prev);
            prev = a;
        }
    }

    #[test]
    fn sandwich_holds_on_coarse_half_disk() {
        let windows = [
            WindowSpec { half: 1.0, h: 2f64.powi(-6) },
            WindowSpec { half: 0.25, h: 2f64.powi(-8) },
        ];
        let cfg = ProbeConfig { solver_tol: 1e-10, ..ProbeConfig::default() };
        let (rows, run, _) = coupled_sandwich_on_half_disk(&windows, 0.25, 2, &cfg).unwrap();
        assert_eq!(rows.len(), 3);
        // m = 0 is the normalization row: 0 ≤ u ≤ 1.
        assert!(rows[0].lower_margin >= 0.0);
        assert!(rows[0].upper_margin >= 0.0);
        for row in &rows {
            assert!(row.pass, "row {row:?}");
            assert!(row.nodes_checked > 0);
        }
        assert_eq!(run.branches.len(), 50);
    }

    #[test]
    fn corrupted_solution_fails_upper_bound() {
        let windows = [WindowSpec { half: 1.0, h: 2f64.powi(-6) }];
        let region = Region::UpperHalfDisk { radius: 1.0 };
        let coeffs = EllipticCoefficients::identity();
        let f = |_: f64, _: f64| 1.0;
        let mut composite = solve_telescoped(&region, &coeffs, &f, &windows, 1e-10).unwrap();
        let fnorm = half_disk_slab_area(1.0).sqrt();
        composite.scale = normalization_scale(&composite.levels[0], &region, &f, Some(fnorm));
        composite.levels[0].corrupt_at(0.05, 0.05, 10.0);

        use crate::iteration::{flat_run, BranchOracle, IterationInputs, Profile};
        let mut inputs = IterationInputs::defaults(2, 1.0).unwrap();
        inputs.delta = 0.25;
        let s = composite.scale;
        inputs.f_profile = Profile::from_density(move |r| s * half_disk_slab_area(r).sqrt());
        let mut oracle = BranchOracle::Fixed(vec![Branch::A]);
        let run = flat_run(&inputs, &mut oracle, 50).unwrap();
        let rows = sandwich_check(&composite, &region, &run, 0.25, 1, 1.0).unwrap();
        assert!(!rows[1].pass, "corruption must break the upper inequality: {rows:?}");
        assert!(rows[1].upper_margin < 0.0);
    }

    #[test]
    fn coupled_branches_stable_under_refinement() {
        // Over the scales the grids can resolve (δ^(m+1) ≥ 8h on the covering
        // window), the branch trace may move by at most one position when
        // every grid halves.
        let cfg = ProbeConfig { solver_tol: 1e-10, ..ProbeConfig::default() };
        let coarse = [
            WindowSpec { half: 1.0, h: 2f64.powi(-6) },
            WindowSpec { half: 0.25, h: 2f64.powi(-8) },
            WindowSpec { half: 0.0625, h: 2f64.powi(-10) },
        ];
        let fine = [
            WindowSpec { half: 1.0, h: 2f64.powi(-7) },
            WindowSpec { half: 0.25, h: 2f64.powi(-9) },
            WindowSpec { half: 0.0625, h: 2f64.powi(-11) },
        ];
        let (_, run_c, _) = coupled_sandwich_on_half_disk(&coarse, 0.25, 3, &cfg).unwrap();
        let (_, run_f, _) = coupled_sandwich_on_half_disk(&fine, 0.25, 3, &cfg).unwrap();
        let resolved = 3usize; // δ^(m+1) ≥ 8·2^-10 holds for m ≤ 2
        let diffs = run_c.branches[..resolved]
            .iter()
            .zip(&run_f.branches[..resolved])
            .filter(|(a, b)| a != b)
            .count();
        assert!(diffs <= 1, "{diffs} branch flips under refinement");
    }

    #[test]
    fn range_guard_fires_when_grid_too_coarse() {
        let windows = [WindowSpec { half: 1.0, h: 2f64.powi(-6) }];
        let cfg = ProbeConfig { solver_tol: 1e-9, ..ProbeConfig::default() };
        // δ³ = 2^-12 < 8h = 2^-3: range error.
        let err = coupled_sandwich_on_half_disk(&windows, 0.0625, 3, &cfg);
        assert!(matches!(err, Err(Error::Range(_))), "{err:?}");
    }
}
