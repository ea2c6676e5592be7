//! Cut-cell finite differences for -a^{ij} D_ij u = f with Dirichlet data
//! on 2D domains with curved or cusped boundaries.
//!
//! Grid arms that hit the boundary are shortened to the intersection point
//! (boundary fractions found by bisection), which keeps the system an
//! M-matrix; cross terms are split onto diagonal grid lines under a
//! diagonal-dominance condition so monotonicity survives.  The solver is a
//! deterministic SOR sweep with a residual target in the max norm.

mod grid;
mod probe;
mod sandwich;
mod sor;

pub use grid::{discretize, BoundaryValues, DiscreteProblem, Rect};
pub use probe::{
    classify_quotients, probe_quotient, sharpness_experiment, ProbeConfig, ProbeReport,
    ProbeVerdict, SharpnessOutcome, SharpnessRow,
};
pub use sandwich::{
    coupled_branch_oracle, coupled_sandwich_on_half_disk, half_disk_slab_area,
    normalization_scale, sandwich_check, solve_telescoped, CompositeField, SandwichRow,
    WindowSpec,
};
pub use sor::{solve, SolutionField};

use crate::domain::GraphDomain;

/// Solvable planar regions.  The grid rectangle provides the outer Dirichlet
/// frame; the region carves the interior.
#[derive(Clone, Debug)]
pub enum Region {
    /// Everything inside the grid rectangle.
    All,
    Disk { radius: f64 },
    UpperHalfDisk { radius: f64 },
    /// {y > ν(x)}: the domain above a boundary graph.
    AboveGraph(GraphDomain),
}

impl Region {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Region::All => true,
            Region::Disk { radius } => x * x + y * y < radius * radius,
            Region::UpperHalfDisk { radius } => y > 0.0 && x * x + y * y < radius * radius,
            Region::AboveGraph(d) => y > d.nu(x),
        }
    }

    /// Bounding box used to clip window rectangles.
    pub fn bbox(&self) -> Rect {
        match self {
            Region::All => Rect { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 },
            Region::Disk { radius } => {
                Rect { x0: -radius, x1: *radius, y0: -radius, y1: *radius }
            }
            Region::UpperHalfDisk { radius } => {
                Rect { x0: -radius, x1: *radius, y0: 0.0, y1: *radius }
            }
            Region::AboveGraph(d) => {
                let hw = d.half_width;
                let mut lo: f64 = 0.0;
                for k in 0..=256 {
                    lo = lo.min(d.nu(-hw + 2.0 * hw * k as f64 / 256.0));
                }
                Rect { x0: -hw, x1: hw, y0: lo.max(-hw), y1: hw }
            }
        }
    }
}
