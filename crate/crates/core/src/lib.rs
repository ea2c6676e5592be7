//! Numerical toolkit for boundary regularity on γ-convex planar domains.
//!
//! A domain is γ-convex when every boundary point admits a direction η whose
//! supporting defect is controlled by a nondecreasing modulus γ:
//! η·(x - x0) ≥ -γ(|x - x0|) near x0.  Whether solutions of uniformly
//! elliptic Dirichlet problems are differentiable at the boundary of such a
//! domain is decided by the Dini integral ∫ γ(r)/r² dr — finite means
//! differentiable everywhere on the boundary, divergent admits blow-up of
//! the differential quotient.  This crate makes each ingredient of that
//! dichotomy computable and testable at desk scale:
//!
//! * [`modulus`] — modulus families and the Dini integral classifier;
//! * [`domain`] — supporting directions, blow-up cones, corner/flat taxonomy;
//! * [`barriers`] — the explicit barrier pair with certified inequalities;
//! * [`iteration`] — the corner and flat dyadic recurrences, their bound
//!   evaluators and convergence claims;
//! * [`solver`] — a cut-cell finite-difference solver with boundary probes,
//!   the coupled sandwich verification and the sharpness experiment.

pub mod barriers;
pub mod coeffs;
pub mod domain;
pub mod error;
pub mod extrapolate;
pub mod iteration;
pub mod modulus;
pub mod quad;
pub mod rng;
pub mod solver;

pub use coeffs::EllipticCoefficients;
pub use error::{Error, Result};
pub use modulus::{dini_classify, rescale_modulus, DiniReport, DiniVerdict, Modulus, ModulusKind};
