use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A modulus failed its structural invariants (negative values,
    /// non-monotone samples, bad parameters).
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),

    /// A geometric input was outside its contract (point off the boundary,
    /// empty scale sequence, degenerate sector).
    #[error("domain error: {0}")]
    Domain(String),

    /// A limit or classification could not be resolved at the requested
    /// tolerance.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    /// Parameter validation failure.
    #[error("validation error: {0}")]
    Validation(String),

    /// An iteration blew past its guard, which signals non-summable input
    /// profiles rather than a numerical fault.
    #[error("divergent iteration: {0}")]
    Divergence(String),

    /// The linear solver stopped without reaching the residual target.
    #[error("solver did not converge: residual {residual:.3e} after {iterations} sweeps")]
    NonConvergence { residual: f64, iterations: usize },

    /// A requested scale range is not resolvable on the given grid.
    #[error("range error: {0}")]
    Range(String),
}

pub type Result<T> = std::result::Result<T, Error>;
