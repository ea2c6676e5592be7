//! Uniformly elliptic coefficient fields λI ≤ A(x) ≤ (1/λ)I.

use crate::error::{Error, Result};
use std::sync::Arc;

type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A symmetric 2x2 coefficient field with its ellipticity constant.
#[derive(Clone)]
pub struct EllipticCoefficients {
    a11: Field,
    a12: Field,
    a22: Field,
    pub lambda: f64,
    pub has_cross_term: bool,
}

impl std::fmt::Debug for EllipticCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "EllipticCoefficients(lambda={}, cross={})", self.lambda, self.has_cross_term)
    }
}

impl EllipticCoefficients {
    pub fn identity() -> Self {
        Self::constant(1.0, 0.0, 1.0, 1.0).unwrap()
    }

    /// Constant coefficients; `lambda` must bracket the eigenvalues.
    pub fn constant(a11: f64, a12: f64, a22: f64, lambda: f64) -> Result<Self> {
        let c = Self {
            a11: Arc::new(move |_, _| a11),
            a12: Arc::new(move |_, _| a12),
            a22: Arc::new(move |_, _| a22),
            lambda,
            has_cross_term: a12 != 0.0,
        };
        c.check_point(0.0, 0.0)?;
        Ok(c)
    }

    pub fn variable(
        a11: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        a12: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        a22: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        lambda: f64,
        has_cross_term: bool,
    ) -> Self {
        Self {
            a11: Arc::new(a11),
            a12: Arc::new(a12),
            a22: Arc::new(a22),
            lambda,
            has_cross_term,
        }
    }

    pub fn at(&self, x: f64, y: f64) -> [f64; 3] {
        [(self.a11)(x, y), (self.a12)(x, y), (self.a22)(x, y)]
    }

    /// Verifies λI ≤ A ≤ (1/λ)I at one point via the 2x2 eigenvalue formula.
    pub fn check_point(&self, x: f64, y: f64) -> Result<()> {
        let [a, b, c] = self.at(x, y);
        let mean = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        let (lo, hi) = (mean - rad, mean + rad);
        let tol = 1e-12 * (1.0 + hi.abs());
        if lo < self.lambda - tol || hi > 1.0 / self.lambda + tol {
            return Err(Error::Validation(format!(
                "ellipticity violated at ({x}, {y}): eigenvalues [{lo}, {hi}] outside [{}, {}]",
                self.lambda,
                1.0 / self.lambda
            )));
        }
        Ok(())
    }
}
