//! Sequence extrapolation helpers: Aitken Δ² acceleration and Neville
//! polynomial extrapolation to zero.

/// One Aitken Δ² step on the last three entries, if well conditioned.
pub fn aitken_last(seq: &[f64]) -> Option<f64> {
    if seq.len() < 3 {
        return None;
    }
    let n = seq.len();
    let (a, b, c) = (seq[n - 3], seq[n - 2], seq[n - 1]);
    let d2 = c - 2.0 * b + a;
    if d2.abs() < 1e-300 {
        return Some(c);
    }
    Some(c - (c - b) * (c - b) / d2)
}

/// Aitken-accelerated sequence: entry k accelerates `(seq[k], seq[k+1], seq[k+2])`.
pub fn aitken_table(seq: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 0..seq.len().saturating_sub(2) {
        let (a, b, c) = (seq[k], seq[k + 1], seq[k + 2]);
        let d2 = c - 2.0 * b + a;
        if d2.abs() < 1e-300 {
            out.push(c);
        } else {
            out.push(c - (c - b) * (c - b) / d2);
        }
    }
    out
}

/// Neville interpolation of the points `(x_i, y_i)` evaluated at `x = 0`.
///
/// Used to extrapolate slope sequences in a transformed variable that tends
/// to zero; callers pass only the last few (smallest-x) points.
pub fn neville_at_zero(points: &[(f64, f64)]) -> f64 {
    let n = points.len();
    assert!(n >= 1);
    let mut p: Vec<f64> = points.iter().map(|&(_, y)| y).collect();
    let xs: Vec<f64> = points.iter().map(|&(x, _)| x).collect();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = ((0.0 - xj) * p[i] - (0.0 - xi) * p[i + 1]) / (xi - xj);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aitken_geometric_exact() {
        // s_k = 3 + 2 * 0.5^k converges to 3; Aitken is exact on geometric tails.
        let seq: Vec<f64> = (0..8).map(|k| 3.0 + 2.0 * 0.5f64.powi(k)).collect();
        let a = aitken_last(&seq).unwrap();
        assert!((a - 3.0).abs() < 1e-12);
    }

    #[test]
    fn neville_polynomial_exact() {
        // y = 1 - 2x + 4x^2 sampled at a few points extrapolates to 1 at x=0.
        let pts: Vec<(f64, f64)> =
            [0.4, 0.3, 0.2, 0.1].iter().map(|&x| (x, 1.0 - 2.0 * x + 4.0 * x * x)).collect();
        let v = neville_at_zero(&pts);
        assert!((v - 1.0).abs() < 1e-12);
    }
}
