//! Pearson correlation, used directly for cross-benchmark scatter reports
//! and as the rank-correlation backend.

use crate::{math, Error};

/// Pearson r and r^2. Requires at least 3 points and nonzero variance on
/// both sides; r is clamped to [-1, 1] against rounding.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), Error> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.len() < 3 {
        return Err(Error::TooFewValues { needed: 3, got: xs.len() });
    }
    match pearson_r_unchecked(xs, ys) {
        Some(r) => Ok((r, r * r)),
        None => Err(Error::ZeroVariance),
    }
}

/// Centered-sum Pearson r without length policing; None when either side
/// has zero variance. Callers own the length contract.
pub(crate) fn pearson_r_unchecked(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / math::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}
