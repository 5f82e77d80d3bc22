//! Training-curve kernels: final windows, checkpoint averaging, smoothing,
//! and step-to-step variation.
//!
//! A curve is a slice of `(step, value)` pairs sorted by step ascending,
//! exactly as store queries return them.

use alloc::vec::Vec;

use crate::{math, Error};

pub type Step = u64;

/// Values of the `n` largest-step points, in step order.
pub fn final_window(series: &[(Step, f64)], n: usize) -> Result<Vec<f64>, Error> {
    if n == 0 {
        return Err(Error::InvalidParameter("window size must be at least 1"));
    }
    if series.len() < n {
        return Err(Error::InsufficientCheckpoints { requested: n, available: series.len() });
    }
    Ok(series[series.len() - n..].iter().map(|&(_, v)| v).collect())
}

/// Mean of the final `k` values.
pub fn checkpoint_average(series: &[(Step, f64)], k: usize) -> Result<f64, Error> {
    let window = final_window(series, k)?;
    Ok(crate::spread::mean(&window))
}

/// Mean absolute step-to-step change minus the mean net change.
///
/// Monotone nondecreasing series short-circuit to exactly 0.0; the two
/// summations in the general formula round differently, so exact zero has
/// to come from the monotonicity test rather than cancellation.
pub fn total_variation(series: &[(Step, f64)]) -> Result<f64, Error> {
    if series.len() < 2 {
        return Err(Error::TooFewValues { needed: 2, got: series.len() });
    }
    if series.windows(2).all(|w| w[1].1 >= w[0].1) {
        return Ok(0.0);
    }
    let steps = (series.len() - 1) as f64;
    let mut acc = 0.0;
    for w in series.windows(2) {
        acc += math::abs(w[1].1 - w[0].1);
    }
    let net = series[series.len() - 1].1 - series[0].1;
    Ok(((acc - net) / steps).max(0.0))
}

/// Exponential moving average warm-started at the first value.
///
/// Uses the incremental form `level += alpha * (value - level)`: exact on
/// constant series and pointwise bounded by [min, max] of the input under
/// round-to-nearest, which the textbook two-product form is not.
pub fn ema(series: &[(Step, f64)], alpha: f64) -> Result<Vec<(Step, f64)>, Error> {
    if series.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter("ema alpha must lie in (0, 1]"));
    }
    if alpha == 1.0 {
        return Ok(series.to_vec());
    }
    let mut out = Vec::with_capacity(series.len());
    let mut level = series[0].1;
    out.push(series[0]);
    for &(step, value) in &series[1..] {
        level += alpha * (value - level);
        out.push((step, level));
    }
    Ok(out)
}
