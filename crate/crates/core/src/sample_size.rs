//! How many final checkpoints does a noise estimate need before it can be
//! trusted to a given relative tolerance? A chi-squared bound answers in
//! closed form; an empirical resampling estimator answers from observed
//! score windows.

use alloc::vec::Vec;

use crate::rng::{derive_stream, sample_distinct};
use crate::special::chi_squared_cdf;
use crate::spread::sample_std;
use crate::Error;

/// Relative tolerance on the sample standard deviation and the required
/// probability of landing inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinCheckpointQuery {
    pub tolerance: f64,
    pub confidence: f64,
}

pub const MIN_CHECKPOINT_SCAN_CAP: usize = 1_000_000;

/// Probability that the sample std of `n` normal draws lands within
/// `tolerance * sigma` of sigma: the chi-squared mass of the interval
/// ((1-k)^2 (n-1), (1+k)^2 (n-1)) with n-1 degrees of freedom. Tolerances
/// of 1 or more make the lower bound vacuous because a sample std is
/// never negative.
pub fn within_tolerance_probability(n: usize, tolerance: f64) -> f64 {
    assert!(n >= 2, "sample std needs n >= 2");
    let dof = (n - 1) as f64;
    let upper = chi_squared_cdf((1.0 + tolerance) * (1.0 + tolerance) * dof, dof);
    let lower = if tolerance >= 1.0 {
        0.0
    } else {
        chi_squared_cdf((1.0 - tolerance) * (1.0 - tolerance) * dof, dof)
    };
    upper - lower
}

/// Smallest n >= 2 whose within-tolerance probability reaches the
/// requested confidence, by upward scan.
pub fn min_checkpoints(query: &MinCheckpointQuery) -> Result<usize, Error> {
    if !(query.tolerance > 0.0) || !query.tolerance.is_finite() {
        return Err(Error::InvalidParameter("tolerance must be positive and finite"));
    }
    if !(query.confidence > 0.0 && query.confidence < 1.0) {
        return Err(Error::InvalidParameter("confidence must lie strictly between 0 and 1"));
    }
    for n in 2..=MIN_CHECKPOINT_SCAN_CAP {
        if within_tolerance_probability(n, query.tolerance) >= query.confidence {
            return Ok(n);
        }
    }
    Err(Error::Unsatisfiable { cap: MIN_CHECKPOINT_SCAN_CAP })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceLikelihood {
    pub likelihood: f64,
    /// Set when the window std is zero, where the likelihood is 1 by
    /// definition rather than by resampling.
    pub degenerate: bool,
}

/// Fraction of random n-subsets of `window` whose sample std lands within
/// `tolerance` (relative) of the full window's sample std. One derived
/// RNG stream per trial, so the result depends only on the seed.
pub fn within_tolerance_likelihood(
    window: &[f64],
    n: usize,
    tolerance: f64,
    trials: usize,
    rng_seed: u64,
) -> Result<ToleranceLikelihood, Error> {
    if n < 2 {
        return Err(Error::InvalidParameter("subset size must be at least 2"));
    }
    if window.len() <= n {
        return Err(Error::InsufficientCheckpoints { requested: n + 1, available: window.len() });
    }
    if !(tolerance > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive"));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1"));
    }
    let sigma = sample_std(window);
    if sigma == 0.0 {
        return Ok(ToleranceLikelihood { likelihood: 1.0, degenerate: true });
    }
    let mut hits = 0usize;
    let mut subset = Vec::with_capacity(n);
    for trial in 0..trials {
        let mut rng = derive_stream(rng_seed, trial as u64);
        subset.clear();
        for idx in sample_distinct(&mut rng, window.len(), n) {
            subset.push(window[idx]);
        }
        let s = sample_std(&subset);
        if crate::math::abs(s - sigma) < tolerance * sigma {
            hits += 1;
        }
    }
    Ok(ToleranceLikelihood { likelihood: hits as f64 / trials as f64, degenerate: false })
}
