//! Spread measures over a population of final-checkpoint scores (the
//! "signal" of a benchmark), plus the relative standard deviation used as
//! the step-to-step noise estimate.
//!
//! Relative measures divide by the mean magnitude so they stay
//! nonnegative and invariant under positive rescaling even on
//! negative-valued score vectors.

use alloc::vec::Vec;

use crate::{math, Error};

/// Magnitude below which a mean is treated as zero for relative measures.
pub const MEAN_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpreadMeasureKind {
    /// (max - min) / |mean|.
    RelDispersion,
    /// max - min.
    Dispersion,
    /// Sample (n-1) standard deviation / |mean|.
    RelStd,
    /// Sample (n-1) standard deviation.
    Std,
    /// Sample (n-1) variance.
    Variance,
    /// (1/n^2) * sum over all ordered pairs of |c_i - c_j|.
    MeanPairwiseDistance,
    /// Mean pairwise distance / |mean|.
    RelMeanPairwiseDistance,
    /// (1/n^2) * sum over all ordered pairs of (c_i - c_j)^2.
    MeanSquaredPairwiseDistance,
    /// Mean squared pairwise distance / mean^2.
    RelMeanSquaredPairwiseDistance,
    /// Q3 - Q1, linear-interpolation quantiles.
    Iqr,
    /// (Q3 - Q1) / 2.
    QuartileDeviation,
    /// (1/n) * sum |c_i - mean|.
    AvgAbsDeviation,
    /// median(|c_i - median(c)|).
    MedianAbsDeviation,
    /// sqrt((1/n) * sum (c_i - mean)^2); the population (1/n) form is what
    /// distinguishes this entry from `Std` in the catalog.
    RmsDeviation,
    /// (1 / (2 n^2 |mean|)) * sum over all ordered pairs of |c_i - c_j|.
    GiniCoefficient,
    /// Kolmogorov distance between the min-max-normalized scores and the
    /// uniform CDF on [0, 1]. A constant vector has no min-max scale; its
    /// normalized points are defined as all 0.0, which the formula maps to
    /// 1.0 (maximally non-uniform).
    StarDiscrepancy,
}

impl SpreadMeasureKind {
    pub const ALL: [SpreadMeasureKind; 16] = [
        SpreadMeasureKind::RelDispersion,
        SpreadMeasureKind::Dispersion,
        SpreadMeasureKind::RelStd,
        SpreadMeasureKind::Std,
        SpreadMeasureKind::Variance,
        SpreadMeasureKind::MeanPairwiseDistance,
        SpreadMeasureKind::RelMeanPairwiseDistance,
        SpreadMeasureKind::MeanSquaredPairwiseDistance,
        SpreadMeasureKind::RelMeanSquaredPairwiseDistance,
        SpreadMeasureKind::Iqr,
        SpreadMeasureKind::QuartileDeviation,
        SpreadMeasureKind::AvgAbsDeviation,
        SpreadMeasureKind::MedianAbsDeviation,
        SpreadMeasureKind::RmsDeviation,
        SpreadMeasureKind::GiniCoefficient,
        SpreadMeasureKind::StarDiscrepancy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpreadMeasureKind::RelDispersion => "rel_dispersion",
            SpreadMeasureKind::Dispersion => "dispersion",
            SpreadMeasureKind::RelStd => "rel_std",
            SpreadMeasureKind::Std => "std",
            SpreadMeasureKind::Variance => "variance",
            SpreadMeasureKind::MeanPairwiseDistance => "mean_pairwise_distance",
            SpreadMeasureKind::RelMeanPairwiseDistance => "rel_mean_pairwise_distance",
            SpreadMeasureKind::MeanSquaredPairwiseDistance => "mean_squared_pairwise_distance",
            SpreadMeasureKind::RelMeanSquaredPairwiseDistance => {
                "rel_mean_squared_pairwise_distance"
            }
            SpreadMeasureKind::Iqr => "iqr",
            SpreadMeasureKind::QuartileDeviation => "quartile_deviation",
            SpreadMeasureKind::AvgAbsDeviation => "avg_abs_deviation",
            SpreadMeasureKind::MedianAbsDeviation => "median_abs_deviation",
            SpreadMeasureKind::RmsDeviation => "rms_deviation",
            SpreadMeasureKind::GiniCoefficient => "gini_coefficient",
            SpreadMeasureKind::StarDiscrepancy => "star_discrepancy",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Kinds that divide by the mean and are invariant under positive scaling.
    pub fn is_relative(self) -> bool {
        matches!(
            self,
            SpreadMeasureKind::RelDispersion
                | SpreadMeasureKind::RelStd
                | SpreadMeasureKind::RelMeanPairwiseDistance
                | SpreadMeasureKind::RelMeanSquaredPairwiseDistance
                | SpreadMeasureKind::GiniCoefficient
        )
    }
}

pub fn mean(values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &v in values {
        acc += v;
    }
    acc / values.len() as f64
}

/// Sample (n-1) standard deviation; callers guarantee len >= 2.
pub fn sample_std(values: &[f64]) -> f64 {
    let m = mean(values);
    let mut acc = 0.0;
    for &v in values {
        let d = v - m;
        acc += d * d;
    }
    math::sqrt(acc / (values.len() - 1) as f64)
}

/// Sample standard deviation over the mean magnitude.
pub fn rel_std(values: &[f64]) -> Result<f64, Error> {
    require(values, 2)?;
    let m = mean(values);
    if math::abs(m) <= MEAN_EPSILON {
        return Err(Error::NearZeroMean);
    }
    Ok(sample_std(values) / math::abs(m))
}

/// Range over the mean magnitude; the default signal measure.
pub fn rel_dispersion(values: &[f64]) -> Result<f64, Error> {
    spread(values, SpreadMeasureKind::RelDispersion)
}

pub fn spread(values: &[f64], kind: SpreadMeasureKind) -> Result<f64, Error> {
    require(values, 2)?;
    let m = mean(values);
    if kind.is_relative() && math::abs(m) <= MEAN_EPSILON {
        return Err(Error::NearZeroMean);
    }
    let n = values.len() as f64;
    let value = match kind {
        SpreadMeasureKind::RelDispersion => range(values) / math::abs(m),
        SpreadMeasureKind::Dispersion => range(values),
        SpreadMeasureKind::RelStd => sample_std(values) / math::abs(m),
        SpreadMeasureKind::Std => sample_std(values),
        SpreadMeasureKind::Variance => {
            let s = sample_std(values);
            s * s
        }
        SpreadMeasureKind::MeanPairwiseDistance => pairwise_abs_sum(values) / (n * n),
        SpreadMeasureKind::RelMeanPairwiseDistance => {
            pairwise_abs_sum(values) / (n * n) / math::abs(m)
        }
        SpreadMeasureKind::MeanSquaredPairwiseDistance => pairwise_sq_sum(values) / (n * n),
        SpreadMeasureKind::RelMeanSquaredPairwiseDistance => {
            pairwise_sq_sum(values) / (n * n) / (m * m)
        }
        SpreadMeasureKind::Iqr => {
            let sorted = sorted_copy(values);
            quantile(&sorted, 0.75) - quantile(&sorted, 0.25)
        }
        SpreadMeasureKind::QuartileDeviation => {
            let sorted = sorted_copy(values);
            (quantile(&sorted, 0.75) - quantile(&sorted, 0.25)) / 2.0
        }
        SpreadMeasureKind::AvgAbsDeviation => {
            let mut acc = 0.0;
            for &v in values {
                acc += math::abs(v - m);
            }
            acc / n
        }
        SpreadMeasureKind::MedianAbsDeviation => {
            let sorted = sorted_copy(values);
            let med = quantile(&sorted, 0.5);
            let mut dev: Vec<f64> = values.iter().map(|&v| math::abs(v - med)).collect();
            dev.sort_unstable_by(f64::total_cmp);
            quantile(&dev, 0.5)
        }
        SpreadMeasureKind::RmsDeviation => {
            let mut acc = 0.0;
            for &v in values {
                let d = v - m;
                acc += d * d;
            }
            math::sqrt(acc / n)
        }
        SpreadMeasureKind::GiniCoefficient => {
            pairwise_abs_sum(values) / (2.0 * n * n * math::abs(m))
        }
        SpreadMeasureKind::StarDiscrepancy => star_discrepancy(values),
    };
    Ok(value)
}

fn require(values: &[f64], needed: usize) -> Result<(), Error> {
    if values.len() < needed {
        return Err(Error::TooFewValues { needed, got: values.len() });
    }
    Ok(())
}

fn range(values: &[f64]) -> f64 {
    let mut lo = values[0];
    let mut hi = values[0];
    for &v in &values[1..] {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    hi - lo
}

fn pairwise_abs_sum(values: &[f64]) -> f64 {
    // Ordered pairs: each unordered pair counts twice, the diagonal is zero.
    let mut acc = 0.0;
    for (i, &a) in values.iter().enumerate() {
        for &b in &values[i + 1..] {
            acc += math::abs(a - b);
        }
    }
    2.0 * acc
}

fn pairwise_sq_sum(values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, &a) in values.iter().enumerate() {
        for &b in &values[i + 1..] {
            let d = a - b;
            acc += d * d;
        }
    }
    2.0 * acc
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted
}

/// Linear-interpolation quantile of a sorted slice, p in [0, 1].
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h as usize;
    if lo + 1 == sorted.len() {
        return sorted[lo];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

fn star_discrepancy(values: &[f64]) -> f64 {
    let mut lo = values[0];
    let mut hi = values[0];
    for &v in values {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    let scale = hi - lo;
    let mut normalized: Vec<f64> = values
        .iter()
        .map(|&v| if scale > 0.0 { (v - lo) / scale } else { 0.0 })
        .collect();
    normalized.sort_unstable_by(f64::total_cmp);
    let n = normalized.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, &u) in normalized.iter().enumerate() {
        let above = (i + 1) as f64 / n - u;
        let below = u - i as f64 / n;
        worst = worst.max(above).max(below);
    }
    worst
}
