//! Signal, noise, and SNR computed over stored score curves, plus
//! instance-level aggregation to benchmark scores.

use std::collections::BTreeSet;
use std::fmt;

use evalsnr_core::series::{final_window, total_variation};
use evalsnr_core::spread::{self, SpreadMeasureKind};

use crate::error::DataError;
use crate::store::{EvalStore, Measurement};

/// A score curve labeled by the model that produced it.
pub type LabeledCurve = (String, Vec<(u64, f64)>);

/// Signal over noise; the two degenerate shapes are kept distinct so a
/// zero-noise benchmark never masquerades as merely "large".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnrValue {
    Finite(f64),
    /// Positive signal with exactly zero noise.
    Infinite,
    /// Zero signal and zero noise; carries no ranking information.
    Degenerate,
}

impl SnrValue {
    pub fn from_ratio(signal: f64, noise: f64) -> SnrValue {
        if noise > 0.0 {
            SnrValue::Finite(signal / noise)
        } else if signal > 0.0 {
            SnrValue::Infinite
        } else {
            SnrValue::Degenerate
        }
    }

    /// Numeric view for tables; degenerate becomes NaN.
    pub fn as_f64(self) -> f64 {
        match self {
            SnrValue::Finite(v) => v,
            SnrValue::Infinite => f64::INFINITY,
            SnrValue::Degenerate => f64::NAN,
        }
    }

    /// Ranking order: degenerate < any finite < infinite.
    pub fn rank_key(self) -> (u8, f64) {
        match self {
            SnrValue::Degenerate => (0, 0.0),
            SnrValue::Finite(v) => (1, v),
            SnrValue::Infinite => (2, 0.0),
        }
    }
}

impl fmt::Display for SnrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SnrValue::Finite(v) => write!(f, "{v}"),
            SnrValue::Infinite => write!(f, "inf"),
            SnrValue::Degenerate => write!(f, "degenerate"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Mean over models of the relative sample std of the last n scores.
    FinalNRelStd,
    /// Mean over models of the total variation rate of the last n scores.
    TotalVariation,
    /// Relative std across models differing only in init seed.
    Seed,
    /// Relative std across models differing only in data order seed.
    DataOrder,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [
        NoiseKind::FinalNRelStd,
        NoiseKind::TotalVariation,
        NoiseKind::Seed,
        NoiseKind::DataOrder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::FinalNRelStd => "final_n_rel_std",
            NoiseKind::TotalVariation => "total_variation",
            NoiseKind::Seed => "seed",
            NoiseKind::DataOrder => "data_order",
        }
    }

    pub fn parse(name: &str) -> Option<NoiseKind> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEstimate {
    pub kind: NoiseKind,
    pub value: f64,
    pub window_n: usize,
    pub model_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrReport {
    pub benchmark: String,
    pub subtask: Option<String>,
    pub metric: String,
    pub signal: f64,
    pub noise: f64,
    pub snr: SnrValue,
    pub window_n: usize,
    pub population: Vec<String>,
}

fn labeled_curve(
    store: &EvalStore,
    model_id: &str,
    benchmark: &str,
    subtask: Option<&str>,
    metric: &str,
) -> Result<LabeledCurve, DataError> {
    Ok((model_id.to_string(), store.require_curve(model_id, benchmark, subtask, metric)?))
}

fn require_window(
    model_id: &str,
    series: &[(u64, f64)],
    window_n: usize,
) -> Result<Vec<f64>, DataError> {
    final_window(series, window_n).map_err(|_| {
        DataError::Invalid(format!(
            "model {model_id:?} has {} checkpoints, fewer than window {window_n}",
            series.len()
        ))
    })
}

/// Noise over a set of per-model score curves.
pub fn noise_from_curves(
    kind: NoiseKind,
    curves: &[LabeledCurve],
    window_n: usize,
) -> Result<NoiseEstimate, DataError> {
    if curves.is_empty() {
        return Err(DataError::Invalid("noise estimate needs at least one model".into()));
    }
    if window_n == 0 {
        return Err(DataError::Invalid("window must be at least 1".into()));
    }
    let model_ids: Vec<String> = curves.iter().map(|(id, _)| id.clone()).collect();
    let value = match kind {
        NoiseKind::FinalNRelStd => {
            if window_n < 2 {
                return Err(DataError::Invalid(
                    "relative std over a window needs window of at least 2".into(),
                ));
            }
            let mut acc = 0.0;
            for (id, series) in curves {
                let window = require_window(id, series, window_n)?;
                acc += spread::rel_std(&window)?;
            }
            acc / curves.len() as f64
        }
        NoiseKind::TotalVariation => {
            if window_n < 2 {
                return Err(DataError::Invalid(
                    "total variation needs window of at least 2".into(),
                ));
            }
            let mut acc = 0.0;
            for (id, series) in curves {
                if series.len() < window_n {
                    return Err(DataError::Invalid(format!(
                        "model {id:?} has {} checkpoints, fewer than window {window_n}",
                        series.len()
                    )));
                }
                acc += total_variation(&series[series.len() - window_n..])?;
            }
            acc / curves.len() as f64
        }
        // Spread across sibling runs: each model contributes the mean of
        // its final window, then one relative std across those means.
        NoiseKind::Seed | NoiseKind::DataOrder => {
            if curves.len() < 2 {
                return Err(DataError::Invalid(format!(
                    "{} noise needs at least 2 sibling models",
                    kind.name()
                )));
            }
            let mut means = Vec::with_capacity(curves.len());
            for (id, series) in curves {
                let window = require_window(id, series, window_n)?;
                means.push(spread::mean(&window));
            }
            spread::rel_std(&means)?
        }
    };
    Ok(NoiseEstimate { kind, value, window_n, model_ids })
}

pub fn noise_estimate(
    store: &EvalStore,
    kind: NoiseKind,
    model_ids: &[String],
    benchmark: &str,
    subtask: Option<&str>,
    metric: &str,
    window_n: usize,
) -> Result<NoiseEstimate, DataError> {
    let mut curves = Vec::with_capacity(model_ids.len());
    for id in model_ids {
        curves.push(labeled_curve(store, id, benchmark, subtask, metric)?);
    }
    noise_from_curves(kind, &curves, window_n)
}

/// Sample std that short-circuits to exactly 0 when every value carries
/// the same bits (or there is only one), so deterministic agreement never
/// leaks mean-rounding residue into the spread of identical numbers.
pub(crate) fn column_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let first = values[0].to_bits();
    if values.iter().all(|v| v.to_bits() == first) {
        return 0.0;
    }
    spread::sample_std(values)
}

/// Spread of final checkpoint scores across a model population.
pub fn signal_spread(
    store: &EvalStore,
    kind: SpreadMeasureKind,
    model_ids: &[String],
    benchmark: &str,
    subtask: Option<&str>,
    metric: &str,
) -> Result<f64, DataError> {
    if model_ids.len() < 2 {
        return Err(DataError::Invalid("signal needs at least 2 models".into()));
    }
    let mut finals = Vec::with_capacity(model_ids.len());
    for id in model_ids {
        let (_, series) = labeled_curve(store, id, benchmark, subtask, metric)?;
        finals.push(series.last().expect("require_curve rejects empty").1);
    }
    Ok(spread::spread(&finals, kind)?)
}

/// Signal, noise, and their ratio over explicit curves. Signal models
/// contribute final scores, noise models contribute final-window jitter;
/// the two sets usually coincide but may differ (e.g. signal across a
/// compute class, noise from a held-out run).
pub fn snr_from_curves(
    signal_curves: &[LabeledCurve],
    noise_curves: &[LabeledCurve],
    window_n: usize,
) -> Result<(f64, f64, SnrValue), DataError> {
    if signal_curves.len() < 2 {
        return Err(DataError::Invalid("signal needs at least 2 models".into()));
    }
    let finals: Vec<f64> = signal_curves
        .iter()
        .map(|(id, series)| {
            series.last().map(|&(_, v)| v).ok_or_else(|| {
                DataError::Invalid(format!("model {id:?} has an empty curve"))
            })
        })
        .collect::<Result<_, _>>()?;
    let signal = spread::rel_dispersion(&finals)?;
    let noise = noise_from_curves(NoiseKind::FinalNRelStd, noise_curves, window_n)?.value;
    Ok((signal, noise, SnrValue::from_ratio(signal, noise)))
}

pub fn snr_report(
    store: &EvalStore,
    population: &[String],
    noise_models: &[String],
    benchmark: &str,
    subtask: Option<&str>,
    metric: &str,
    window_n: usize,
) -> Result<SnrReport, DataError> {
    let mut signal_curves = Vec::with_capacity(population.len());
    for id in population {
        signal_curves.push(labeled_curve(store, id, benchmark, subtask, metric)?);
    }
    let mut noise_curves = Vec::with_capacity(noise_models.len());
    for id in noise_models {
        noise_curves.push(labeled_curve(store, id, benchmark, subtask, metric)?);
    }
    let (signal, noise, snr) = snr_from_curves(&signal_curves, &noise_curves, window_n)?;
    Ok(SnrReport {
        benchmark: benchmark.into(),
        subtask: subtask.map(String::from),
        metric: metric.into(),
        signal,
        noise,
        snr,
        window_n,
        population: population.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceMetric {
    /// Mean of graded per-instance scores.
    Primary,
    /// Bits per byte of the gold continuations.
    Bpb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpbAggregation {
    /// Total nats over total bytes.
    Micro,
    /// Mean of per-instance rates.
    Macro,
}

/// Collapses instance logs of one benchmark into per-(model, step)
/// measurements. An id subset restricts every group to those instances
/// and errors if any group lacks one, so subsampled scores stay paired.
pub fn instance_aggregates(
    store: &EvalStore,
    benchmark: &str,
    metric: InstanceMetric,
    aggregation: BpbAggregation,
    subset: Option<&BTreeSet<String>>,
) -> Result<Vec<Measurement>, DataError> {
    let groups = store.instances_by_model_step(benchmark);
    if groups.is_empty() {
        return Err(DataError::NoInstances(benchmark.into()));
    }
    let metric_name = match metric {
        InstanceMetric::Primary => "primary",
        InstanceMetric::Bpb => "bpb",
    };
    let mut out = Vec::with_capacity(groups.len());
    for ((model_id, step), records) in groups {
        let chosen: Vec<&(String, f64, f64, u64)> = match subset {
            None => records.iter().collect(),
            Some(ids) => {
                let present: BTreeSet<&str> =
                    records.iter().map(|(id, _, _, _)| id.as_str()).collect();
                for id in ids {
                    if !present.contains(id.as_str()) {
                        return Err(DataError::Invalid(format!(
                            "instance {id:?} missing for model {model_id:?} step {step}"
                        )));
                    }
                }
                records.iter().filter(|(id, _, _, _)| ids.contains(id)).collect()
            }
        };
        if chosen.is_empty() {
            return Err(DataError::Invalid(format!(
                "no instances selected for model {model_id:?} step {step}"
            )));
        }
        let value = match metric {
            InstanceMetric::Primary => {
                let scores: Vec<f64> = chosen.iter().map(|(_, s, _, _)| *s).collect();
                spread::mean(&scores)
            }
            InstanceMetric::Bpb => {
                let pairs: Vec<(f64, u64)> =
                    chosen.iter().map(|(_, _, nll, bytes)| (*nll, *bytes)).collect();
                match aggregation {
                    BpbAggregation::Micro => evalsnr_core::bpb::micro_bpb(&pairs)?,
                    BpbAggregation::Macro => evalsnr_core::bpb::macro_bpb(&pairs)?,
                }
            }
        };
        out.push(Measurement {
            model_id,
            step,
            benchmark: benchmark.into(),
            subtask: None,
            metric: metric_name.into(),
            value,
        });
    }
    Ok(out)
}
