//! Benchmark-improving interventions: greedy subtask filtering with a
//! shuffled-order baseline, early stopping with smoothing, instance
//! subsampling, and side-by-side metric comparison.

use std::collections::BTreeSet;

use evalsnr_core::agreement::{decision_accuracy, PairedScores, TiePolicy};
use evalsnr_core::rng::{derive_stream, shuffle};
use evalsnr_core::series::ema;
use evalsnr_core::spread;

use crate::analysis::{
    instance_aggregates, noise_from_curves, snr_from_curves, snr_report, BpbAggregation,
    InstanceMetric, LabeledCurve, NoiseKind, SnrValue,
};
use crate::error::DataError;
use crate::pairing::{pair_groups, paired_scores_from_store, Scoring};
use crate::par::par_map;
use crate::scaling::fit_and_predict;
use crate::store::{EvalStore, Measurement, MissingPolicy};

/// Macro-average of a subtask set for one model. Subtask names are summed
/// in sorted order so any permutation of the same set is bitwise equal.
fn aggregate_curve(
    store: &EvalStore,
    model_id: &str,
    benchmark: &str,
    names: &BTreeSet<String>,
    metric: &str,
) -> Result<Vec<(u64, f64)>, DataError> {
    let selectors: Vec<(String, Option<String>)> =
        names.iter().map(|s| (benchmark.to_string(), Some(s.clone()))).collect();
    store.macro_average(model_id, &selectors, metric, MissingPolicy::Strict)
}

fn aggregate_curves(
    store: &EvalStore,
    model_ids: &[String],
    benchmark: &str,
    names: &BTreeSet<String>,
    metric: &str,
) -> Result<Vec<LabeledCurve>, DataError> {
    model_ids
        .iter()
        .map(|id| Ok((id.clone(), aggregate_curve(store, id, benchmark, names, metric)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefixReport {
    pub len: usize,
    pub subtask_added: String,
    pub signal: f64,
    pub noise: f64,
    pub snr: SnrValue,
    /// Small-to-large agreement on the prefix aggregate; needs both sides.
    pub decision_accuracy: Option<f64>,
    /// Final-window noise of the prefix aggregate on the target models.
    pub target_noise: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubtaskFilterTrace {
    pub benchmark: String,
    pub metric: String,
    /// Subtasks with their individual SNRs, best first.
    pub ordered: Vec<(String, SnrValue)>,
    pub prefixes: Vec<PrefixReport>,
}

impl SubtaskFilterTrace {
    /// Prefix length with the highest aggregate SNR (earliest on ties).
    pub fn best_prefix_len(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.prefixes.iter().enumerate() {
            if p.snr.rank_key() > self.prefixes[best].snr.rank_key() {
                best = i;
            }
        }
        self.prefixes[best].len
    }
}

/// Extra scoring hooks for the filter trace; all optional.
#[derive(Debug, Clone, Copy)]
pub struct FilterOptions<'a> {
    pub small_ids: Option<&'a [String]>,
    pub large_ids: Option<&'a [String]>,
    /// Models whose aggregate noise is the "target noise" column.
    pub target_ids: Option<&'a [String]>,
    pub target_window: usize,
    pub ties: TiePolicy,
}

impl FilterOptions<'_> {
    pub fn none() -> Self {
        FilterOptions {
            small_ids: None,
            large_ids: None,
            target_ids: None,
            target_window: 30,
            ties: TiePolicy::HalfCredit,
        }
    }
}

/// Ranks subtasks by their own SNR (best first, ties lexicographic,
/// degenerate flagged and last) and re-scores each prefix of that order
/// as a macro-averaged benchmark.
pub fn greedy_subtask_filter(
    store: &EvalStore,
    benchmark: &str,
    population_ids: &[String],
    noise_ids: &[String],
    metric: &str,
    window_n: usize,
    options: FilterOptions<'_>,
) -> Result<SubtaskFilterTrace, DataError> {
    let subtasks = store.subtasks_of(benchmark);
    if subtasks.is_empty() {
        return Err(DataError::NoSubtasks(benchmark.into()));
    }

    let mut ordered: Vec<(String, SnrValue)> = Vec::with_capacity(subtasks.len());
    for name in &subtasks {
        let report =
            snr_report(store, population_ids, noise_ids, benchmark, Some(name), metric, window_n)?;
        ordered.push((name.clone(), report.snr));
    }
    // rank_key never contains NaN, so the comparison is total.
    ordered.sort_by(|a, b| {
        b.1.rank_key()
            .partial_cmp(&a.1.rank_key())
            .expect("snr rank keys are ordered")
            .then_with(|| a.0.cmp(&b.0))
    });

    let pairs = match (options.small_ids, options.large_ids) {
        (Some(small), Some(large)) => Some(pair_groups(store, small, large)?),
        _ => None,
    };

    let mut prefixes = Vec::with_capacity(ordered.len());
    let mut names: BTreeSet<String> = BTreeSet::new();
    for (i, (name, _)) in ordered.iter().enumerate() {
        names.insert(name.clone());
        let signal_curves = aggregate_curves(store, population_ids, benchmark, &names, metric)?;
        let noise_curves = aggregate_curves(store, noise_ids, benchmark, &names, metric)?;
        let (signal, noise, snr) = snr_from_curves(&signal_curves, &noise_curves, window_n)?;

        let da = match &pairs {
            None => None,
            Some(pairs) => {
                let mut labels = Vec::with_capacity(pairs.len());
                let mut small = Vec::with_capacity(pairs.len());
                let mut large = Vec::with_capacity(pairs.len());
                for (group, small_id, large_id) in pairs {
                    let s = aggregate_curve(store, small_id, benchmark, &names, metric)?;
                    let l = aggregate_curve(store, large_id, benchmark, &names, metric)?;
                    labels.push(group.clone());
                    small.push(Scoring::Final.apply(small_id, &s)?);
                    large.push(Scoring::Final.apply(large_id, &l)?);
                }
                Some(decision_accuracy(&PairedScores::new(labels, small, large)?, options.ties)?)
            }
        };

        let target_noise = match options.target_ids {
            None => None,
            Some(ids) => {
                let curves = aggregate_curves(store, ids, benchmark, &names, metric)?;
                Some(
                    noise_from_curves(NoiseKind::FinalNRelStd, &curves, options.target_window)?
                        .value,
                )
            }
        };

        prefixes.push(PrefixReport {
            len: i + 1,
            subtask_added: name.clone(),
            signal,
            noise,
            snr,
            decision_accuracy: da,
            target_noise,
        });
    }

    Ok(SubtaskFilterTrace {
        benchmark: benchmark.into(),
        metric: metric.into(),
        ordered,
        prefixes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineStats {
    pub trials: usize,
    /// Mean aggregate SNR per prefix length (index 0 = length 1).
    /// Infinite per-trial SNRs propagate: a prefix whose noise is zero in
    /// any trial reports an infinite mean and a NaN std.
    pub mean_snr: Vec<f64>,
    /// Sample std per prefix length; 0 by convention at trials == 1.
    pub std_snr: Vec<f64>,
    pub degenerate_std: bool,
}

/// Aggregate SNR of random subtask orders: for each prefix length, mean
/// and std over `trials` shuffles. Per-trial RNG streams keep the result
/// independent of thread count.
#[allow(clippy::too_many_arguments)]
pub fn random_order_baseline(
    store: &EvalStore,
    benchmark: &str,
    population_ids: &[String],
    noise_ids: &[String],
    metric: &str,
    window_n: usize,
    trials: usize,
    rng_seed: u64,
    threads: usize,
) -> Result<BaselineStats, DataError> {
    if trials == 0 {
        return Err(DataError::Invalid("baseline trials must be at least 1".into()));
    }
    let subtasks = store.subtasks_of(benchmark);
    if subtasks.is_empty() {
        return Err(DataError::NoSubtasks(benchmark.into()));
    }
    let trial_indices: Vec<usize> = (0..trials).collect();
    let per_trial: Vec<Result<Vec<f64>, DataError>> =
        par_map(&trial_indices, threads, |_, &trial| {
            let mut rng = derive_stream(rng_seed, trial as u64);
            let mut order = subtasks.clone();
            shuffle(&mut rng, &mut order);
            let mut names: BTreeSet<String> = BTreeSet::new();
            let mut snrs = Vec::with_capacity(order.len());
            for name in &order {
                names.insert(name.clone());
                let signal_curves =
                    aggregate_curves(store, population_ids, benchmark, &names, metric)?;
                let noise_curves = aggregate_curves(store, noise_ids, benchmark, &names, metric)?;
                let (_, _, snr) = snr_from_curves(&signal_curves, &noise_curves, window_n)?;
                snrs.push(snr.as_f64());
            }
            Ok(snrs)
        });
    let mut rows = Vec::with_capacity(trials);
    for r in per_trial {
        rows.push(r?);
    }
    let k = subtasks.len();
    let mut mean_snr = Vec::with_capacity(k);
    let mut std_snr = Vec::with_capacity(k);
    for i in 0..k {
        let column: Vec<f64> = rows.iter().map(|row| row[i]).collect();
        mean_snr.push(spread::mean(&column));
        // Bitwise-identical columns (notably the full-set prefix, which
        // every permutation aggregates identically) report exactly 0.
        std_snr.push(crate::analysis::column_std(&column));
    }
    Ok(BaselineStats { trials, mean_snr, std_snr, degenerate_std: trials == 1 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    None,
    /// Exponential moving average with the given alpha, applied to the
    /// curve up to the cutoff step.
    Ema(f64),
}

/// Rank agreement between scores at a training cutoff and final scores.
/// The early score of a model is its last checkpoint at or below `step`,
/// optionally EMA-smoothed over everything up to there.
#[allow(clippy::too_many_arguments)]
pub fn early_stop_decision_accuracy(
    store: &EvalStore,
    model_ids: &[String],
    benchmark: &str,
    subtask: Option<&str>,
    metric: &str,
    step: u64,
    smoothing: Smoothing,
    ties: TiePolicy,
) -> Result<f64, DataError> {
    let mut labels = Vec::with_capacity(model_ids.len());
    let mut early = Vec::with_capacity(model_ids.len());
    let mut finals = Vec::with_capacity(model_ids.len());
    for id in model_ids {
        let curve = store.require_curve(id, benchmark, subtask, metric)?;
        let cut = curve.partition_point(|&(s, _)| s <= step);
        if cut == 0 {
            return Err(DataError::Invalid(format!(
                "model {id:?} has no checkpoint at or before step {step}"
            )));
        }
        let truncated = &curve[..cut];
        let early_score = match smoothing {
            Smoothing::None => truncated[truncated.len() - 1].1,
            Smoothing::Ema(alpha) => ema(truncated, alpha)?.last().expect("nonempty").1,
        };
        labels.push(id.clone());
        early.push(early_score);
        finals.push(curve[curve.len() - 1].1);
    }
    Ok(decision_accuracy(&PairedScores::new(labels, early, finals)?, ties)?)
}

/// Raw and EMA-smoothed early-stop decision accuracy at every step shared
/// by all models, in step order.
pub fn early_stop_sweep(
    store: &EvalStore,
    model_ids: &[String],
    benchmark: &str,
    subtask: Option<&str>,
    metric: &str,
    alpha: f64,
    ties: TiePolicy,
) -> Result<Vec<(u64, f64, f64)>, DataError> {
    if model_ids.is_empty() {
        return Err(DataError::Invalid("early stopping needs models".into()));
    }
    let mut shared: Option<BTreeSet<u64>> = None;
    for id in model_ids {
        let steps: BTreeSet<u64> = store
            .require_curve(id, benchmark, subtask, metric)?
            .into_iter()
            .map(|(s, _)| s)
            .collect();
        shared = Some(match shared {
            None => steps,
            Some(acc) => acc.intersection(&steps).copied().collect(),
        });
    }
    let shared = shared.expect("at least one model");
    if shared.is_empty() {
        return Err(DataError::Invalid("models share no evaluation steps".into()));
    }
    let mut out = Vec::with_capacity(shared.len());
    for step in shared {
        let raw = early_stop_decision_accuracy(
            store,
            model_ids,
            benchmark,
            subtask,
            metric,
            step,
            Smoothing::None,
            ties,
        )?;
        let smoothed = early_stop_decision_accuracy(
            store,
            model_ids,
            benchmark,
            subtask,
            metric,
            step,
            Smoothing::Ema(alpha),
            ties,
        )?;
        out.push((step, raw, smoothed));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleReport {
    pub benchmark: String,
    pub total_instances: usize,
    /// The chosen instance ids, sorted; shared across all models and steps.
    pub subset: Vec<String>,
    pub rows: Vec<Measurement>,
}

/// Re-aggregates a benchmark over a random fixed subset of m instances.
/// The subset is drawn once per seed and applied to every (model, step)
/// group, so scores stay comparable across the population.
pub fn subsample_instances(
    store: &EvalStore,
    benchmark: &str,
    metric: InstanceMetric,
    aggregation: BpbAggregation,
    m: usize,
    rng_seed: u64,
) -> Result<SubsampleReport, DataError> {
    let ids = store.instance_ids(benchmark);
    if ids.is_empty() {
        return Err(DataError::NoInstances(benchmark.into()));
    }
    if m == 0 || m > ids.len() {
        return Err(DataError::Invalid(format!(
            "subset size {m} out of range 1..={}",
            ids.len()
        )));
    }
    let mut rng = derive_stream(rng_seed, 0);
    let indices = evalsnr_core::rng::sample_distinct(&mut rng, ids.len(), m);
    let subset: BTreeSet<String> = indices.into_iter().map(|i| ids[i].clone()).collect();
    let rows = instance_aggregates(store, benchmark, metric, aggregation, Some(&subset))?;
    Ok(SubsampleReport {
        benchmark: benchmark.into(),
        total_instances: ids.len(),
        subset: subset.into_iter().collect(),
        rows,
    })
}

/// Where the scaling-error column of a metric comparison comes from.
#[derive(Debug, Clone, Copy)]
pub struct LadderSpec<'a> {
    pub train_ids: &'a [String],
    pub target_id: &'a str,
    /// Metric fitted by the power-law stage. A compared metric equal to
    /// this one is predicted by the power law alone; any other goes
    /// through the sigmoid chain.
    pub loss_metric: &'a str,
    pub window_n: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ComparisonOptions<'a> {
    pub population: &'a [String],
    pub noise_models: &'a [String],
    pub window_n: usize,
    pub small_ids: Option<&'a [String]>,
    pub large_ids: Option<&'a [String]>,
    pub ties: TiePolicy,
    pub ladder: Option<LadderSpec<'a>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricArm {
    pub metric: String,
    pub signal: f64,
    pub noise: f64,
    pub snr: SnrValue,
    pub decision_accuracy: Option<f64>,
    pub scaling_error: Option<f64>,
}

fn metric_arm(
    store: &EvalStore,
    benchmark: &str,
    subtask: Option<&str>,
    metric: &str,
    options: &ComparisonOptions<'_>,
) -> Result<MetricArm, DataError> {
    let report = snr_report(
        store,
        options.population,
        options.noise_models,
        benchmark,
        subtask,
        metric,
        options.window_n,
    )?;
    let decision_accuracy = match (options.small_ids, options.large_ids) {
        (Some(small), Some(large)) => {
            let paired = paired_scores_from_store(
                store,
                small,
                large,
                benchmark,
                subtask,
                metric,
                Scoring::Final,
                Scoring::Final,
            )?;
            Some(evalsnr_core::agreement::decision_accuracy(&paired, options.ties)?)
        }
        _ => None,
    };
    let scaling_error = match &options.ladder {
        None => None,
        Some(spec) => {
            let chained = if metric == spec.loss_metric { None } else { Some(metric) };
            let prediction = fit_and_predict(
                store,
                spec.train_ids,
                spec.target_id,
                benchmark,
                subtask,
                spec.loss_metric,
                chained,
                Scoring::Final,
                spec.window_n,
                None,
            )?;
            Some(prediction.rel_error)
        }
    };
    Ok(MetricArm {
        metric: metric.into(),
        signal: report.signal,
        noise: report.noise,
        snr: report.snr,
        decision_accuracy,
        scaling_error,
    })
}

/// The same reliability readout under two metrics, side by side.
pub fn metric_comparison(
    store: &EvalStore,
    benchmark: &str,
    subtask: Option<&str>,
    metric_a: &str,
    metric_b: &str,
    options: &ComparisonOptions<'_>,
) -> Result<(MetricArm, MetricArm), DataError> {
    Ok((
        metric_arm(store, benchmark, subtask, metric_a, options)?,
        metric_arm(store, benchmark, subtask, metric_b, options)?,
    ))
}
