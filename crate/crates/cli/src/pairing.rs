//! Pairing small and large models of the same pretraining recipe into
//! score pairs for rank agreement, and resampling those pairs from
//! checkpoint windows to probe how noise moves decision accuracy.

use std::collections::BTreeMap;

use evalsnr_core::agreement::{decision_accuracy, PairedScores, TiePolicy};
use evalsnr_core::rng::derive_stream;
use evalsnr_core::series::{checkpoint_average, final_window};
use evalsnr_core::spread;

use crate::error::DataError;
use crate::par::par_map;
use crate::store::EvalStore;

/// How one model's curve collapses to a single score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scoring {
    /// Final checkpoint only.
    Final,
    /// Mean of the last k checkpoints.
    AvgLastK(usize),
}

impl Scoring {
    pub fn apply(self, model_id: &str, series: &[(u64, f64)]) -> Result<f64, DataError> {
        match self {
            Scoring::Final => series.last().map(|&(_, v)| v).ok_or_else(|| {
                DataError::Invalid(format!("model {model_id:?} has an empty curve"))
            }),
            Scoring::AvgLastK(k) => checkpoint_average(series, k).map_err(|_| {
                DataError::Invalid(format!(
                    "model {model_id:?} has {} checkpoints, fewer than averaging window {k}",
                    series.len()
                ))
            }),
        }
    }
}

/// Matches each small model to the large model sharing its group.
/// Returns (group, small_id, large_id) sorted by group.
pub fn pair_groups(
    store: &EvalStore,
    small_ids: &[String],
    large_ids: &[String],
) -> Result<Vec<(String, String, String)>, DataError> {
    fn by_group(
        store: &EvalStore,
        ids: &[String],
        side: &str,
    ) -> Result<BTreeMap<String, String>, DataError> {
        let mut map = BTreeMap::new();
        for id in ids {
            let meta = store.require_model(id)?;
            if let Some(previous) = map.insert(meta.group.clone(), id.clone()) {
                return Err(DataError::GroupMismatch(format!(
                    "{side} models {previous:?} and {id:?} share group {:?}",
                    meta.group
                )));
            }
        }
        Ok(map)
    }
    if small_ids.is_empty() || large_ids.is_empty() {
        return Err(DataError::Invalid("pairing needs models on both sides".into()));
    }
    let small = by_group(store, small_ids, "small")?;
    let large = by_group(store, large_ids, "large")?;
    if small.len() != large.len() || small.keys().ne(large.keys()) {
        let only_small: Vec<&String> =
            small.keys().filter(|g| !large.contains_key(*g)).collect();
        let only_large: Vec<&String> =
            large.keys().filter(|g| !small.contains_key(*g)).collect();
        return Err(DataError::GroupMismatch(format!(
            "groups only on small side: {only_small:?}; only on large side: {only_large:?}"
        )));
    }
    Ok(small
        .into_iter()
        .map(|(group, small_id)| {
            let large_id = large[&group].clone();
            (group, small_id, large_id)
        })
        .collect())
}

/// Paired scores per group under the given per-side scoring policies.
#[allow(clippy::too_many_arguments)]
pub fn paired_scores_from_store(
    store: &EvalStore,
    small_ids: &[String],
    large_ids: &[String],
    benchmark: &str,
    subtask: Option<&str>,
    metric: &str,
    small_scoring: Scoring,
    large_scoring: Scoring,
) -> Result<PairedScores, DataError> {
    let pairs = pair_groups(store, small_ids, large_ids)?;
    let mut labels = Vec::with_capacity(pairs.len());
    let mut small = Vec::with_capacity(pairs.len());
    let mut large = Vec::with_capacity(pairs.len());
    for (group, small_id, large_id) in pairs {
        let small_curve = store.require_curve(&small_id, benchmark, subtask, metric)?;
        let large_curve = store.require_curve(&large_id, benchmark, subtask, metric)?;
        labels.push(group);
        small.push(small_scoring.apply(&small_id, &small_curve)?);
        large.push(large_scoring.apply(&large_id, &large_curve)?);
    }
    Ok(PairedScores::new(labels, small, large)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResampleSummary {
    pub draws: Vec<f64>,
    pub mean: f64,
    /// Sample std across draws; zero when draws == 1.
    pub std: f64,
}

/// Decision accuracy distribution when each model's score is a uniformly
/// drawn checkpoint from its final window instead of the last point.
/// Each draw runs on its own derived RNG stream, so results do not depend
/// on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn resample_decision_accuracy(
    store: &EvalStore,
    small_ids: &[String],
    large_ids: &[String],
    benchmark: &str,
    subtask: Option<&str>,
    metric: &str,
    window_n: usize,
    draws: usize,
    rng_seed: u64,
    ties: TiePolicy,
    threads: usize,
) -> Result<ResampleSummary, DataError> {
    if draws == 0 {
        return Err(DataError::Invalid("draws must be at least 1".into()));
    }
    if window_n == 0 {
        return Err(DataError::Invalid("window must be at least 1".into()));
    }
    let pairs = pair_groups(store, small_ids, large_ids)?;
    // Windows are materialized once; draws only index into them.
    let mut windows = Vec::with_capacity(pairs.len());
    for (group, small_id, large_id) in &pairs {
        let window_of = |id: &str| -> Result<Vec<f64>, DataError> {
            let series = store.require_curve(id, benchmark, subtask, metric)?;
            final_window(&series, window_n).map_err(|_| {
                DataError::Invalid(format!(
                    "model {id:?} has {} checkpoints, fewer than window {window_n}",
                    series.len()
                ))
            })
        };
        windows.push((group.clone(), window_of(small_id)?, window_of(large_id)?));
    }

    let draw_indices: Vec<usize> = (0..draws).collect();
    let results: Vec<Result<f64, evalsnr_core::Error>> =
        par_map(&draw_indices, threads, |_, &draw| {
            let mut rng = derive_stream(rng_seed, draw as u64);
            let mut labels = Vec::with_capacity(windows.len());
            let mut small = Vec::with_capacity(windows.len());
            let mut large = Vec::with_capacity(windows.len());
            for (group, small_window, large_window) in &windows {
                labels.push(group.clone());
                small.push(small_window[rng.next_below(small_window.len() as u64) as usize]);
                large.push(large_window[rng.next_below(large_window.len() as u64) as usize]);
            }
            let paired = PairedScores::new(labels, small, large)?;
            decision_accuracy(&paired, ties)
        });
    let mut values = Vec::with_capacity(draws);
    for r in results {
        values.push(r?);
    }
    let mean = spread::mean(&values);
    let std = crate::analysis::column_std(&values);
    Ok(ResampleSummary { draws: values, mean, std })
}
