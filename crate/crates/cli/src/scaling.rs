//! Scaling-law fitting over stored ladders: extracting (N, D, loss,
//! metric) points from curves, fitting the two-stage chain, and scoring a
//! held-out target against its own checkpoint noise.

use evalsnr_core::scaling::{
    fit_power_law, fit_sigmoid, prediction_error, PowerLawFit, SigmoidFit, DEFAULT_HUBER_DELTA,
};
use evalsnr_core::series::final_window;
use evalsnr_core::spread;

use crate::error::DataError;
use crate::pairing::Scoring;
use crate::store::EvalStore;

pub use evalsnr_core::scaling::ScalingPoint;

/// One ladder model turned into a fit point. Loss comes from the loss
/// metric's curve, the downstream score (when requested) from the metric
/// curve, both collapsed by the same scoring policy.
pub fn scaling_points(
    store: &EvalStore,
    model_ids: &[String],
    benchmark: &str,
    subtask: Option<&str>,
    loss_metric: &str,
    metric: Option<&str>,
    scoring: Scoring,
) -> Result<Vec<ScalingPoint>, DataError> {
    if model_ids.is_empty() {
        return Err(DataError::Invalid("scaling fit needs training models".into()));
    }
    let mut points = Vec::with_capacity(model_ids.len());
    for id in model_ids {
        let meta = store.require_model(id)?;
        let loss_curve = store.require_curve(id, benchmark, subtask, loss_metric)?;
        let loss = scoring.apply(id, &loss_curve)?;
        let metric_value = match metric {
            None => None,
            Some(m) => {
                let metric_curve = store.require_curve(id, benchmark, subtask, m)?;
                Some(scoring.apply(id, &metric_curve)?)
            }
        };
        points.push(ScalingPoint {
            params: meta.params,
            tokens: meta.tokens,
            loss,
            metric: metric_value,
        });
    }
    Ok(points)
}

/// Fitted chain plus everything the fit report needs. The sigmoid stage
/// is present only when a downstream metric was requested.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub benchmark: String,
    pub loss_metric: String,
    pub metric: Option<String>,
    pub n_points: usize,
    pub power: PowerLawFit,
    pub sigmoid: Option<SigmoidFit>,
}

#[allow(clippy::too_many_arguments)]
pub fn fit_chain(
    store: &EvalStore,
    train_ids: &[String],
    benchmark: &str,
    subtask: Option<&str>,
    loss_metric: &str,
    metric: Option<&str>,
    scoring: Scoring,
    delta: Option<f64>,
) -> Result<FitReport, DataError> {
    let points = scaling_points(store, train_ids, benchmark, subtask, loss_metric, metric, scoring)?;
    let power = fit_power_law(&points, delta.unwrap_or(DEFAULT_HUBER_DELTA), None)?;
    let sigmoid = match metric {
        None => None,
        Some(_) => {
            let pairs: Vec<(f64, f64)> = points
                .iter()
                .map(|p| (p.loss, p.metric.expect("metric requested for every point")))
                .collect();
            Some(fit_sigmoid(&pairs)?)
        }
    };
    Ok(FitReport {
        benchmark: benchmark.into(),
        loss_metric: loss_metric.into(),
        metric: metric.map(String::from),
        n_points: points.len(),
        power,
        sigmoid,
    })
}

/// Relative std of the target's final `n` scores of the predicted
/// quantity; forecast error below this is indistinguishable from the
/// target's own checkpoint jitter.
pub fn target_noise_bound(
    store: &EvalStore,
    target_id: &str,
    benchmark: &str,
    subtask: Option<&str>,
    metric: &str,
    window_n: usize,
) -> Result<f64, DataError> {
    let curve = store.require_curve(target_id, benchmark, subtask, metric)?;
    let window = final_window(&curve, window_n).map_err(|_| {
        DataError::Invalid(format!(
            "target {target_id:?} has {} checkpoints, fewer than window {window_n}",
            curve.len()
        ))
    })?;
    Ok(spread::rel_std(&window)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub fit: FitReport,
    pub target_id: String,
    pub predicted: f64,
    pub actual: f64,
    pub rel_error: f64,
    pub noise_bound: f64,
    pub within_noise: bool,
    pub window_n: usize,
}

/// Fits on the training models and forecasts the target model's final
/// score of the predicted quantity (the metric when given, else the loss).
#[allow(clippy::too_many_arguments)]
pub fn fit_and_predict(
    store: &EvalStore,
    train_ids: &[String],
    target_id: &str,
    benchmark: &str,
    subtask: Option<&str>,
    loss_metric: &str,
    metric: Option<&str>,
    scoring: Scoring,
    window_n: usize,
    delta: Option<f64>,
) -> Result<PredictionReport, DataError> {
    let fit = fit_chain(store, train_ids, benchmark, subtask, loss_metric, metric, scoring, delta)?;
    let target = store.require_model(target_id)?;
    let (n, d) = (target.params as f64, target.tokens as f64);
    let predicted = match &fit.sigmoid {
        None => fit.power.predict(n, d),
        Some(sigmoid) => sigmoid.eval(fit.power.predict(n, d)),
    };
    let predicted_metric = metric.unwrap_or(loss_metric);
    let actual_curve = store.require_curve(target_id, benchmark, subtask, predicted_metric)?;
    let actual = actual_curve.last().expect("require_curve rejects empty").1;
    let rel_error = prediction_error(predicted, actual)?;
    let noise_bound =
        target_noise_bound(store, target_id, benchmark, subtask, predicted_metric, window_n)?;
    Ok(PredictionReport {
        fit,
        target_id: target_id.into(),
        predicted,
        actual,
        rel_error,
        noise_bound,
        within_noise: rel_error <= noise_bound,
        window_n,
    })
}
