//! Two-stage performance extrapolation: a power law in parameter and token
//! counts models task loss, and a logistic curve maps loss to the task
//! metric. Both stages are fit by deterministic multistart Nelder-Mead.

use alloc::vec::Vec;

use crate::simplex::{minimize, SimplexOptions};
use crate::{math, Error};

pub const DEFAULT_HUBER_DELTA: f64 = 1e-3;

/// One trained model: size, data budget, measured task loss, and
/// optionally the downstream metric at the same checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPoint {
    pub params: u64,
    pub tokens: u64,
    pub loss: f64,
    pub metric: Option<f64>,
}

/// loss(N, D) = param_coef / N^param_exp + token_coef / D^token_exp + irreducible.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    pub param_coef: f64,
    pub token_coef: f64,
    pub irreducible: f64,
    pub param_exp: f64,
    pub token_exp: f64,
    /// Huber objective over log-space residuals at the returned parameters.
    pub fit_loss: f64,
    pub converged: bool,
}

impl PowerLawFit {
    pub fn predict(&self, params: f64, tokens: f64) -> f64 {
        self.param_coef * math::powf(params, -self.param_exp)
            + self.token_coef * math::powf(tokens, -self.token_exp)
            + self.irreducible
    }
}

/// Predicted task loss at a (parameter count, token count) pair.
pub fn predict_loss(fit: &PowerLawFit, params: f64, tokens: f64) -> f64 {
    assert!(params > 0.0 && tokens > 0.0, "prediction requires positive scale");
    fit.predict(params, tokens)
}

/// Quadratic within `delta` of zero, linear beyond it.
pub fn huber(residual: f64, delta: f64) -> f64 {
    assert!(delta > 0.0, "huber delta must be positive");
    let a = math::abs(residual);
    if a <= delta {
        0.5 * residual * residual
    } else {
        delta * (a - 0.5 * delta)
    }
}

/// Multistart grid over (ln A, ln B, E, alpha, beta).
#[derive(Debug, Clone)]
pub struct StartGrid {
    pub log_coefs: Vec<f64>,
    pub irreducibles: Vec<f64>,
    pub exponents: Vec<f64>,
}

impl StartGrid {
    /// Default grid: ln-coefficients {0, 5, 10, 15, 20} on both axes,
    /// irreducible {0, min_loss/2, min_loss}, exponents {0.2, 0.5, 0.8};
    /// 675 starts in total.
    pub fn standard(min_loss: f64) -> Self {
        StartGrid {
            log_coefs: alloc::vec![0.0, 5.0, 10.0, 15.0, 20.0],
            irreducibles: alloc::vec![0.0, 0.5 * min_loss, min_loss],
            exponents: alloc::vec![0.2, 0.5, 0.8],
        }
    }

    /// Start vectors [ln A, ln B, E, alpha, beta] in a fixed nesting order.
    pub fn starts(&self) -> Vec<[f64; 5]> {
        let mut out = Vec::new();
        for &la in &self.log_coefs {
            for &lb in &self.log_coefs {
                for &e in &self.irreducibles {
                    for &al in &self.exponents {
                        for &be in &self.exponents {
                            out.push([la, lb, e, al, be]);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Starts polished with full Nelder-Mead after screening by start objective.
const POLISH_KEEP: usize = 30;

struct LogPoints {
    ln_params: Vec<f64>,
    ln_tokens: Vec<f64>,
    ln_loss: Vec<f64>,
}

fn validate_points(points: &[ScalingPoint]) -> Result<LogPoints, Error> {
    if points.len() < 5 {
        return Err(Error::DegenerateFit("power-law fit needs at least 5 points"));
    }
    let mut distinct_params = true;
    let mut distinct_tokens = true;
    for p in points {
        if p.params == 0 || p.tokens == 0 {
            return Err(Error::DegenerateFit("scaling points need positive params and tokens"));
        }
        if !(p.loss > 0.0) || !p.loss.is_finite() {
            return Err(Error::DegenerateFit("log-space fit requires positive finite losses"));
        }
    }
    distinct_params &= points.iter().any(|p| p.params != points[0].params);
    distinct_tokens &= points.iter().any(|p| p.tokens != points[0].tokens);
    if !distinct_params || !distinct_tokens {
        return Err(Error::DegenerateFit(
            "power-law fit needs at least 2 distinct params and token counts",
        ));
    }
    Ok(LogPoints {
        ln_params: points.iter().map(|p| math::ln(p.params as f64)).collect(),
        ln_tokens: points.iter().map(|p| math::ln(p.tokens as f64)).collect(),
        ln_loss: points.iter().map(|p| math::ln(p.loss)).collect(),
    })
}

fn power_objective(lp: &LogPoints, delta: f64, x: &[f64]) -> f64 {
    let (ln_a, ln_b, e, alpha, beta) = (x[0], x[1], x[2], x[3], x[4]);
    if e < 0.0 || alpha <= 0.0 || beta <= 0.0 {
        return f64::INFINITY;
    }
    let mut acc = 0.0;
    for i in 0..lp.ln_loss.len() {
        let pred = math::exp(ln_a - alpha * lp.ln_params[i])
            + math::exp(ln_b - beta * lp.ln_tokens[i])
            + e;
        if !(pred > 0.0) {
            return f64::INFINITY;
        }
        acc += huber(math::ln(pred) - lp.ln_loss[i], delta);
        if acc == f64::INFINITY {
            return acc;
        }
    }
    acc
}

/// Fits the power law by minimizing the Huber loss of log-space residuals
/// over every grid start. The returned objective is never worse than the
/// objective at any start (asserted); `converged` reports whether the
/// winning descent hit the f-tolerance within its evaluation budget.
pub fn fit_power_law(
    points: &[ScalingPoint],
    delta: f64,
    grid: Option<&StartGrid>,
) -> Result<PowerLawFit, Error> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("huber delta must be positive"));
    }
    let lp = validate_points(points)?;
    let min_loss = points.iter().map(|p| p.loss).fold(f64::INFINITY, f64::min);
    let standard;
    let grid = match grid {
        Some(g) => g,
        None => {
            standard = StartGrid::standard(min_loss);
            &standard
        }
    };
    let starts = grid.starts();
    if starts.is_empty() {
        return Err(Error::InvalidParameter("start grid is empty"));
    }
    let mut scored: Vec<(f64, usize)> = starts
        .iter()
        .enumerate()
        .map(|(i, s)| (power_objective(&lp, delta, s), i))
        .collect();
    let min_start = scored.iter().map(|&(v, _)| v).fold(f64::INFINITY, f64::min);
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let steps = [1.0, 1.0, 0.25 * min_loss.max(0.1), 0.1, 0.1];
    let opts = SimplexOptions::default();
    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    for &(start_value, idx) in scored.iter().take(POLISH_KEEP) {
        if start_value.is_infinite() && best.is_some() {
            break;
        }
        let mut objective = |x: &[f64]| power_objective(&lp, delta, x);
        let res = minimize(&mut objective, &starts[idx], &steps, &opts);
        let better = match &best {
            Some((value, _, _)) => res.value < *value,
            None => true,
        };
        if better {
            best = Some((res.value, res.point, res.converged));
        }
    }
    let (value, x, converged) = best.expect("at least one start is polished");
    assert!(value <= min_start, "multistart descent must not lose to its own starts");
    Ok(PowerLawFit {
        param_coef: math::exp(x[0]),
        token_coef: math::exp(x[1]),
        irreducible: x[2],
        param_exp: x[3],
        token_exp: x[4],
        fit_loss: value,
        converged,
    })
}

/// Huber objective of log-space residuals for an explicit fit; the same
/// quantity `fit_loss` reports, recomputed from public fields.
pub fn huber_objective(
    points: &[ScalingPoint],
    delta: f64,
    fit: &PowerLawFit,
) -> Result<f64, Error> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("huber delta must be positive"));
    }
    let mut acc = 0.0;
    for p in points {
        if !(p.loss > 0.0) {
            return Err(Error::DegenerateFit("log-space fit requires positive finite losses"));
        }
        let pred = fit.predict(p.params as f64, p.tokens as f64);
        if !(pred > 0.0) {
            return Ok(f64::INFINITY);
        }
        acc += huber(math::ln(pred) - math::ln(p.loss), delta);
    }
    Ok(acc)
}

/// metric(L) = amplitude / (1 + exp(-steepness * (L - midpoint))) + offset.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmoidFit {
    pub amplitude: f64,
    pub offset: f64,
    pub steepness: f64,
    pub midpoint: f64,
    /// Sum of squared residuals at the returned parameters.
    pub fit_loss: f64,
    pub converged: bool,
}

impl SigmoidFit {
    pub fn eval(&self, loss: f64) -> f64 {
        let u = self.steepness * (loss - self.midpoint);
        self.amplitude / (1.0 + math::exp(-u)) + self.offset
    }
}

/// Least-squares logistic fit of (loss, metric) pairs. The amplitude is
/// constrained to [0, 1.5 * metric range]; initialization follows the
/// data (offset = min metric, amplitude = range, midpoint = median loss,
/// steepness sign from the loss-metric covariance with magnitude 1).
/// A constant metric column short-circuits to a flat curve.
pub fn fit_sigmoid(pairs: &[(f64, f64)]) -> Result<SigmoidFit, Error> {
    if pairs.len() < 4 {
        return Err(Error::TooFewValues { needed: 4, got: pairs.len() });
    }
    for &(loss, metric) in pairs {
        if !loss.is_finite() || !metric.is_finite() {
            return Err(Error::DegenerateFit("sigmoid fit requires finite pairs"));
        }
    }
    let losses: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let metrics: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let min_m = metrics.iter().copied().fold(f64::INFINITY, f64::min);
    let max_m = metrics.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max_m - min_m;
    let mut sorted_losses = losses.clone();
    sorted_losses.sort_unstable_by(f64::total_cmp);
    let median_loss = {
        let n = sorted_losses.len();
        if n % 2 == 1 {
            sorted_losses[n / 2]
        } else {
            0.5 * (sorted_losses[n / 2 - 1] + sorted_losses[n / 2])
        }
    };
    if range == 0.0 {
        return Ok(SigmoidFit {
            amplitude: 0.0,
            offset: min_m,
            steepness: -1.0,
            midpoint: median_loss,
            fit_loss: 0.0,
            converged: true,
        });
    }
    let mean_l = crate::spread::mean(&losses);
    let mean_m = crate::spread::mean(&metrics);
    let cov: f64 = losses
        .iter()
        .zip(&metrics)
        .map(|(&l, &m)| (l - mean_l) * (m - mean_m))
        .sum();
    let k0 = if cov > 0.0 { 1.0 } else { -1.0 };
    let loss_range = sorted_losses[sorted_losses.len() - 1] - sorted_losses[0];
    let cap = 1.5 * range;
    let mut objective = |x: &[f64]| -> f64 {
        let (a, b, k, l0) = (x[0], x[1], x[2], x[3]);
        if !(0.0..=cap).contains(&a) {
            return f64::INFINITY;
        }
        let mut acc = 0.0;
        for &(loss, metric) in pairs {
            let u = k * (loss - l0);
            let pred = a / (1.0 + math::exp(-u)) + b;
            let r = pred - metric;
            acc += r * r;
        }
        acc
    };
    let start = [range, min_m, k0, median_loss];
    let steps = [0.25 * range, 0.25 * range, 0.5, 0.25 * loss_range.max(0.1)];
    let res = minimize(&mut objective, &start, &steps, &SimplexOptions::default());
    Ok(SigmoidFit {
        amplitude: res.point[0],
        offset: res.point[1],
        steepness: res.point[2],
        midpoint: res.point[3],
        fit_loss: res.value,
        converged: res.converged,
    })
}

/// Power law and sigmoid composed: scale -> loss -> metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingChain {
    pub power: PowerLawFit,
    pub sigmoid: SigmoidFit,
}

impl ScalingChain {
    pub fn predict_metric(&self, params: f64, tokens: f64) -> f64 {
        self.sigmoid.eval(self.power.predict(params, tokens))
    }
}

/// |predicted - actual| / |actual|; undefined at actual == 0.
pub fn prediction_error(predicted: f64, actual: f64) -> Result<f64, Error> {
    if actual == 0.0 {
        return Err(Error::ZeroActual);
    }
    Ok(math::abs(predicted - actual) / math::abs(actual))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn huber_values() {
        assert_eq!(huber(0.0, 1.0), 0.0);
        assert_eq!(huber(0.5, 1.0), 0.125);
        assert_eq!(huber(2.0, 1.0), 1.5);
        assert_eq!(huber(-2.0, 1.0), 1.5);
        // Continuous at the elbow: both branches give delta^2 / 2.
        assert!((huber(1.0, 1.0) - 0.5).abs() < 1e-15);
    }

    fn hand_fit() -> PowerLawFit {
        PowerLawFit {
            param_coef: 100.0,
            token_coef: 0.0,
            irreducible: 0.5,
            param_exp: 0.5,
            token_exp: 0.3,
            fit_loss: 0.0,
            converged: true,
        }
    }

    #[test]
    fn predict_loss_hand_value() {
        // 100 / sqrt(1e4) + 0 + 0.5 = 1.5.
        let v = predict_loss(&hand_fit(), 1e4, 1e6);
        assert!((v - 1.5).abs() < 1e-12);
    }

    #[test]
    fn predict_loss_zero_coefs_gives_irreducible() {
        let fit = PowerLawFit { param_coef: 0.0, ..hand_fit() };
        assert_eq!(predict_loss(&fit, 123.0, 456.0), 0.5);
    }

    #[test]
    fn predictions_decrease_with_scale() {
        let fit = PowerLawFit { token_coef: 50.0, ..hand_fit() };
        let mut prev = f64::INFINITY;
        for exp in 6..12 {
            let n = crate::math::powf(10.0, exp as f64);
            let v = predict_loss(&fit, n, 20.0 * n);
            assert!(v < prev);
            prev = v;
        }
    }

    fn ladder(true_fit: &PowerLawFit) -> Vec<ScalingPoint> {
        let mut points = Vec::new();
        for &n in &[1e7, 3e7, 1e8, 3e8, 1e9] {
            for &ratio in &[10.0, 20.0, 40.0] {
                let d = n * ratio;
                points.push(ScalingPoint {
                    params: n as u64,
                    tokens: d as u64,
                    loss: true_fit.predict(n, d),
                    metric: None,
                });
            }
        }
        points
    }

    #[test]
    fn fit_recovers_noiseless_power_law() {
        let truth = PowerLawFit {
            param_coef: 400.0,
            token_coef: 1100.0,
            irreducible: 1.2,
            param_exp: 0.42,
            token_exp: 0.33,
            fit_loss: 0.0,
            converged: true,
        };
        let points = ladder(&truth);
        let fit = fit_power_law(&points, DEFAULT_HUBER_DELTA, None).unwrap();
        assert!(fit.converged);
        assert!((fit.irreducible - truth.irreducible).abs() / truth.irreducible < 0.01);
        assert!((fit.param_exp - truth.param_exp).abs() / truth.param_exp < 0.01);
        assert!((fit.token_exp - truth.token_exp).abs() / truth.token_exp < 0.01);
        // Held-out prediction an order of magnitude out.
        let predicted = fit.predict(1e10, 2e11);
        let actual = truth.predict(1e10, 2e11);
        assert!(
            prediction_error(predicted, actual).unwrap() < 1e-3,
            "{predicted} vs {actual}"
        );
    }

    #[test]
    fn fit_on_constant_losses_returns_floor() {
        let points: Vec<ScalingPoint> = ladder(&hand_fit())
            .into_iter()
            .map(|p| ScalingPoint { loss: 3.25, ..p })
            .collect();
        let fit = fit_power_law(&points, DEFAULT_HUBER_DELTA, None).unwrap();
        let predicted = fit.predict(5e9, 1e11);
        assert!((predicted - 3.25).abs() / 3.25 < 1e-6, "predicted {predicted}");
    }

    #[test]
    fn fit_loss_matches_recomputed_objective() {
        let points = ladder(&PowerLawFit { token_coef: 900.0, ..hand_fit() });
        let fit = fit_power_law(&points, DEFAULT_HUBER_DELTA, None).unwrap();
        let recomputed = huber_objective(&points, DEFAULT_HUBER_DELTA, &fit).unwrap();
        assert!((fit.fit_loss - recomputed).abs() < 1e-9 + 1e-6 * fit.fit_loss.abs());
    }

    #[test]
    fn fit_rejects_degenerate_point_sets() {
        let few = ladder(&hand_fit()).into_iter().take(4).collect::<Vec<_>>();
        assert!(matches!(
            fit_power_law(&few, DEFAULT_HUBER_DELTA, None),
            Err(Error::DegenerateFit(_))
        ));
        let same_n: Vec<ScalingPoint> = (0..6)
            .map(|i| ScalingPoint {
                params: 1000,
                tokens: 1000 * (i + 1),
                loss: 2.0,
                metric: None,
            })
            .collect();
        assert!(matches!(
            fit_power_law(&same_n, DEFAULT_HUBER_DELTA, None),
            Err(Error::DegenerateFit(_))
        ));
        let mut bad_loss = ladder(&hand_fit());
        bad_loss[0].loss = -1.0;
        assert!(matches!(
            fit_power_law(&bad_loss, DEFAULT_HUBER_DELTA, None),
            Err(Error::DegenerateFit(_))
        ));
    }

    fn true_sigmoid() -> SigmoidFit {
        SigmoidFit {
            amplitude: 0.6,
            offset: 0.25,
            steepness: -3.0,
            midpoint: 1.0,
            fit_loss: 0.0,
            converged: true,
        }
    }

    #[test]
    fn sigmoid_eval_midpoint_and_asymptotes() {
        let s = true_sigmoid();
        // Exactly a/2 + b at the midpoint.
        assert_eq!(s.eval(1.0), 0.6 / 2.0 + 0.25);
        // Steepness is negative: low loss approaches a + b, high loss b.
        assert!((s.eval(-30.0) - 0.85).abs() < 1e-12);
        assert!((s.eval(30.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_fit_recovers_clean_pairs() {
        let truth = true_sigmoid();
        let pairs: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let loss = 0.3 + 0.2 * i as f64;
                (loss, truth.eval(loss))
            })
            .collect();
        let fit = fit_sigmoid(&pairs).unwrap();
        assert!((fit.amplitude - 0.6).abs() < 0.006, "a {}", fit.amplitude);
        assert!((fit.offset - 0.25).abs() < 0.0025, "b {}", fit.offset);
        assert!((fit.steepness + 3.0).abs() < 0.03, "k {}", fit.steepness);
        assert!((fit.midpoint - 1.0).abs() < 0.01, "L0 {}", fit.midpoint);
        let held_out = fit.eval(1.7);
        assert!(prediction_error(held_out, truth.eval(1.7)).unwrap() < 0.005);
    }

    #[test]
    fn sigmoid_fit_constant_metric_short_circuits() {
        let pairs = [(0.5, 0.4), (1.0, 0.4), (1.5, 0.4), (2.0, 0.4)];
        let fit = fit_sigmoid(&pairs).unwrap();
        assert_eq!(fit.amplitude, 0.0);
        assert_eq!(fit.offset, 0.4);
        assert!(fit.converged);
        assert_eq!(fit.eval(0.123), 0.4);
    }

    #[test]
    fn sigmoid_fit_needs_four_pairs() {
        assert!(matches!(
            fit_sigmoid(&[(1.0, 0.1), (2.0, 0.2), (3.0, 0.3)]),
            Err(Error::TooFewValues { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn chain_composes_stages() {
        let chain = ScalingChain {
            power: PowerLawFit { token_coef: 50.0, ..hand_fit() },
            sigmoid: true_sigmoid(),
        };
        let loss = chain.power.predict(1e8, 2e9);
        assert_eq!(chain.predict_metric(1e8, 2e9), chain.sigmoid.eval(loss));
    }

    #[test]
    fn prediction_error_cases() {
        assert_eq!(prediction_error(1.0, 1.0).unwrap(), 0.0);
        assert!((prediction_error(1.05, 1.0).unwrap() - 0.05).abs() < 1e-15);
        assert!((prediction_error(0.9, -1.0).unwrap() - 1.9).abs() < 1e-15);
        assert_eq!(prediction_error(0.5, 0.0), Err(Error::ZeroActual));
    }
}
