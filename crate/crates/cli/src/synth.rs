//! Seeded synthetic eval stores with known ground truth: paired
//! small/large populations for agreement oracles and parameter/token
//! ladders from a known power law for scaling-fit oracles.

use evalsnr_core::rng::split_mix;
use evalsnr_core::synth::{generate_curve, CurveConfig, NoiseMode};

use crate::error::DataError;
use crate::store::{EvalStore, Measurement, ModelMeta, StoreBuilder};

const SMALL_PARAMS: u64 = 150_000_000;
const SMALL_TOKENS: u64 = 3_000_000_000;
const LARGE_PARAMS: u64 = 1_000_000_000;
const LARGE_TOKENS: u64 = 20_000_000_000;

/// A population of model pairs whose true final ranking is known: group g
/// saturates toward a higher score than group g-1 at both scales.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub groups: usize,
    pub steps: u32,
    /// Relative std of multiplicative per-step noise; 0 draws nothing.
    pub noise_scale: f64,
    pub rng_seed: u64,
    pub benchmark: String,
    pub metric: String,
}

impl PopulationSpec {
    /// True saturation score of group g's small model; the large model
    /// saturates at a strictly monotone transform of it, so the true
    /// ranking agrees across scales.
    pub fn small_asymptote(&self, g: usize) -> f64 {
        0.3 + 0.4 * g as f64 / (self.groups - 1) as f64
    }

    pub fn large_asymptote(&self, g: usize) -> f64 {
        1.05 * self.small_asymptote(g) + 0.02
    }

    pub fn group_label(&self, g: usize) -> String {
        format!("g{g:02}")
    }
}

fn population_curve(asymptote: f64, noise_scale: f64, steps: u32, seed: u64) -> Vec<(u64, f64)> {
    let config = CurveConfig {
        asymptote,
        // Curves start at three quarters of their ceiling and rise.
        amplitude: 0.25 * asymptote,
        decay_exponent: 0.7,
        noise_scale,
        steps,
        rng_seed: seed,
        noise_mode: NoiseMode::Multiplicative,
    };
    generate_curve(&config)
}

pub fn synth_population(spec: &PopulationSpec) -> Result<EvalStore, DataError> {
    if spec.groups < 2 || spec.groups > 99 {
        return Err(DataError::Invalid("population needs 2..=99 groups".into()));
    }
    if spec.steps < 2 {
        return Err(DataError::Invalid("population curves need at least 2 steps".into()));
    }
    if !(spec.noise_scale >= 0.0 && spec.noise_scale.is_finite()) {
        return Err(DataError::Invalid("noise scale must be finite and nonnegative".into()));
    }
    let mut b = StoreBuilder::new();
    let base = split_mix(spec.rng_seed);
    for g in 0..spec.groups {
        let group = spec.group_label(g);
        let arms = [
            (format!("{group}-small"), SMALL_PARAMS, SMALL_TOKENS, spec.small_asymptote(g), 0u64),
            (format!("{group}-large"), LARGE_PARAMS, LARGE_TOKENS, spec.large_asymptote(g), 1),
        ];
        for (model_id, params, tokens, asymptote, arm) in arms {
            b.add_model(ModelMeta::new(
                model_id.clone(),
                group.clone(),
                params,
                tokens,
                None,
                None,
                None,
            )?)?;
            let seed = split_mix(base ^ (2 * g as u64 + arm));
            for (step, value) in population_curve(asymptote, spec.noise_scale, spec.steps, seed) {
                b.add_measurement(Measurement {
                    model_id: model_id.clone(),
                    step,
                    benchmark: spec.benchmark.clone(),
                    subtask: None,
                    metric: spec.metric.clone(),
                    value,
                })?;
            }
        }
    }
    Ok(b.build())
}

/// The generating constants behind a synthetic ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderTruth {
    pub param_coef: f64,
    pub token_coef: f64,
    pub irreducible: f64,
    pub param_exp: f64,
    pub token_exp: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub steepness: f64,
    pub midpoint: f64,
}

impl LadderTruth {
    pub fn loss(&self, params: f64, tokens: f64) -> f64 {
        self.param_coef * params.powf(-self.param_exp)
            + self.token_coef * tokens.powf(-self.token_exp)
            + self.irreducible
    }

    pub fn metric(&self, loss: f64) -> f64 {
        self.amplitude / (1.0 + (-self.steepness * (loss - self.midpoint)).exp()) + self.offset
    }
}

pub const DEFAULT_LADDER_TRUTH: LadderTruth = LadderTruth {
    param_coef: 350.0,
    token_coef: 290.0,
    irreducible: 1.8,
    param_exp: 0.32,
    token_exp: 0.26,
    amplitude: 0.65,
    offset: 0.15,
    steepness: -2.2,
    midpoint: 3.0,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LadderConfig {
    pub params: Vec<u64>,
    pub tokens: Vec<u64>,
    pub target_params: u64,
    pub target_tokens: u64,
    pub steps: u32,
    /// Relative std of multiplicative loss noise; 0 makes every final
    /// checkpoint land exactly on the generating law.
    pub noise_scale: f64,
    pub rng_seed: u64,
    pub benchmark: String,
    /// Also emit a "primary" metric, the sigmoid map of the loss curve.
    pub with_metric: bool,
    pub truth: LadderTruth,
}

impl LadderConfig {
    pub fn grid(
        params: Vec<u64>,
        tokens: Vec<u64>,
        target_params: u64,
        target_tokens: u64,
    ) -> Self {
        LadderConfig {
            params,
            tokens,
            target_params,
            target_tokens,
            steps: 40,
            noise_scale: 0.0,
            rng_seed: 0,
            benchmark: "bench".into(),
            with_metric: true,
            truth: DEFAULT_LADDER_TRUTH,
        }
    }

    pub fn ladder_id(params: u64, tokens: u64) -> String {
        format!("n{params}-d{tokens}")
    }

    /// Ladder model ids in grid order, excluding the target.
    pub fn train_ids(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.params.len() * self.tokens.len());
        for &n in &self.params {
            for &d in &self.tokens {
                out.push(Self::ladder_id(n, d));
            }
        }
        out
    }
}

pub const LADDER_TARGET_ID: &str = "target";

/// Training loss that decays onto the generating law: the final
/// checkpoint carries no excess, so a noiseless ladder ends exactly on
/// truth.loss(N, D).
fn ladder_curve(
    true_loss: f64,
    steps: u32,
    noise_scale: f64,
    seed: u64,
) -> Vec<(u64, f64)> {
    let span = (steps - 1) as f64;
    let mut rng = evalsnr_core::rng::derive_stream(seed, 0);
    (0..steps)
        .map(|t| {
            let excess = 0.5 * ((span - t as f64) / span).powf(1.5);
            let clean = true_loss * (1.0 + excess);
            let value = if noise_scale == 0.0 {
                clean
            } else {
                clean * (1.0 + noise_scale * rng.next_normal())
            };
            (t as u64, value)
        })
        .collect()
}

/// Loss (and optionally metric) curves for every grid model plus the
/// held-out target, all generated from `truth`.
pub fn synth_ladder(cfg: &LadderConfig) -> Result<EvalStore, DataError> {
    if cfg.params.is_empty() || cfg.tokens.is_empty() {
        return Err(DataError::Invalid("ladder needs parameter and token grids".into()));
    }
    if cfg.steps < 2 {
        return Err(DataError::Invalid("ladder curves need at least 2 steps".into()));
    }
    if !(cfg.noise_scale >= 0.0 && cfg.noise_scale.is_finite()) {
        return Err(DataError::Invalid("noise scale must be finite and nonnegative".into()));
    }
    let mut scales: Vec<(String, u64, u64)> = Vec::new();
    for &n in &cfg.params {
        for &d in &cfg.tokens {
            scales.push((LadderConfig::ladder_id(n, d), n, d));
        }
    }
    scales.push((LADDER_TARGET_ID.into(), cfg.target_params, cfg.target_tokens));

    let mut b = StoreBuilder::new();
    let base = split_mix(cfg.rng_seed);
    for (i, (model_id, params, tokens)) in scales.iter().enumerate() {
        b.add_model(ModelMeta::new(
            model_id.clone(),
            model_id.clone(),
            *params,
            *tokens,
            None,
            None,
            None,
        )?)?;
        let true_loss = cfg.truth.loss(*params as f64, *tokens as f64);
        let curve = ladder_curve(true_loss, cfg.steps, cfg.noise_scale, split_mix(base ^ i as u64));
        for &(step, loss) in &curve {
            b.add_measurement(Measurement {
                model_id: model_id.clone(),
                step,
                benchmark: cfg.benchmark.clone(),
                subtask: None,
                metric: "loss".into(),
                value: loss,
            })?;
            if cfg.with_metric {
                b.add_measurement(Measurement {
                    model_id: model_id.clone(),
                    step,
                    benchmark: cfg.benchmark.clone(),
                    subtask: None,
                    metric: "primary".into(),
                    value: cfg.truth.metric(loss),
                })?;
            }
        }
    }
    Ok(b.build())
}

/// One standalone saturating curve, exposed for the curve synthesis mode.
pub fn synth_curve(config: &CurveConfig, model_id: &str, benchmark: &str, metric: &str) -> EvalStore {
    let mut b = StoreBuilder::new();
    b.add_model(
        ModelMeta::new(model_id.into(), model_id.into(), 1, 1, None, None, None)
            .expect("static meta is valid"),
    )
    .expect("single model");
    for (step, value) in generate_curve(config) {
        b.add_measurement(Measurement {
            model_id: model_id.into(),
            step,
            benchmark: benchmark.into(),
            subtask: None,
            metric: metric.into(),
            value,
        })
        .expect("generated steps are distinct");
    }
    b.build()
}
