//! Seeded synthetic training curves with a known saturating trend and
//! known noise level, for exercising every estimator against ground truth.

use alloc::vec::Vec;

use crate::math;
use crate::rng::derive_stream;
use crate::series::Step;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// value = trend * (1 + eps), eps ~ N(0, noise_scale); noise_scale is
    /// the relative std the final-window estimator should recover on a
    /// flat tail.
    #[default]
    Multiplicative,
    /// value = trend + eps, eps ~ N(0, noise_scale); noise_scale is an
    /// absolute std.
    Additive,
}

/// trend(t) = asymptote - amplitude * (t + 1)^(-decay_exponent),
/// then noised per `noise_mode`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveConfig {
    pub asymptote: f64,
    pub amplitude: f64,
    pub decay_exponent: f64,
    pub noise_scale: f64,
    pub steps: u32,
    pub rng_seed: u64,
    pub noise_mode: NoiseMode,
}

impl CurveConfig {
    pub fn trend(&self, t: u32) -> f64 {
        self.asymptote - self.amplitude * math::powf((t + 1) as f64, -self.decay_exponent)
    }
}

/// One value per step 0..steps. Zero noise yields exactly the trend (the
/// generator draws nothing); otherwise one normal per step from a stream
/// derived from the config seed.
pub fn generate_curve(config: &CurveConfig) -> Vec<(Step, f64)> {
    assert!(config.steps >= 1, "curve needs at least one step");
    assert!(config.decay_exponent > 0.0, "decay exponent must be positive");
    assert!(config.noise_scale >= 0.0, "noise scale must be nonnegative");
    let mut rng = derive_stream(config.rng_seed, 0);
    (0..config.steps)
        .map(|t| {
            let trend = config.trend(t);
            let value = if config.noise_scale == 0.0 {
                trend
            } else {
                let eps = config.noise_scale * rng.next_normal();
                match config.noise_mode {
                    NoiseMode::Multiplicative => trend * (1.0 + eps),
                    NoiseMode::Additive => trend + eps,
                }
            };
            (t as Step, value)
        })
        .collect()
}
