//! Benchmark-reliability toolkit over logged evaluation scores: ingestion
//! of measurement tables, signal/noise/SNR analysis, small-to-large rank
//! agreement, scaling-law prediction, and the interventions that improve
//! a benchmark's statistics. The `evalsnr` binary in this crate fronts it
//! all; the numeric kernels live in `evalsnr-core`.

// Validation compares like `!(x > 0.0)` are deliberate: unlike the
// suggested `x <= 0.0`, they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod ingest;
pub mod interventions;
pub mod pairing;
pub mod par;
pub mod report;
pub mod scaling;
pub mod store;
pub mod synth;
