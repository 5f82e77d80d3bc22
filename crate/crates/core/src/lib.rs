//! Numeric kernels for quantifying how reliably a benchmark separates
//! language models: population spread (signal), step-to-step variability
//! (noise), rank agreement between model scales, two-stage scaling-law
//! fits, chi-squared sample-size bounds, and seeded synthetic curves for
//! testing all of the above.
//!
//! Everything here is pure computation over slices and owned vectors; no
//! IO, no global state, no platform randomness. The companion `evalsnr`
//! crate layers file formats and a CLI on top.

#![cfg_attr(not(test), no_std)]
// Validation compares like `!(x > 0.0)` are deliberate: unlike the
// suggested `x <= 0.0`, they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
mod math;

pub mod agreement;
pub mod bpb;
pub mod correlation;
pub mod rng;
pub mod sample_size;
pub mod scaling;
pub mod series;
pub mod simplex;
pub mod special;
pub mod spread;
pub mod synth;

pub use error::Error;
