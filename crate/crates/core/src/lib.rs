//! Confidence calibration with class-similarity label smoothing.
//!
//! - [`data`] and [`rng`]: validated containers and deterministic streams.
//! - [`metrics`]: histogram and kernel ECE, reliability bins, confidence
//!   histograms.
//! - [`similarity`]: inter-class distances and similarity distributions.
//! - [`labels`]: one-hot, uniform and similarity smooth targets.
//! - [`trainer`]: small softmax classifiers and temperature scaling.
//! - [`harness`]: synthetic data, file formats, experiments and sweeps.

pub mod data;
pub mod error;
pub mod harness;
pub mod labels;
pub mod metrics;
pub mod rng;
pub mod similarity;
pub mod trainer;

pub use error::{Error, Result};
