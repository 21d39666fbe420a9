//! Calibration estimators.
//!
//! Two notions of calibration are measured. *Prediction* calibration only
//! looks at the winning class: among samples predicted with confidence `p`,
//! a fraction `p` should be correct. *Output* calibration asks the same of
//! every class probability: among all `(sample, class)` pairs with
//! probability `p`, a fraction `p` should be the true class. Output
//! calibration implies prediction calibration.
//!
//! Both notions have a histogram estimator ([`histogram_ece_prediction`],
//! [`histogram_ece_output`]) and a kernel estimator ([`kde_ece`]).

mod confidence;
mod histogram;
mod kde;

pub use confidence::{confidence_histogram, ConfidenceHistogram};
pub use histogram::{
    bin_index, histogram_ece, histogram_ece_output, histogram_ece_prediction, reliability_bins,
};
pub use kde::{kde_bandwidth, kde_ece, kde_ece_points, triweight, KdeConfig, KdeEstimate, KdeEvalMode, KdeNorm};

use std::fmt;
use std::str::FromStr;

use crate::data::{LabelVector, ProbMatrix};
use crate::error::{mismatch, Error, Result};

/// Default number of histogram bins.
pub const DEFAULT_BINS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Histogram,
    Kde,
}

/// Which confidences are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Maximum probability of each row against correctness of the argmax.
    Prediction,
    /// Every entry `p_i^k` against `1(y_i = k)`.
    Output,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Histogram => "histogram",
            Estimator::Kde => "kde",
        })
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Prediction => "prediction",
            Variant::Output => "output",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "histogram" => Ok(Estimator::Histogram),
            "kde" => Ok(Estimator::Kde),
            _ => Err(Error::InvalidArgument(format!("unknown estimator '{s}'"))),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prediction" => Ok(Variant::Prediction),
            "output" => Ok(Variant::Output),
            _ => Err(Error::InvalidArgument(format!("unknown variant '{s}'"))),
        }
    }
}

/// One reliability-diagram bin `(lower, upper]`.
///
/// Empty bins report zero likelihood and confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinStats {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// Fraction of pooled entries that were correct (or the true class).
    pub likelihood: f64,
    /// Mean pooled confidence.
    pub confidence: f64,
}

impl BinStats {
    pub fn gap(&self) -> f64 {
        (self.likelihood - self.confidence).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub estimator: Estimator,
    pub variant: Variant,
    pub ece: f64,
    /// Histogram bins; empty for the kernel estimator.
    pub bins: Vec<BinStats>,
    /// Number of pooled confidence values.
    pub n_effective: usize,
    /// Kernel estimator only: points with no other point inside the kernel
    /// support, which contribute zero.
    pub empty_neighborhoods: usize,
    /// Kernel estimator only.
    pub bandwidth: Option<f64>,
}

/// Pooled `(confidence, indicator)` pairs in sample-major order.
pub fn pool(probs: &ProbMatrix, labels: &LabelVector, variant: Variant) -> Result<Vec<(f64, f64)>> {
    check_shapes(probs, labels)?;
    let out = match variant {
        Variant::Prediction => probs
            .predictions()
            .into_iter()
            .zip(labels.as_slice())
            .map(|((pred, conf), &y)| (conf, if pred == y { 1.0 } else { 0.0 }))
            .collect(),
        Variant::Output => {
            let k = probs.classes();
            let mut v = Vec::with_capacity(probs.n() * k);
            for (i, &y) in labels.as_slice().iter().enumerate() {
                for (c, &p) in probs.row(i).iter().enumerate() {
                    v.push((p, if c == y { 1.0 } else { 0.0 }));
                }
            }
            v
        }
    };
    Ok(out)
}

pub(crate) fn check_shapes(probs: &ProbMatrix, labels: &LabelVector) -> Result<()> {
    if probs.n() != labels.len() {
        return Err(mismatch(format!(
            "{} probability rows but {} labels",
            probs.n(),
            labels.len()
        )));
    }
    if probs.classes() != labels.classes() {
        return Err(mismatch(format!(
            "{} probability columns but {} label classes",
            probs.classes(),
            labels.classes()
        )));
    }
    Ok(())
}

/// Fraction of rows whose argmax equals the label.
pub fn accuracy(probs: &ProbMatrix, labels: &LabelVector) -> Result<f64> {
    check_shapes(probs, labels)?;
    let hits = probs
        .predictions()
        .iter()
        .zip(labels.as_slice())
        .filter(|((p, _), &y)| *p == y)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Mean maximum probability.
pub fn mean_confidence(probs: &ProbMatrix) -> f64 {
    probs.predictions().iter().map(|(_, c)| c).sum::<f64>() / probs.n() as f64
}

/// Mean negative log-likelihood of the labels, with probabilities clipped
/// below at `1e-12`.
pub fn nll(probs: &ProbMatrix, labels: &LabelVector) -> Result<f64> {
    check_shapes(probs, labels)?;
    let total: f64 = labels
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &y)| -probs.row(i)[y].max(1e-12).ln())
        .sum();
    Ok(total / labels.len() as f64)
}
