use crate::data::ProbMatrix;
use crate::error::{Error, Result};

/// Counts of winning-class confidences over uniform bins spanning `[1/K, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceHistogram {
    pub lower: f64,
    pub upper: f64,
    pub counts: Vec<usize>,
}

impl ConfidenceHistogram {
    pub fn edges(&self, bin: usize) -> (f64, f64) {
        let width = (self.upper - self.lower) / self.counts.len() as f64;
        let lo = self.lower + width * bin as f64;
        let hi = if bin + 1 == self.counts.len() {
            self.upper
        } else {
            self.lower + width * (bin + 1) as f64
        };
        (lo, hi)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Mean of bin centres weighted by count.
    pub fn mean(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.counts
            .iter()
            .enumerate()
            .map(|(b, &c)| {
                let (lo, hi) = self.edges(b);
                c as f64 * 0.5 * (lo + hi)
            })
            .sum::<f64>()
            / total as f64
    }
}

pub fn confidence_histogram(probs: &ProbMatrix, n_bins: usize) -> Result<ConfidenceHistogram> {
    if n_bins == 0 {
        return Err(Error::InvalidArgument("bin count must be positive".into()));
    }
    let lower = 1.0 / probs.classes() as f64;
    let span = 1.0 - lower;
    let mut counts = vec![0usize; n_bins];
    for (_, conf) in probs.predictions() {
        let pos = ((conf - lower) / span * n_bins as f64).floor();
        let b = if pos.is_nan() || pos < 0.0 { 0 } else { (pos as usize).min(n_bins - 1) };
        counts[b] += 1;
    }
    Ok(ConfidenceHistogram {
        lower,
        upper: 1.0,
        counts,
    })
}
