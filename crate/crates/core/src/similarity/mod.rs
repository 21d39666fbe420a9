//! Inter-class distances and the similarity distributions derived from them.
//!
//! A distance row `d_k` is standardized over its off-diagonal entries, then
//! turned into `s_k(k') ∝ exp(−β·d̃_k(k'))` over `k' ≠ k`, with `s_k(k) = 0`.
//! Larger `β` concentrates the mass on the closest classes; `β = 0` is
//! uniform over the other classes.

mod distance;
mod softmax;

pub use distance::{class_tokens, interclass_distance, pairwise_lp_distance, word_distance, Lp};
pub use softmax::{row_entropy, similarity_from_distances, standardize_row, MAX_BETA};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{mismatch, Error, Result};

/// Distance notion used to build a [`DistanceMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    L1,
    L2,
    /// L2 between supplied per-sample embedding vectors.
    Embedding,
    /// L2 between mean word vectors of the class names.
    Word,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::Embedding => "embedding",
            Metric::Word => "word",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Metric::L1),
            "l2" => Ok(Metric::L2),
            "embedding" => Ok(Metric::Embedding),
            "word" => Ok(Metric::Word),
            _ => Err(Error::InvalidArgument(format!("unknown metric '{s}'"))),
        }
    }
}

/// `K × K` matrix of non-negative, finite, symmetric class distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: Array2<f64>,
    metric: Metric,
}

impl DistanceMatrix {
    pub fn new(values: Array2<f64>, metric: Metric) -> Result<Self> {
        let (r, c) = values.dim();
        if r != c {
            return Err(mismatch(format!("distance matrix is {r}x{c}")));
        }
        if r < 2 {
            return Err(mismatch("distance matrix needs at least 2 classes"));
        }
        for ((i, j), &v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            if v < 0.0 {
                return Err(Error::InvalidArgument(format!("negative distance at ({i}, {j})")));
            }
            let t = values[[j, i]];
            if (v - t).abs() > 1e-9 * v.abs().max(t.abs()).max(1.0) {
                return Err(Error::InvalidArgument(format!("distance matrix not symmetric at ({i}, {j})")));
            }
        }
        Ok(Self { values, metric })
    }

    pub fn classes(&self) -> usize {
        self.values.nrows()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn row(&self, k: usize) -> ArrayView1<'_, f64> {
        self.values.row(k)
    }
}

/// Row-stochastic `K × K` class-similarity matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: Array2<f64>,
    beta: f64,
    degenerate_rows: Vec<usize>,
}

impl SimilarityMatrix {
    /// Wraps an existing matrix after checking the invariants (zero diagonal,
    /// non-negative entries, rows summing to 1 within `1e-9`).
    pub fn new(values: Array2<f64>, beta: f64) -> Result<Self> {
        check_similarity(values.view())?;
        Ok(Self {
            values,
            beta,
            degenerate_rows: Vec::new(),
        })
    }

    pub(crate) fn from_parts(values: Array2<f64>, beta: f64, degenerate_rows: Vec<usize>) -> Self {
        Self {
            values,
            beta,
            degenerate_rows,
        }
    }

    pub fn classes(&self) -> usize {
        self.values.nrows()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn row(&self, k: usize) -> ArrayView1<'_, f64> {
        self.values.row(k)
    }

    /// Rows whose off-diagonal distances had no spread and fell back to
    /// uniform similarity.
    pub fn degenerate_rows(&self) -> &[usize] {
        &self.degenerate_rows
    }
}

pub(crate) fn check_similarity(values: ArrayView2<'_, f64>) -> Result<()> {
    let (r, c) = values.dim();
    if r != c || r < 2 {
        return Err(Error::SimilarityInvariantViolation(format!("shape {r}x{c}")));
    }
    for (k, row) in values.rows().into_iter().enumerate() {
        if row[k] != 0.0 {
            return Err(Error::SimilarityInvariantViolation(format!("diagonal entry {k} is {}", row[k])));
        }
        if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::SimilarityInvariantViolation(format!("row {k} has a negative or non-finite entry")));
        }
        let sum: f64 = row.sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::SimilarityInvariantViolation(format!("row {k} sums to {sum}")));
        }
    }
    Ok(())
}
