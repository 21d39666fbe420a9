//! Training targets: one-hot, uniform smoothing and class-similarity
//! smoothing.
//!
//! The two smoothing schemes use different conventions on purpose.
//! Uniform smoothing spreads `α` over all `K` classes, true class included,
//! so its diagonal is `1 − α + α/K`. Similarity smoothing spreads `α` over
//! the other classes only, so its diagonal is exactly `1 − α` and each
//! off-diagonal row sums to `α`.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::data::LabelVector;
use crate::error::{mismatch, Error, Result};
use crate::similarity::{check_similarity, SimilarityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    OneHot,
    Uniform,
    Similarity,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::OneHot => "onehot",
            Scheme::Uniform => "uniform",
            Scheme::Similarity => "similarity",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "onehot" => Ok(Scheme::OneHot),
            "uniform" => Ok(Scheme::Uniform),
            "similarity" => Ok(Scheme::Similarity),
            _ => Err(Error::InvalidArgument(format!("unknown label scheme '{s}'"))),
        }
    }
}

/// Per-class target rows: row `k` is the training target for class `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothLabelMatrix {
    values: Array2<f64>,
    alpha: f64,
    scheme: Scheme,
}

impl SmoothLabelMatrix {
    /// Wraps a matrix read from elsewhere; rows must be non-negative and sum
    /// to 1 within `1e-9`.
    pub fn from_values(values: Array2<f64>, alpha: f64, scheme: Scheme) -> Result<Self> {
        let (r, c) = values.dim();
        if r != c || r < 2 {
            return Err(mismatch(format!("label matrix is {r}x{c}")));
        }
        for (k, row) in values.rows().into_iter().enumerate() {
            if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidArgument(format!("label row {k} has a negative or non-finite entry")));
            }
            let s = row.sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::RowSum { row: k, sum: s, tolerance: 1e-9 });
            }
        }
        check_alpha(alpha)?;
        Ok(Self { values, alpha, scheme })
    }

    pub fn classes(&self) -> usize {
        self.values.nrows()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn row(&self, k: usize) -> ArrayView1<'_, f64> {
        self.values.row(k)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::AlphaRange(alpha))
    }
}

fn check_classes(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 classes, got {k}")));
    }
    Ok(())
}

pub fn onehot_labels(k: usize) -> Result<SmoothLabelMatrix> {
    check_classes(k)?;
    Ok(SmoothLabelMatrix {
        values: Array2::eye(k),
        alpha: 0.0,
        scheme: Scheme::OneHot,
    })
}

/// `(1 − α)·e_k + α/K` on every class.
pub fn uniform_labels(k: usize, alpha: f64) -> Result<SmoothLabelMatrix> {
    check_classes(k)?;
    check_alpha(alpha)?;
    let off = alpha / k as f64;
    let values = Array2::from_shape_fn((k, k), |(r, c)| if r == c { 1.0 - alpha + off } else { off });
    Ok(SmoothLabelMatrix {
        values,
        alpha,
        scheme: Scheme::Uniform,
    })
}

/// `(1 − α)·e_k + α·s_k`.
pub fn similarity_labels(similarity: &SimilarityMatrix, alpha: f64) -> Result<SmoothLabelMatrix> {
    check_alpha(alpha)?;
    check_similarity(similarity.view())?;
    let k = similarity.classes();
    let s = similarity.view();
    let values = Array2::from_shape_fn((k, k), |(r, c)| if r == c { 1.0 - alpha } else { alpha * s[[r, c]] });
    Ok(SmoothLabelMatrix {
        values,
        alpha,
        scheme: Scheme::Similarity,
    })
}

/// Per-sample targets: row `i` is row `labels[i]` of `table`.
pub fn expand_to_samples(table: &SmoothLabelMatrix, labels: &LabelVector) -> Result<Array2<f64>> {
    if labels.classes() != table.classes() {
        return Err(mismatch(format!(
            "labels have {} classes, label matrix {}",
            labels.classes(),
            table.classes()
        )));
    }
    let k = table.classes();
    let mut out = Array2::zeros((labels.len(), k));
    for (i, &y) in labels.as_slice().iter().enumerate() {
        out.row_mut(i).assign(&table.row(y));
    }
    Ok(out)
}
