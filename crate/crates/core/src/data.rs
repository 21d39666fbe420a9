//! Validated numeric containers.
//!
//! All containers are immutable after construction. Labels are zero-based.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{mismatch, Error, Result};

/// Default row-sum tolerance for [`ProbMatrix::validate`].
pub const DEFAULT_ROW_TOLERANCE: f64 = 1e-6;

/// `n × K` row-stochastic matrix of model outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    values: Array2<f64>,
}

impl ProbMatrix {
    /// Validates `raw`: entries are clipped to `[0, 1]`, then every row whose
    /// sum is within `tolerance` of 1 is divided by its sum. Rows already
    /// within `2·K·ε` of 1 are left alone, which makes validation idempotent.
    pub fn validate(raw: Array2<f64>, tolerance: f64) -> Result<Self> {
        let (n, k) = raw.dim();
        if n == 0 {
            return Err(Error::InsufficientData("probability matrix has no rows".into()));
        }
        if k < 2 {
            return Err(mismatch(format!("need at least 2 classes, got {k}")));
        }
        if let Some(((row, col), _)) = raw.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        let rounding = 2.0 * k as f64 * f64::EPSILON;
        let mut values = raw.mapv(|v| v.clamp(0.0, 1.0));
        for (row, mut r) in values.axis_iter_mut(Axis(0)).enumerate() {
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::RowSum {
                    row,
                    sum,
                    tolerance,
                });
            }
            if (sum - 1.0).abs() > rounding {
                r.mapv_inplace(|v| v / sum);
            }
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::validate(rows_to_array(rows)?, DEFAULT_ROW_TOLERANCE)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn classes(&self) -> usize {
        self.values.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }

    /// Winning class and its confidence per row; ties go to the lowest index.
    pub fn predictions(&self) -> Vec<(usize, f64)> {
        self.values.rows().into_iter().map(argmax).collect()
    }
}

/// Index and value of the first maximum.
pub fn argmax(row: ArrayView1<'_, f64>) -> (usize, f64) {
    let mut best = (0, row[0]);
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (k, v);
        }
    }
    best
}

/// Zero-based class labels with a known class count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    values: Vec<usize>,
    classes: usize,
}

impl LabelVector {
    pub fn new(values: Vec<usize>, classes: usize) -> Result<Self> {
        if let Some((index, &label)) = values.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(Error::InvalidLabel {
                index,
                label,
                classes,
            });
        }
        Ok(Self { values, classes })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.values
    }

    pub fn get(&self, i: usize) -> usize {
        self.values[i]
    }

    /// Sample indices of each class, in ascending order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.classes];
        for (i, &l) in self.values.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn select(&self, idx: &[usize]) -> LabelVector {
        LabelVector {
            values: idx.iter().map(|&i| self.values[i]).collect(),
            classes: self.classes,
        }
    }
}

/// `n × d` matrix of finite features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if let Some(((row, col), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows_to_array(rows)?)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn select(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.select(Axis(0), idx),
        }
    }
}

/// Keyed table of equal-length vectors: per-sample embeddings (keys are
/// sample indices) or word vectors (keys are tokens).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    keys: Vec<String>,
    vectors: Array2<f64>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    /// Builds a table. Duplicate keys keep the first occurrence.
    pub fn new(keys: Vec<String>, vectors: Array2<f64>) -> Result<Self> {
        if keys.len() != vectors.nrows() {
            return Err(mismatch(format!(
                "{} keys for {} vectors",
                keys.len(),
                vectors.nrows()
            )));
        }
        if let Some(((row, col), _)) = vectors.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        let mut index = HashMap::with_capacity(keys.len());
        for (i, k) in keys.iter().enumerate() {
            index.entry(k.clone()).or_insert(i);
        }
        Ok(Self {
            keys,
            vectors,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn vectors(&self) -> ArrayView2<'_, f64> {
        self.vectors.view()
    }

    pub fn get(&self, key: &str) -> Option<ArrayView1<'_, f64>> {
        self.index.get(key).map(|&i| self.vectors.row(i))
    }

    /// Rows for sample indices `0..n`, looked up by their decimal keys.
    pub fn sample_matrix(&self, n: usize) -> Result<FeatureMatrix> {
        let mut out = Array2::zeros((n, self.dim()));
        for i in 0..n {
            let v = self.get(&i.to_string()).ok_or_else(|| {
                Error::InvalidArgument(format!("embedding table has no entry for sample {i}"))
            })?;
            out.row_mut(i).assign(&v);
        }
        FeatureMatrix::new(out)
    }
}

pub(crate) fn rows_to_array(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(r) = rows.iter().position(|r| r.len() != cols) {
        return Err(mismatch(format!(
            "row {r} has {} entries, expected {cols}",
            rows[r].len()
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), cols), flat).map_err(|e| mismatch(e.to_string()))
}
