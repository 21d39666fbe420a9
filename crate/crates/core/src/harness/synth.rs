//! Gaussian-blob datasets with controllable class geometry.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use super::config::Config;
use crate::data::{FeatureMatrix, LabelVector};
use crate::error::{Error, Result};
use crate::rng::Seed;

/// Placement of the class means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Mean `k` at `(k·spacing, 0, …, 0)`: similarity decays with index distance.
    Line,
    /// Means on a circle in the first two coordinates, neighbours `spacing` apart.
    Ring,
    /// Mean coordinates drawn from `N(0, spacing²)`.
    Random,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::Line => "line",
            Layout::Ring => "ring",
            Layout::Random => "random",
        })
    }
}

impl FromStr for Layout {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(Layout::Line),
            "ring" => Ok(Layout::Ring),
            "random" => Ok(Layout::Random),
            _ => Err(Error::InvalidArgument(format!("unknown layout '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub classes: usize,
    pub dim: usize,
    pub n_per_class: usize,
    pub layout: Layout,
    pub spacing: f64,
    pub noise_std: f64,
    pub seed: Seed,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            classes: 8,
            dim: 2,
            n_per_class: 500,
            layout: Layout::Line,
            spacing: 1.0,
            noise_std: 0.5,
            seed: Seed(0),
        }
    }
}

impl SynthSpec {
    /// Reads `classes`, `dim`, `n_per_class`, `layout`, `spacing` and
    /// `noise_std`, falling back to the defaults.
    pub fn from_config(c: &Config, seed: Seed) -> Result<Self> {
        let d = Self::default();
        Ok(Self {
            classes: c.get_or("classes", d.classes)?,
            dim: c.get_or("dim", d.dim)?,
            n_per_class: c.get_or("n_per_class", d.n_per_class)?,
            layout: c.get_or("layout", d.layout)?,
            spacing: c.get_or("spacing", d.spacing)?,
            noise_std: c.get_or("noise_std", d.noise_std)?,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: FeatureMatrix,
    pub labels: LabelVector,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(idx),
            labels: self.labels.select(idx),
            class_names: self.class_names.clone(),
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.classes < 2 || self.n_per_class == 0 || self.dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "need classes >= 2, n_per_class >= 1, dim >= 1 (got {}, {}, {})",
                self.classes, self.n_per_class, self.dim
            )));
        }
        if self.layout == Layout::Ring && self.dim < 2 {
            return Err(Error::InvalidArgument("ring layout needs dim >= 2".into()));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidArgument(format!("spacing {} must be positive", self.spacing)));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise_std {} must be non-negative", self.noise_std)));
        }
        Ok(())
    }

    /// `K × d` class means. The random layout draws from child stream 1.
    pub fn class_means(&self) -> Result<Array2<f64>> {
        self.validate()?;
        let (k, d) = (self.classes, self.dim);
        let mut means = Array2::zeros((k, d));
        match self.layout {
            Layout::Line => {
                for c in 0..k {
                    means[[c, 0]] = c as f64 * self.spacing;
                }
            }
            Layout::Ring => {
                let radius = self.spacing / (2.0 * (std::f64::consts::PI / k as f64).sin());
                for c in 0..k {
                    let angle = std::f64::consts::TAU * c as f64 / k as f64;
                    means[[c, 0]] = radius * angle.cos();
                    means[[c, 1]] = radius * angle.sin();
                }
            }
            Layout::Random => {
                let mut rng = self.seed.child(1).rng();
                means.mapv_inplace(|_| self.spacing * rng.normal());
            }
        }
        Ok(means)
    }
}

/// Blobs around the class means with isotropic Gaussian noise, class-major
/// order, names `c0…c{K−1}`. Noise comes from child stream 0 of the seed.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Dataset> {
    generate_shifted(spec, 0.0)
}

/// Same as [`generate_synthetic`] with every mean moved by `shift` along the
/// last coordinate and an independent noise stream (child 2) when shifted.
pub fn generate_shifted(spec: &SynthSpec, shift: f64) -> Result<Dataset> {
    let means = spec.class_means()?;
    let (k, d) = means.dim();
    let n = k * spec.n_per_class;
    let stream = if shift == 0.0 { 0 } else { 2 };
    let mut rng = spec.seed.child(stream).rng();
    let mut x = Array2::zeros((n, d));
    let mut y = Vec::with_capacity(n);
    for c in 0..k {
        for s in 0..spec.n_per_class {
            let i = c * spec.n_per_class + s;
            for j in 0..d {
                x[[i, j]] = means[[c, j]] + spec.noise_std * rng.normal();
            }
            x[[i, d - 1]] += shift;
            y.push(c);
        }
    }
    Ok(Dataset {
        features: FeatureMatrix::new(x)?,
        labels: LabelVector::new(y, k)?,
        class_names: (0..k).map(|c| format!("c{c}")).collect(),
    })
}

/// `n` points uniform in `[lo, hi)^d`.
pub fn uniform_noise(n: usize, dim: usize, lo: f64, hi: f64, seed: Seed) -> Result<FeatureMatrix> {
    let mut rng = seed.rng();
    FeatureMatrix::new(Array2::from_shape_fn((n, dim), |_| rng.uniform_range(lo, hi)))
}
