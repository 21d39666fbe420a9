//! Kernel-density ECE.
//!
//! The density of the pooled points is `f(p) = h^-D/n Σ_i Π_d φ((p_d − p_i,d)/h)`
//! and the canonical calibration function `c(p)` is the kernel regression of
//! the targets on the points with the same product kernel. The ECE is
//! `∫ ‖p − c(p)‖ f(p) dp`. Because the points are draws from `f`, the
//! integral is estimated by the sample average
//!
//! ```text
//! (1/n) Σ_i ‖p_i − c_{−i}(p_i)‖
//! ```
//!
//! where `c_{−i}` leaves point `i` out of the regression. The norm is
//! divided by `D` (L1) or `√D` (L2), so the output variant reports the
//! mean per-class deviation and stays in `[0, 1]`.

use ndarray::{Array2, ArrayView2, Axis};

use super::{check_shapes, CalibrationReport, Estimator, Variant};
use crate::data::{LabelVector, ProbMatrix};
use crate::error::{mismatch, Error, Result};

/// Triweight kernel `35/32 (1 − u²)³` on `|u| ≤ 1`.
pub fn triweight(u: f64) -> f64 {
    if u.abs() > 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u;
        35.0 / 32.0 * t * t * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KdeNorm {
    #[default]
    L1,
    L2,
}

impl std::str::FromStr for KdeNorm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(KdeNorm::L1),
            "l2" => Ok(KdeNorm::L2),
            _ => Err(Error::InvalidArgument(format!("unknown KDE norm '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KdeEvalMode {
    #[default]
    LeaveOneOutPlugin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeConfig {
    /// Multiplier in `h = factor · σ · n^(−1/5)`.
    pub bandwidth_factor: f64,
    pub norm: KdeNorm,
    pub eval_mode: KdeEvalMode,
}

impl Default for KdeConfig {
    fn default() -> Self {
        Self {
            bandwidth_factor: 1.06,
            norm: KdeNorm::L1,
            eval_mode: KdeEvalMode::LeaveOneOutPlugin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeEstimate {
    pub ece: f64,
    pub bandwidth: f64,
    pub empty_neighborhoods: usize,
}

/// `factor · σ · n^(−1/5)` with `σ` the mean of the per-dimension
/// population standard deviations.
pub fn kde_bandwidth(points: ArrayView2<'_, f64>, factor: f64) -> Result<f64> {
    let (n, dims) = points.dim();
    if n < 2 {
        return Err(Error::InsufficientData(format!("kernel ECE needs n >= 2, got {n}")));
    }
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidArgument(format!("bandwidth factor {factor} must be positive")));
    }
    let mut sigma = 0.0;
    for col in points.axis_iter(Axis(1)) {
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        sigma += var.sqrt();
    }
    sigma /= dims as f64;
    let h = factor * sigma * (n as f64).powf(-0.2);
    if !(h > 0.0) {
        return Err(Error::DegenerateBandwidth);
    }
    Ok(h)
}

/// Leave-one-out plug-in estimate on raw points (`n × D`) with their target
/// vectors (`n × D`).
pub fn kde_ece_points(
    points: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    config: &KdeConfig,
) -> Result<KdeEstimate> {
    if points.dim() != targets.dim() {
        return Err(mismatch(format!(
            "points {:?} vs targets {:?}",
            points.dim(),
            targets.dim()
        )));
    }
    let h = kde_bandwidth(points, config.bandwidth_factor)?;
    let (n, dims) = points.dim();
    let mut empty = 0;
    let mut total = 0.0;
    let mut numer = vec![0.0; dims];
    for i in 0..n {
        let pi = points.row(i);
        numer.iter_mut().for_each(|v| *v = 0.0);
        let mut denom = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let pj = points.row(j);
            let mut w = 1.0;
            for d in 0..dims {
                w *= triweight((pi[d] - pj[d]) / h);
                if w == 0.0 {
                    break;
                }
            }
            if w == 0.0 {
                continue;
            }
            denom += w;
            for (acc, &t) in numer.iter_mut().zip(targets.row(j)) {
                *acc += w * t;
            }
        }
        if denom == 0.0 {
            // c_{-i}(p_i) := p_i
            empty += 1;
            continue;
        }
        let dist = match config.norm {
            KdeNorm::L1 => {
                (0..dims)
                    .map(|d| (pi[d] - numer[d] / denom).abs())
                    .sum::<f64>()
                    / dims as f64
            }
            KdeNorm::L2 => {
                let sq: f64 = (0..dims).map(|d| (pi[d] - numer[d] / denom).powi(2)).sum();
                (sq / dims as f64).sqrt()
            }
        };
        total += dist;
    }
    Ok(KdeEstimate {
        ece: total / n as f64,
        bandwidth: h,
        empty_neighborhoods: empty,
    })
}

/// Kernel ECE. The prediction variant works on the 1-D winning-class
/// confidences with a 0/1 correctness target; the output variant on the
/// full `K`-dimensional rows with one-hot targets.
pub fn kde_ece(
    probs: &ProbMatrix,
    labels: &LabelVector,
    variant: Variant,
    config: &KdeConfig,
) -> Result<CalibrationReport> {
    check_shapes(probs, labels)?;
    let n = probs.n();
    let (points, targets) = match variant {
        Variant::Prediction => {
            let mut pts = Array2::zeros((n, 1));
            let mut tgt = Array2::zeros((n, 1));
            for (i, ((pred, conf), &y)) in probs.predictions().into_iter().zip(labels.as_slice()).enumerate() {
                pts[[i, 0]] = conf;
                tgt[[i, 0]] = if pred == y { 1.0 } else { 0.0 };
            }
            (pts, tgt)
        }
        Variant::Output => {
            let mut tgt = Array2::zeros((n, probs.classes()));
            for (i, &y) in labels.as_slice().iter().enumerate() {
                tgt[[i, y]] = 1.0;
            }
            (probs.view().to_owned(), tgt)
        }
    };
    let est = kde_ece_points(points.view(), targets.view(), config)?;
    Ok(CalibrationReport {
        estimator: Estimator::Kde,
        variant,
        ece: est.ece,
        bins: Vec::new(),
        n_effective: n,
        empty_neighborhoods: est.empty_neighborhoods,
        bandwidth: Some(est.bandwidth),
    })
}
