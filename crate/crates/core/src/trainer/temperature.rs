use ndarray::ArrayView2;

use super::model::softmax_rows;
use crate::data::{LabelVector, ProbMatrix};
use crate::error::{mismatch, Error, Result};

/// Search bracket for the fitted temperature.
pub const T_MIN: f64 = 0.05;
pub const T_MAX: f64 = 20.0;
const LOG_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(t: f64) -> Result<Self> {
        if t > 0.0 && t.is_finite() {
            Ok(Self(t))
        } else {
            Err(Error::InvalidArgument(format!("temperature {t} must be positive")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `softmax(z / T)` per row. Never changes the argmax.
    pub fn apply(self, logits: ArrayView2<'_, f64>) -> Result<ProbMatrix> {
        let scaled = logits.mapv(|z| z / self.0);
        ProbMatrix::validate(softmax_rows(scaled.view()), 1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureFit {
    pub temperature: Temperature,
    pub nll: f64,
    pub nll_at_one: f64,
    /// The optimum sits at an end of the search bracket.
    pub hit_bound: bool,
}

/// Mean NLL of `softmax(z / T)`, computed with log-sum-exp.
pub fn nll_at_temperature(logits: ArrayView2<'_, f64>, labels: &LabelVector, t: f64) -> f64 {
    let mut total = 0.0;
    for (row, &y) in logits.rows().into_iter().zip(labels.as_slice()) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max) / t;
        let lse = max + row.iter().map(|z| (z / t - max).exp()).sum::<f64>().ln();
        total += lse - row[y] / t;
    }
    total / labels.len() as f64
}

/// Fits `T` by golden-section search on `ln T` over `[0.05, 20]` until the
/// bracket is narrower than `1e-4`. Falls back to `T = 1` if the search
/// result does not beat it.
pub fn fit_temperature(logits: ArrayView2<'_, f64>, labels: &LabelVector) -> Result<TemperatureFit> {
    let (n, k) = logits.dim();
    if n != labels.len() || k != labels.classes() {
        return Err(mismatch(format!(
            "logits {n}x{k} vs {} labels over {} classes",
            labels.len(),
            labels.classes()
        )));
    }
    if n < k {
        return Err(Error::InsufficientData(format!("temperature fit needs n >= K, got {n} < {k}")));
    }
    let f = |u: f64| nll_at_temperature(logits, labels, u.exp());
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (T_MIN.ln(), T_MAX.ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > LOG_TOLERANCE {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let u = 0.5 * (a + b);
    let mut t = u.exp();
    let mut nll = f(u);
    let nll_at_one = f(0.0);
    let hit_bound = u - T_MIN.ln() < LOG_TOLERANCE || T_MAX.ln() - u < LOG_TOLERANCE;
    if !(nll <= nll_at_one) {
        t = 1.0;
        nll = nll_at_one;
    }
    Ok(TemperatureFit {
        temperature: Temperature::new(t)?,
        nll,
        nll_at_one,
        hit_bound,
    })
}
