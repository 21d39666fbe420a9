//! Reference implementations and generators shared by the integration tests.
#![allow(dead_code)]

use ndarray::Array2;
use simcal::data::{LabelVector, ProbMatrix};
use simcal::metrics::triweight;
use simcal::rng::{Seed, SeededRng};

/// Random probability rows: normalized exponentials raised to a random
/// sharpness, with occasional exact bin edges, ties and zeros.
pub fn random_probs(rng: &mut SeededRng, n: usize, k: usize) -> ProbMatrix {
    let mut m = Array2::zeros((n, k));
    for i in 0..n {
        let style = rng.below(10);
        let sharp = 0.3 + 4.0 * rng.uniform();
        let mut row: Vec<f64> = (0..k).map(|_| (-(1.0 - rng.uniform()).ln()).powf(sharp)).collect();
        match style {
            0 => row.iter_mut().for_each(|v| *v = 1.0),
            1 => {
                row.iter_mut().for_each(|v| *v = 0.0);
                row[rng.below(k)] = 1.0;
            }
            _ => {}
        }
        let s: f64 = row.iter().sum();
        for (c, v) in row.iter().enumerate() {
            m[[i, c]] = v / s;
        }
        if style == 2 && k >= 2 {
            // a value sitting exactly on an edge of the 15-bin grid
            let edge = (1 + rng.below(14)) as f64 / 15.0;
            let rest = (1.0 - edge) / (k - 1) as f64;
            for c in 0..k {
                m[[i, c]] = if c == 0 { edge } else { rest };
            }
        }
    }
    ProbMatrix::validate(m, 1e-9).expect("generated rows are valid")
}

pub fn random_labels(rng: &mut SeededRng, n: usize, k: usize) -> LabelVector {
    LabelVector::new((0..n).map(|_| rng.below(k)).collect(), k).unwrap()
}

/// Labels drawn from the probability rows themselves.
pub fn sampled_labels(rng: &mut SeededRng, probs: &ProbMatrix) -> LabelVector {
    let y = (0..probs.n())
        .map(|i| rng.categorical(probs.row(i).as_slice().unwrap()))
        .collect();
    LabelVector::new(y, probs.classes()).unwrap()
}

/// Double-loop histogram ECE: for each bin, scan every pooled value.
pub fn naive_histogram_ece(probs: &ProbMatrix, labels: &LabelVector, bins: usize, output: bool) -> f64 {
    let p = probs.view();
    let (n, k) = p.dim();
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    for i in 0..n {
        if output {
            for c in 0..k {
                pooled.push((p[[i, c]], if labels.get(i) == c { 1.0 } else { 0.0 }));
            }
        } else {
            let mut best = 0;
            for c in 1..k {
                if p[[i, c]] > p[[i, best]] {
                    best = c;
                }
            }
            pooled.push((p[[i, best]], if labels.get(i) == best { 1.0 } else { 0.0 }));
        }
    }
    let total = pooled.len() as f64;
    let mut ece = 0.0;
    for m in 1..=bins {
        let lo = (m - 1) as f64 / bins as f64;
        let hi = m as f64 / bins as f64;
        let mut count = 0usize;
        let mut conf = 0.0;
        let mut hits = 0.0;
        for &(v, hit) in &pooled {
            let inside = (v > lo && v <= hi) || (m == 1 && v <= 0.0);
            if inside {
                count += 1;
                conf += v;
                hits += hit;
            }
        }
        if count > 0 {
            let c = count as f64;
            ece += (count as f64 / total) * (hits / c - conf / c).abs();
        }
    }
    ece
}

/// `∫ |p − c(p)| f(p) dp` for 1-D points, with the full-sample kernel
/// density `f` and regression `c`, by the trapezoid rule on a uniform grid.
pub fn kde_quadrature_1d(points: &[f64], targets: &[f64], h: f64, grid: usize) -> f64 {
    let n = points.len() as f64;
    let lo = points.iter().copied().fold(f64::INFINITY, f64::min) - h;
    let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max) + h;
    let step = (hi - lo) / grid as f64;
    let mut total = 0.0;
    for g in 0..=grid {
        let p = lo + g as f64 * step;
        let mut w_sum = 0.0;
        let mut wy = 0.0;
        for (&x, &y) in points.iter().zip(targets) {
            let w = triweight((p - x) / h);
            w_sum += w;
            wy += w * y;
        }
        let integrand = if w_sum > 0.0 {
            let f = w_sum / (n * h);
            (p - wy / w_sum).abs() * f
        } else {
            0.0
        };
        let weight = if g == 0 || g == grid { 0.5 } else { 1.0 };
        total += weight * integrand;
    }
    total * step
}

/// Two-class rows `(p, 1 − p)` with `p ∈ [lo, hi]` and label 0 drawn with
/// probability `acc(p)`, so the winning-class correctness rate is `acc(p)`.
pub fn miscalibrated_binary(
    seed: Seed,
    n: usize,
    lo: f64,
    hi: f64,
    acc: impl Fn(f64) -> f64,
) -> (ProbMatrix, LabelVector) {
    let mut rng = seed.rng();
    let mut m = Array2::zeros((n, 2));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let p = rng.uniform_range(lo, hi);
        m[[i, 0]] = p;
        m[[i, 1]] = 1.0 - p;
        y.push(if rng.uniform() < acc(p) { 0 } else { 1 });
    }
    (ProbMatrix::validate(m, 1e-9).unwrap(), LabelVector::new(y, 2).unwrap())
}
