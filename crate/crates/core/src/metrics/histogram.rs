use super::{pool, BinStats, CalibrationReport, Estimator, Variant};
use crate::data::{LabelVector, ProbMatrix};
use crate::error::{Error, Result};

/// Zero-based bin of `p` among `bins` intervals `((m-1)/M, m/M]`.
///
/// `p = 0` belongs to no interval and is assigned to the first bin.
pub fn bin_index(p: f64, bins: usize) -> usize {
    if p <= 0.0 {
        return 0;
    }
    let m = bins as f64;
    let mut b = ((p * m).ceil() as usize).clamp(1, bins);
    // ceil(p·M) can be off by one when p sits on an edge
    while b > 1 && p <= (b - 1) as f64 / m {
        b -= 1;
    }
    while b < bins && p > b as f64 / m {
        b += 1;
    }
    b - 1
}

/// Bins pooled `(confidence, indicator)` pairs and computes the weighted
/// gap `Σ_m |B_m|/N · |lik(B_m) − conf(B_m)|`, where `N` is the pool size.
///
/// Sums run sequentially in pool order, then in ascending bin order.
pub fn histogram_ece(pooled: &[(f64, f64)], bins: usize) -> Result<(f64, Vec<BinStats>)> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bin count must be positive".into()));
    }
    if pooled.is_empty() {
        return Err(Error::InsufficientData("no pooled values".into()));
    }
    let mut counts = vec![0usize; bins];
    let mut conf_sum = vec![0.0f64; bins];
    let mut hit_sum = vec![0.0f64; bins];
    for &(p, hit) in pooled {
        let b = bin_index(p, bins);
        counts[b] += 1;
        conf_sum[b] += p;
        hit_sum[b] += hit;
    }

    let total = pooled.len() as f64;
    let mut ece = 0.0;
    let mut stats = Vec::with_capacity(bins);
    for b in 0..bins {
        let lower = b as f64 / bins as f64;
        let upper = (b + 1) as f64 / bins as f64;
        if counts[b] == 0 {
            stats.push(BinStats {
                lower,
                upper,
                count: 0,
                likelihood: 0.0,
                confidence: 0.0,
            });
            continue;
        }
        let n = counts[b] as f64;
        let likelihood = hit_sum[b] / n;
        let confidence = conf_sum[b] / n;
        ece += (counts[b] as f64 / total) * (likelihood - confidence).abs();
        stats.push(BinStats {
            lower,
            upper,
            count: counts[b],
            likelihood,
            confidence,
        });
    }
    Ok((ece, stats))
}

fn report(probs: &ProbMatrix, labels: &LabelVector, variant: Variant, bins: usize) -> Result<CalibrationReport> {
    let pooled = pool(probs, labels, variant)?;
    let (ece, bins) = histogram_ece(&pooled, bins)?;
    Ok(CalibrationReport {
        estimator: Estimator::Histogram,
        variant,
        ece,
        bins,
        n_effective: pooled.len(),
        empty_neighborhoods: 0,
        bandwidth: None,
    })
}

/// Histogram ECE of the winning-class confidences.
pub fn histogram_ece_prediction(
    probs: &ProbMatrix,
    labels: &LabelVector,
    bins: usize,
) -> Result<CalibrationReport> {
    report(probs, labels, Variant::Prediction, bins)
}

/// Histogram ECE over all `n·K` output probabilities.
pub fn histogram_ece_output(
    probs: &ProbMatrix,
    labels: &LabelVector,
    bins: usize,
) -> Result<CalibrationReport> {
    report(probs, labels, Variant::Output, bins)
}

/// Per-bin statistics for a reliability diagram; identical to the bins of
/// the matching histogram ECE report.
pub fn reliability_bins(
    probs: &ProbMatrix,
    labels: &LabelVector,
    variant: Variant,
    bins: usize,
) -> Result<Vec<BinStats>> {
    Ok(report(probs, labels, variant, bins)?.bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabelVector;
    use crate::rng::Seed;
    use proptest::prelude::*;

    fn probs(rows: &[Vec<f64>]) -> ProbMatrix {
        ProbMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn bin_edges() {
        assert_eq!(bin_index(0.0, 15), 0);
        assert_eq!(bin_index(1.0, 15), 14);
        assert_eq!(bin_index(0.5, 2), 0);
        assert_eq!(bin_index(0.5000001, 2), 1);
        for m in 1..=15usize {
            // every right edge belongs to its own bin
            let edge = m as f64 / 15.0;
            assert_eq!(bin_index(edge, 15), m - 1, "edge {m}");
        }
        assert_eq!(bin_index(0.3, 10), 2);
        assert_eq!(bin_index(0.7, 10), 6);
    }

    #[test]
    fn confident_and_correct_is_zero() {
        let p = probs(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let y = LabelVector::new(vec![0, 1], 2).unwrap();
        assert_eq!(histogram_ece_prediction(&p, &y, 15).unwrap().ece, 0.0);
        assert_eq!(histogram_ece_output(&p, &y, 2).unwrap().ece, 0.0);
    }

    #[test]
    fn hand_evaluated_prediction_bin() {
        // confidences 0.6, 0.7, 0.9, 0.95; the 0.7 row is wrong
        let p = probs(&[
            vec![0.6, 0.4],
            vec![0.7, 0.3],
            vec![0.9, 0.1],
            vec![0.95, 0.05],
        ]);
        let y = LabelVector::new(vec![0, 1, 0, 0], 2).unwrap();
        let r = histogram_ece_prediction(&p, &y, 2).unwrap();
        assert_eq!(r.bins[0].count, 0);
        assert_eq!(r.bins[1].count, 4);
        assert!((r.bins[1].confidence - 0.7875).abs() < 1e-12);
        assert!((r.bins[1].likelihood - 0.75).abs() < 1e-12);
        assert!((r.ece - 0.0375).abs() < 1e-12);
    }

    #[test]
    fn single_bin_is_accuracy_gap() {
        let mut rng = Seed(9).rng();
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| {
                let r: Vec<f64> = (0..4).map(|_| rng.uniform() + 0.01).collect();
                let s: f64 = r.iter().sum();
                r.iter().map(|v| v / s).collect()
            })
            .collect();
        let labels: Vec<usize> = (0..200).map(|_| rng.below(4)).collect();
        let p = probs(&rows);
        let y = LabelVector::new(labels, 4).unwrap();
        let acc = crate::metrics::accuracy(&p, &y).unwrap();
        let conf = crate::metrics::mean_confidence(&p);
        let r = histogram_ece_prediction(&p, &y, 1).unwrap();
        assert!((r.ece - (acc - conf).abs()).abs() < 1e-12);
    }

    #[test]
    fn output_calibrated_despite_wrong_half() {
        let p = probs(&[vec![0.7, 0.3], vec![0.7, 0.3]]);
        let y = LabelVector::new(vec![0, 1], 2).unwrap();
        let r = histogram_ece_output(&p, &y, 1).unwrap();
        assert!((r.bins[0].likelihood - 0.5).abs() < 1e-15);
        assert!((r.bins[0].confidence - 0.5).abs() < 1e-15);
        assert!(r.ece.abs() < 1e-15);
    }

    #[test]
    fn output_two_populated_bins() {
        let rows = vec![vec![0.9, 0.1]; 10];
        let p = probs(&rows);
        let y = LabelVector::new(vec![0; 10], 2).unwrap();
        let r = histogram_ece_output(&p, &y, 15).unwrap();
        assert_eq!(r.n_effective, 20);
        let low = &r.bins[bin_index(0.1, 15)];
        let high = &r.bins[bin_index(0.9, 15)];
        assert_eq!((low.count, high.count), (10, 10));
        assert_eq!(low.likelihood, 0.0);
        assert!((low.confidence - 0.1).abs() < 1e-12);
        assert_eq!(high.likelihood, 1.0);
        assert!((r.ece - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zeros_land_in_first_bin() {
        let p = probs(&[vec![1.0, 0.0, 0.0]]);
        let y = LabelVector::new(vec![0], 3).unwrap();
        let bins = reliability_bins(&p, &y, Variant::Output, 15).unwrap();
        assert_eq!(bins[0].count, 2);
        assert_eq!(bins[14].count, 1);
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 3);
    }

    #[test]
    fn all_correct_single_nonempty_bin() {
        let p = probs(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let y = LabelVector::new(vec![0, 0, 1], 2).unwrap();
        let bins = reliability_bins(&p, &y, Variant::Prediction, 15).unwrap();
        let nonempty: Vec<_> = bins.iter().filter(|b| b.count > 0).collect();
        assert_eq!(nonempty.len(), 1);
        assert_eq!((nonempty[0].likelihood, nonempty[0].confidence), (1.0, 1.0));
        assert!(bins.iter().filter(|b| b.count == 0).all(|b| b.likelihood == 0.0 && b.confidence == 0.0));
    }

    #[test]
    fn shape_mismatch() {
        let p = probs(&[vec![1.0, 0.0]]);
        let y = LabelVector::new(vec![0, 1], 2).unwrap();
        assert!(matches!(
            histogram_ece_prediction(&p, &y, 15),
            Err(Error::DimensionMismatch(_))
        ));
    }

    proptest! {
        #[test]
        fn permutation_invariant(seed in any::<u64>(), n in 2usize..80, k in 2usize..6, bins in 1usize..20) {
            let mut rng = Seed(seed).rng();
            let rows: Vec<Vec<f64>> = (0..n).map(|_| {
                let r: Vec<f64> = (0..k).map(|_| rng.uniform().powi(3)).collect();
                let s: f64 = r.iter().sum::<f64>() + 1e-3;
                let mut r: Vec<f64> = r.iter().map(|v| v / s).collect();
                let rest: f64 = r[1..].iter().sum();
                r[0] = 1.0 - rest;
                r
            }).collect();
            let labels: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
            let mut order: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut order);
            let p = probs(&rows);
            let y = LabelVector::new(labels.clone(), k).unwrap();
            let p2 = probs(&order.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>());
            let y2 = LabelVector::new(order.iter().map(|&i| labels[i]).collect(), k).unwrap();
            for variant in [Variant::Prediction, Variant::Output] {
                let a = report(&p, &y, variant, bins).unwrap();
                let b = report(&p2, &y2, variant, bins).unwrap();
                prop_assert!((a.ece - b.ece).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&a.ece));
                let weight: f64 = a.bins.iter().map(|s| s.count as f64 / a.n_effective as f64).sum();
                prop_assert!((weight - 1.0).abs() < 1e-12);
            }
        }
    }
}
