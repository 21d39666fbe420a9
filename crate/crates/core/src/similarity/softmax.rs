use ndarray::{Array2, ArrayView1};

use super::{DistanceMatrix, SimilarityMatrix};
use crate::error::{Error, Result};

/// Upper bound accepted for `β`.
pub const MAX_BETA: f64 = 100.0;

/// Standardizes the off-diagonal entries of a distance row to zero mean and
/// unit population standard deviation. The entry at `reference` is excluded
/// from the statistics and returned untouched.
pub fn standardize_row(row: &[f64], reference: usize) -> Result<Vec<f64>> {
    if reference >= row.len() {
        return Err(Error::InvalidArgument(format!(
            "reference {reference} outside row of length {}",
            row.len()
        )));
    }
    let others = row.len() - 1;
    if others < 2 {
        return Err(Error::InsufficientData(format!(
            "standardization needs 2 off-diagonal entries, row {reference} has {others}"
        )));
    }
    let off = || row.iter().enumerate().filter(move |(k, _)| *k != reference).map(|(_, v)| *v);
    let mean = off().sum::<f64>() / others as f64;
    let var = off().map(|v| (v - mean) * (v - mean)).sum::<f64>() / others as f64;
    let std = var.sqrt();
    if !(std > 1e-12 * mean.abs()) {
        return Err(Error::DegenerateRow(reference));
    }
    Ok(row
        .iter()
        .enumerate()
        .map(|(k, &v)| if k == reference { v } else { (v - mean) / std })
        .collect())
}

/// Class similarities from distances.
///
/// Each row is standardized off the diagonal, passed through a softmax with
/// weight `−β` over the `K − 1` other classes, and given a zero diagonal.
/// Rows without spread (or with a single other class) become uniform over
/// the other classes; rows with zero spread are listed in
/// [`SimilarityMatrix::degenerate_rows`].
pub fn similarity_from_distances(distances: &DistanceMatrix, beta: f64) -> Result<SimilarityMatrix> {
    if !(0.0..=MAX_BETA).contains(&beta) {
        return Err(Error::BetaRange(beta));
    }
    let k = distances.classes();
    let mut out = Array2::zeros((k, k));
    let mut degenerate = Vec::new();
    for r in 0..k {
        let row: Vec<f64> = distances.row(r).to_vec();
        let z = match standardize_row(&row, r) {
            Ok(z) => Some(z),
            Err(Error::DegenerateRow(_)) => {
                degenerate.push(r);
                None
            }
            Err(Error::InsufficientData(_)) => None,
            Err(e) => return Err(e),
        };
        let mut target = out.row_mut(r);
        match z {
            None => {
                let u = 1.0 / (k - 1) as f64;
                for c in (0..k).filter(|&c| c != r) {
                    target[c] = u;
                }
            }
            Some(z) => {
                let logits: Vec<(usize, f64)> =
                    (0..k).filter(|&c| c != r).map(|c| (c, -beta * z[c])).collect();
                let max = logits.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for &(c, l) in &logits {
                    let e = (l - max).exp();
                    target[c] = e;
                    total += e;
                }
                for &(c, _) in &logits {
                    target[c] /= total;
                }
            }
        }
    }
    Ok(SimilarityMatrix::from_parts(out, beta, degenerate))
}

/// Shannon entropy (nats) of a probability row; zero entries contribute 0.
pub fn row_entropy(row: ArrayView1<'_, f64>) -> f64 {
    -row.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::{check_similarity, Metric};
    use crate::rng::Seed;
    use ndarray::array;
    use proptest::prelude::*;

    fn dm(values: Array2<f64>) -> DistanceMatrix {
        DistanceMatrix::new(values, Metric::L2).unwrap()
    }

    fn random_distances(seed: u64, k: usize) -> DistanceMatrix {
        let mut rng = Seed(seed).rng();
        let mut v = Array2::zeros((k, k));
        for a in 0..k {
            v[[a, a]] = rng.uniform();
            for b in (a + 1)..k {
                let d = rng.uniform_range(0.1, 5.0);
                v[[a, b]] = d;
                v[[b, a]] = d;
            }
        }
        dm(v)
    }

    #[test]
    fn standardize_example() {
        let z = standardize_row(&[9.0, 1.0, 2.0, 3.0], 0).unwrap();
        let s = 1.5f64.sqrt();
        assert_eq!(z[0], 9.0);
        assert!((z[1] + s).abs() < 1e-12 && z[2].abs() < 1e-12 && (z[3] - s).abs() < 1e-12);
        assert!((s - 1.2247).abs() < 1e-4);
    }

    #[test]
    fn standardize_flat_row() {
        assert!(matches!(standardize_row(&[0.0, 5.0, 5.0, 5.0], 0), Err(Error::DegenerateRow(0))));
    }

    #[test]
    fn standardize_is_idempotent() {
        let z = standardize_row(&[0.0, 1.0, 2.0, 7.0, 3.5], 0).unwrap();
        let zz = standardize_row(&z, 0).unwrap();
        for (a, b) in z.iter().zip(&zz) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_zero_is_uniform() {
        let s = similarity_from_distances(&random_distances(1, 5), 0.0).unwrap();
        for r in 0..5 {
            for c in 0..5 {
                let want = if r == c { 0.0 } else { 0.25 };
                assert_eq!(s.view()[[r, c]], want);
            }
        }
    }

    #[test]
    fn hand_softmax() {
        // row 0 off-diagonal distances 1, 2, 3 standardize to -√1.5, 0, √1.5;
        // scale them to -1, 0, 1 by picking distances with unit population std
        let s15 = 1.5f64.sqrt();
        let d = dm(array![
            [0.0, 2.0 - s15, 2.0, 2.0 + s15],
            [2.0 - s15, 0.0, 1.0, 2.0],
            [2.0, 1.0, 0.0, 3.0],
            [2.0 + s15, 2.0, 3.0, 0.0],
        ]);
        let z = standardize_row(&d.row(0).to_vec(), 0).unwrap();
        let scale = z[3];
        let beta = 1.0 / scale;
        let s = similarity_from_distances(&d, beta).unwrap();
        let e = std::f64::consts::E;
        let total = e + 1.0 + 1.0 / e;
        let want = [0.0, e / total, 1.0 / total, (1.0 / e) / total];
        for c in 0..4 {
            assert!((s.view()[[0, c]] - want[c]).abs() < 1e-12);
        }
        assert!((want[1] - 0.6652).abs() < 1e-4 && (want[2] - 0.2447).abs() < 1e-4 && (want[3] - 0.0900).abs() < 1e-4);
    }

    #[test]
    fn two_classes_point_at_each_other() {
        let s = similarity_from_distances(&dm(array![[0.0, 3.0], [3.0, 0.0]]), 2.0).unwrap();
        assert_eq!(s.view(), array![[0.0, 1.0], [1.0, 0.0]].view());
        assert!(s.degenerate_rows().is_empty());
    }

    #[test]
    fn flat_row_falls_back_to_uniform() {
        let d = dm(array![[0.0, 2.0, 2.0], [2.0, 0.0, 1.0], [2.0, 1.0, 0.0]]);
        let s = similarity_from_distances(&d, 3.0).unwrap();
        assert_eq!(s.degenerate_rows(), &[0]);
        assert_eq!(s.view()[[0, 1]], 0.5);
        assert_eq!(s.view()[[0, 2]], 0.5);
    }

    #[test]
    fn beta_range() {
        let d = random_distances(2, 3);
        assert!(matches!(similarity_from_distances(&d, -0.1), Err(Error::BetaRange(_))));
        assert!(matches!(similarity_from_distances(&d, 100.5), Err(Error::BetaRange(_))));
        assert!(similarity_from_distances(&d, 100.0).is_ok());
    }

    #[test]
    fn shift_invariance() {
        let d = random_distances(3, 6);
        let mut shifted = d.view().to_owned();
        for a in 0..6 {
            for b in 0..6 {
                if a != b {
                    shifted[[a, b]] += 4.0;
                }
            }
        }
        let s1 = similarity_from_distances(&d, 2.0).unwrap();
        let s2 = similarity_from_distances(&dm(shifted), 2.0).unwrap();
        for (a, b) in s1.view().iter().zip(s2.view()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn similarity_laws(seed in any::<u64>(), k in 3usize..10, beta in 0.01f64..8.0) {
            let d = random_distances(seed, k);
            let s = similarity_from_distances(&d, beta).unwrap();
            prop_assert!(check_similarity(s.view()).is_ok());
            for r in 0..k {
                for a in 0..k {
                    for b in 0..k {
                        if a != r && b != r && d.view()[[r, a]] < d.view()[[r, b]] {
                            prop_assert!(s.view()[[r, a]] > s.view()[[r, b]]);
                        }
                    }
                }
                let sharper = similarity_from_distances(&d, beta * 2.0).unwrap();
                prop_assert!(row_entropy(sharper.row(r)) <= row_entropy(s.row(r)) + 1e-12);
            }
        }
    }
}
