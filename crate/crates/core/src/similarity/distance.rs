use ndarray::{Array1, Array2, ArrayView1};

use super::{DistanceMatrix, Metric};
use crate::data::{EmbeddingTable, FeatureMatrix, LabelVector};
use crate::error::{mismatch, Error, Result};
use crate::rng::Seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lp {
    L1,
    L2,
}

/// `‖a − b‖_p`.
pub fn pairwise_lp_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>, p: Lp) -> Result<f64> {
    if a.len() != b.len() {
        return Err(mismatch(format!("vectors of length {} and {}", a.len(), b.len())));
    }
    Ok(lp(a, b, p))
}

fn lp(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>, p: Lp) -> f64 {
    match p {
        Lp::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        Lp::L2 => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
    }
}

/// Mean pairwise distance between the members of every pair of classes.
///
/// `points` are raw features for `L1`/`L2` or per-sample embeddings for
/// `Embedding` (compared with L2). When `pair_cap` is below
/// `|C(k)|·|C(k')|`, a uniform sample of `pair_cap` distinct pairs is
/// averaged instead, drawn from child stream `k·K + k'` of `seed`.
/// Only `k ≤ k'` is computed; the lower triangle is mirrored.
pub fn interclass_distance(
    points: &FeatureMatrix,
    labels: &LabelVector,
    metric: Metric,
    pair_cap: Option<usize>,
    seed: Seed,
) -> Result<DistanceMatrix> {
    let norm = match metric {
        Metric::L1 => Lp::L1,
        Metric::L2 | Metric::Embedding => Lp::L2,
        Metric::Word => {
            return Err(Error::InvalidArgument(
                "word distances come from class names, not samples".into(),
            ))
        }
    };
    if points.n() != labels.len() {
        return Err(mismatch(format!("{} points but {} labels", points.n(), labels.len())));
    }
    if pair_cap == Some(0) {
        return Err(Error::InvalidArgument("pair cap must be positive".into()));
    }
    let members = labels.members();
    if let Some(k) = members.iter().position(Vec::is_empty) {
        return Err(Error::EmptyClass(k));
    }
    let classes = labels.classes();
    let mut out = Array2::zeros((classes, classes));
    for a in 0..classes {
        for b in a..classes {
            let (ca, cb) = (&members[a], &members[b]);
            let total = ca.len() * cb.len();
            let mut sum = 0.0;
            let count = match pair_cap {
                Some(cap) if cap < total => {
                    let mut rng = seed.child((a * classes + b) as u64).rng();
                    for idx in rng.sample_indices(total, cap) {
                        let (i, j) = (ca[idx / cb.len()], cb[idx % cb.len()]);
                        sum += lp(points.row(i), points.row(j), norm);
                    }
                    cap
                }
                _ => {
                    for &i in ca {
                        for &j in cb {
                            sum += lp(points.row(i), points.row(j), norm);
                        }
                    }
                    total
                }
            };
            let mean = sum / count as f64;
            out[[a, b]] = mean;
            out[[b, a]] = mean;
        }
    }
    DistanceMatrix::new(out, metric)
}

/// Lowercased tokens of a class name, split on whitespace, `-` and `_`.
pub fn class_tokens(name: &str) -> Vec<String> {
    name.split(|c: char| c.is_whitespace() || c == '-' || c == '_')
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// L2 distance between class vectors, each the mean of its name's token
/// vectors. Table keys are matched case-insensitively.
pub fn word_distance(class_names: &[String], vectors: &EmbeddingTable) -> Result<DistanceMatrix> {
    let lowered: std::collections::HashMap<String, usize> = vectors
        .keys()
        .iter()
        .enumerate()
        .rev()
        .map(|(i, k)| (k.to_lowercase(), i))
        .collect();
    let table = vectors.vectors();
    let mut class_vecs = Vec::with_capacity(class_names.len());
    for name in class_names {
        let tokens = class_tokens(name);
        if tokens.is_empty() {
            return Err(Error::UnknownToken {
                token: String::new(),
                class: name.clone(),
            });
        }
        let mut acc = Array1::<f64>::zeros(vectors.dim());
        for t in &tokens {
            let &row = lowered.get(t).ok_or_else(|| Error::UnknownToken {
                token: t.clone(),
                class: name.clone(),
            })?;
            acc += &table.row(row);
        }
        acc /= tokens.len() as f64;
        class_vecs.push(acc);
    }
    let k = class_vecs.len();
    let mut out = Array2::zeros((k, k));
    for a in 0..k {
        for b in (a + 1)..k {
            let d = lp(class_vecs[a].view(), class_vecs[b].view(), Lp::L2);
            out[[a, b]] = d;
            out[[b, a]] = d;
        }
    }
    DistanceMatrix::new(out, Metric::Word)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn table(keys: &[&str], rows: Array2<f64>) -> EmbeddingTable {
        EmbeddingTable::new(keys.iter().map(|s| s.to_string()).collect(), rows).unwrap()
    }

    #[test]
    fn lp_examples() {
        let a = array![0.0, 0.0];
        let b = array![3.0, 4.0];
        assert_eq!(pairwise_lp_distance(a.view(), b.view(), Lp::L2).unwrap(), 5.0);
        assert_eq!(pairwise_lp_distance(a.view(), b.view(), Lp::L1).unwrap(), 7.0);
        assert_eq!(pairwise_lp_distance(b.view(), b.view(), Lp::L2).unwrap(), 0.0);
        assert!(pairwise_lp_distance(a.view(), array![1.0].view(), Lp::L1).is_err());
    }

    #[test]
    fn single_pair_average() {
        let x = FeatureMatrix::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let y = LabelVector::new(vec![0, 1], 2).unwrap();
        let d = interclass_distance(&x, &y, Metric::L2, None, Seed(0)).unwrap();
        assert_eq!(d.view()[[0, 1]], 5.0);
        assert_eq!(d.view()[[0, 0]], 0.0);
    }

    #[test]
    fn hand_average_l1() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let y = LabelVector::new(vec![0, 1, 1], 2).unwrap();
        let d = interclass_distance(&x, &y, Metric::L1, None, Seed(0)).unwrap();
        assert_eq!(d.view()[[0, 1]], 2.0);
        assert_eq!(d.view()[[1, 0]], 2.0);
        // intra-class mean over all ordered pairs, self-pairs included: (0+2+2+0)/4
        assert_eq!(d.view()[[1, 1]], 1.0);
    }

    #[test]
    fn empty_class_rejected() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let y = LabelVector::new(vec![0, 0], 3).unwrap();
        assert!(matches!(
            interclass_distance(&x, &y, Metric::L1, None, Seed(0)),
            Err(Error::EmptyClass(1))
        ));
    }

    #[test]
    fn cap_subsamples_deterministically() {
        let mut rng = Seed(2).rng();
        let rows: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.normal(), rng.normal()]).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let y = LabelVector::new((0..60).map(|i| i % 3).collect(), 3).unwrap();
        let exact = interclass_distance(&x, &y, Metric::L2, None, Seed(1)).unwrap();
        let a = interclass_distance(&x, &y, Metric::L2, Some(50), Seed(1)).unwrap();
        let b = interclass_distance(&x, &y, Metric::L2, Some(50), Seed(1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, exact);
        for (u, v) in a.view().iter().zip(exact.view()) {
            assert!((u - v).abs() < 0.5);
        }
        // cap covering every pair reproduces the exact computation
        let full = interclass_distance(&x, &y, Metric::L2, Some(400), Seed(1)).unwrap();
        assert_eq!(full, exact);
    }

    #[test]
    fn word_vectors() {
        let t = table(&["apple", "pear", "e1", "e2"], array![[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let d = word_distance(&["apple".into(), "pear".into()], &t).unwrap();
        assert_eq!(d.view()[[0, 1]], 0.0);
        let d = word_distance(&["e1".into(), "E2".into()], &t).unwrap();
        assert!((d.view()[[0, 1]] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn multi_word_class_is_mean() {
        let t = table(&["pine", "tree", "origin"], array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        let d = word_distance(&["pine_tree".into(), "origin".into()], &t).unwrap();
        // class vector (0.5, 0.5)
        assert!((d.view()[[0, 1]] - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(class_tokens("Pine tree-top_x"), vec!["pine", "tree", "top", "x"]);
    }

    #[test]
    fn unknown_token_named() {
        let t = table(&["pine"], array![[1.0]]);
        match word_distance(&["pine_cone".into(), "pine".into()], &t) {
            Err(Error::UnknownToken { token, class }) => {
                assert_eq!(token, "cone");
                assert_eq!(class, "pine_cone");
            }
            other => panic!("{other:?}"),
        }
    }

    fn brute_force(x: &[Vec<f64>], y: &[usize], k: usize, p: Lp) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in 0..k {
                let (mut s, mut c) = (0.0, 0usize);
                for i in 0..x.len() {
                    for j in 0..x.len() {
                        if y[i] == a && y[j] == b {
                            let d: f64 = match p {
                                Lp::L1 => x[i].iter().zip(&x[j]).map(|(u, v)| (u - v).abs()).sum(),
                                Lp::L2 => x[i].iter().zip(&x[j]).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt(),
                            };
                            s += d;
                            c += 1;
                        }
                    }
                }
                out[a][b] = s / c as f64;
            }
        }
        out
    }

    proptest! {
        #[test]
        fn matches_double_loop(seed in any::<u64>(), k in 2usize..5, extra in 0usize..15, dim in 1usize..4) {
            let mut rng = Seed(seed).rng();
            let n = k + extra;
            let mut labels: Vec<usize> = (0..k).collect();
            labels.extend((0..extra).map(|_| rng.below(k)));
            let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.normal()).collect()).collect();
            let x = FeatureMatrix::from_rows(&rows).unwrap();
            let y = LabelVector::new(labels.clone(), k).unwrap();
            for (metric, p) in [(Metric::L1, Lp::L1), (Metric::L2, Lp::L2), (Metric::Embedding, Lp::L2)] {
                let d = interclass_distance(&x, &y, metric, None, Seed(0)).unwrap();
                let oracle = brute_force(&rows, &labels, k, p);
                for a in 0..k {
                    for b in 0..k {
                        prop_assert!((d.view()[[a, b]] - oracle[a][b]).abs() < 1e-12);
                        prop_assert_eq!(d.view()[[a, b]], d.view()[[b, a]]);
                    }
                }
            }
        }
    }
}
