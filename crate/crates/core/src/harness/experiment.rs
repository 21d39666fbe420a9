//! End-to-end pipelines: train under a label scheme, evaluate calibration,
//! sweep a hyperparameter, probe out-of-distribution confidence.
//!
//! Every random choice inside an experiment comes from a child stream of
//! the experiment seed: 0 for the split, 1 for weight init, 2 for the
//! training shuffle, 3 for distance subsampling, 4 for synthetic data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::config::Config;
use super::io;
use super::synth::{generate_synthetic, Dataset, SynthSpec};
use crate::data::{EmbeddingTable, FeatureMatrix, LabelVector, ProbMatrix};
use crate::error::{Error, Result};
use crate::labels::{onehot_labels, similarity_labels, uniform_labels, Scheme, SmoothLabelMatrix};
use crate::metrics::{
    accuracy, confidence_histogram, histogram_ece_output, histogram_ece_prediction, kde_ece, mean_confidence,
    nll, CalibrationReport, ConfidenceHistogram, KdeConfig, Variant, DEFAULT_BINS,
};
use crate::rng::Seed;
use crate::similarity::{interclass_distance, similarity_from_distances, word_distance, DistanceMatrix, Metric};
use crate::trainer::{fit_temperature, forward, train, Activation, Arch, SoftModel, TemperatureFit, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub metric: Metric,
    pub alpha: f64,
    pub beta: f64,
    /// Histogram bins.
    pub bins: usize,
    pub kde: KdeConfig,
    /// The seed field is replaced by the experiment's shuffle stream.
    pub train: TrainConfig,
    pub arch: Arch,
    pub hidden: usize,
    pub activation: Activation,
    /// Train, validation and test fractions.
    pub split: (f64, f64, f64),
    /// Fit a temperature on the validation split and report post-scaling metrics.
    pub temperature_scaling: bool,
    pub pair_cap: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Similarity,
            metric: Metric::L2,
            alpha: 0.1,
            beta: 2.0,
            bins: DEFAULT_BINS,
            kde: KdeConfig::default(),
            train: TrainConfig {
                epochs: 100,
                batch_size: 32,
                learning_rate: 0.1,
                seed: Seed(0),
                shuffle: true,
            },
            arch: Arch::Mlp1,
            hidden: 32,
            activation: Activation::Relu,
            split: (0.6, 0.2, 0.2),
            temperature_scaling: false,
            pair_cap: None,
        }
    }
}

impl ExperimentConfig {
    /// Builds a config from `key = value` pairs; missing keys keep their
    /// defaults. Keys: `scheme`, `metric`, `alpha`, `beta`, `bins`,
    /// `bandwidth_factor`, `kde_norm`, `epochs`, `batch_size`,
    /// `learning_rate`, `shuffle`, `arch`, `hidden`, `activation`,
    /// `split` (three fractions), `temperature_scaling`, `pair_cap`.
    pub fn from_config(c: &Config) -> Result<Self> {
        let d = Self::default();
        let split = match c.get_list::<f64>("split")? {
            None => d.split,
            Some(v) if v.len() == 3 => (v[0], v[1], v[2]),
            Some(v) => {
                return Err(Error::InvalidArgument(format!("split needs three fractions, got {}", v.len())));
            }
        };
        let cfg = Self {
            scheme: c.get_or("scheme", d.scheme)?,
            metric: c.get_or("metric", d.metric)?,
            alpha: c.get_or("alpha", d.alpha)?,
            beta: c.get_or("beta", d.beta)?,
            bins: c.get_or("bins", d.bins)?,
            kde: KdeConfig {
                bandwidth_factor: c.get_or("bandwidth_factor", d.kde.bandwidth_factor)?,
                norm: c.get_or("kde_norm", d.kde.norm)?,
                ..d.kde
            },
            train: TrainConfig {
                epochs: c.get_or("epochs", d.train.epochs)?,
                batch_size: c.get_or("batch_size", d.train.batch_size)?,
                learning_rate: c.get_or("learning_rate", d.train.learning_rate)?,
                shuffle: c.get_or("shuffle", d.train.shuffle)?,
                seed: d.train.seed,
            },
            arch: c.get_or("arch", d.arch)?,
            hidden: c.get_or("hidden", d.hidden)?,
            activation: c.get_or("activation", d.activation)?,
            split,
            temperature_scaling: c.get_or("temperature_scaling", d.temperature_scaling)?,
            pair_cap: c.get("pair_cap")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.split;
        if !(a > 0.0 && b > 0.0 && c > 0.0) || (a + b + c - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split fractions must be positive and sum to 1, got ({a}, {b}, {c})"
            )));
        }
        if self.bins == 0 {
            return Err(Error::InvalidArgument("bins must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::AlphaRange(self.alpha));
        }
        Ok(())
    }
}

/// Inputs of an experiment. `embeddings` rows align with the dataset rows.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub dataset: Dataset,
    pub embeddings: Option<FeatureMatrix>,
    pub word_vectors: Option<EmbeddingTable>,
}

impl From<Dataset> for ExperimentData {
    fn from(dataset: Dataset) -> Self {
        Self {
            dataset,
            embeddings: None,
            word_vectors: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split: each class is shuffled (child stream `k`) and cut by
/// the fractions; the final index lists are sorted.
pub fn split_indices(labels: &LabelVector, fractions: (f64, f64, f64), seed: Seed) -> Result<Split> {
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (k, mut members) in labels.members().into_iter().enumerate() {
        seed.child(k as u64).rng().shuffle(&mut members);
        let n = members.len();
        let n_train = (n as f64 * fractions.0).round() as usize;
        let n_val = ((n as f64 * fractions.1).round() as usize).min(n - n_train.min(n));
        let n_train = n_train.min(n);
        split.train.extend_from_slice(&members[..n_train]);
        split.val.extend_from_slice(&members[n_train..n_train + n_val]);
        split.test.extend_from_slice(&members[n_train + n_val..]);
    }
    for part in [&mut split.train, &mut split.val, &mut split.test] {
        if part.is_empty() {
            return Err(Error::InsufficientData("a data split is empty".into()));
        }
        part.sort_unstable();
    }
    Ok(split)
}

/// Calibration and accuracy of one set of predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub hist_pred: CalibrationReport,
    pub hist_out: CalibrationReport,
    pub kde_pred: CalibrationReport,
    pub kde_out: CalibrationReport,
    pub accuracy: f64,
    pub nll: f64,
    pub mean_confidence: f64,
}

pub fn evaluate(probs: &ProbMatrix, labels: &LabelVector, bins: usize, kde: &KdeConfig) -> Result<Evaluation> {
    Ok(Evaluation {
        hist_pred: histogram_ece_prediction(probs, labels, bins)?,
        hist_out: histogram_ece_output(probs, labels, bins)?,
        kde_pred: kde_ece(probs, labels, Variant::Prediction, kde)?,
        kde_out: kde_ece(probs, labels, Variant::Output, kde)?,
        accuracy: accuracy(probs, labels)?,
        nll: nll(probs, labels)?,
        mean_confidence: mean_confidence(probs),
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub seed: Seed,
    pub class_names: Vec<String>,
    pub distances: Option<DistanceMatrix>,
    pub targets: SmoothLabelMatrix,
    pub model: SoftModel,
    pub loss_trace: Vec<f64>,
    pub test_probs: ProbMatrix,
    pub test_labels: LabelVector,
    pub test: Evaluation,
    pub temperature: Option<TemperatureFit>,
    pub test_scaled: Option<Evaluation>,
}

/// Class distances for `metric` over the training rows.
pub fn class_distances(
    data: &ExperimentData,
    train_idx: &[usize],
    metric: Metric,
    pair_cap: Option<usize>,
    seed: Seed,
) -> Result<DistanceMatrix> {
    let labels = data.dataset.labels.select(train_idx);
    match metric {
        Metric::L1 | Metric::L2 => {
            interclass_distance(&data.dataset.features.select(train_idx), &labels, metric, pair_cap, seed)
        }
        Metric::Embedding => {
            let emb = data
                .embeddings
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("embedding metric needs an embedding table".into()))?;
            if emb.n() != data.dataset.features.n() {
                return Err(Error::DimensionMismatch(format!(
                    "{} embeddings for {} samples",
                    emb.n(),
                    data.dataset.features.n()
                )));
            }
            interclass_distance(&emb.select(train_idx), &labels, metric, pair_cap, seed)
        }
        Metric::Word => {
            let table = data
                .word_vectors
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("word metric needs a word-vector table".into()))?;
            word_distance(&data.dataset.class_names, table)
        }
    }
}

/// Trains one model under `cfg.scheme` and evaluates it on the test split.
pub fn run_experiment(cfg: &ExperimentConfig, data: &ExperimentData, seed: Seed) -> Result<ExperimentReport> {
    cfg.validate()?;
    let ds = &data.dataset;
    let k = ds.labels.classes();
    let split = split_indices(&ds.labels, cfg.split, seed.child(0))?;

    let (distances, targets) = match cfg.scheme {
        Scheme::OneHot => (None, onehot_labels(k)?),
        Scheme::Uniform => (None, uniform_labels(k, cfg.alpha)?),
        Scheme::Similarity => {
            let d = class_distances(data, &split.train, cfg.metric, cfg.pair_cap, seed.child(3))?;
            let s = similarity_from_distances(&d, cfg.beta)?;
            (Some(d), similarity_labels(&s, cfg.alpha)?)
        }
    };

    let train_set = ds.select(&split.train);
    let model = SoftModel::new(cfg.arch, ds.features.dim(), cfg.hidden, k, cfg.activation, seed.child(1))?;
    let train_cfg = TrainConfig {
        seed: seed.child(2),
        ..cfg.train
    };
    let outcome = train(model, &train_set.features, &train_set.labels, &targets, &train_cfg)?;

    let test_set = ds.select(&split.test);
    let (test_logits, test_probs) = forward(&outcome.model, &test_set.features)?;
    let test = evaluate(&test_probs, &test_set.labels, cfg.bins, &cfg.kde)?;

    let (temperature, test_scaled) = if cfg.temperature_scaling {
        let val_set = ds.select(&split.val);
        let (val_logits, _) = forward(&outcome.model, &val_set.features)?;
        let fit = fit_temperature(val_logits.view(), &val_set.labels)?;
        let scaled = fit.temperature.apply(test_logits.view())?;
        (Some(fit), Some(evaluate(&scaled, &test_set.labels, cfg.bins, &cfg.kde)?))
    } else {
        (None, None)
    };

    Ok(ExperimentReport {
        config: cfg.clone(),
        seed,
        class_names: ds.class_names.clone(),
        distances,
        targets,
        model: outcome.model,
        loss_trace: outcome.loss_trace,
        test_probs,
        test_labels: test_set.labels,
        test,
        temperature,
        test_scaled,
    })
}

fn metric_rows(prefix: &str, e: &Evaluation, out: &mut Vec<(String, f64)>) {
    out.push((format!("{prefix}accuracy"), e.accuracy));
    out.push((format!("{prefix}nll"), e.nll));
    out.push((format!("{prefix}mean_confidence"), e.mean_confidence));
    out.push((format!("{prefix}hist_pred"), e.hist_pred.ece));
    out.push((format!("{prefix}hist_out"), e.hist_out.ece));
    out.push((format!("{prefix}kde_pred"), e.kde_pred.ece));
    out.push((format!("{prefix}kde_out"), e.kde_out.ece));
}

impl ExperimentReport {
    /// Scalar results as `(name, value)` pairs, in file order.
    pub fn scalars(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        metric_rows("", &self.test, &mut out);
        if let (Some(fit), Some(scaled)) = (&self.temperature, &self.test_scaled) {
            out.push(("temperature".into(), fit.temperature.value()));
            out.push(("temperature_hit_bound".into(), if fit.hit_bound { 1.0 } else { 0.0 }));
            metric_rows("ts_", scaled, &mut out);
        }
        out
    }

    /// Writes `metrics.csv`, `reliability_prediction.csv`,
    /// `reliability_output.csv`, `test_probs.csv`, `targets.csv`,
    /// `model.txt`, `loss_trace.csv`, `calibration.csv` and, for the
    /// similarity scheme, `distances.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut metrics = String::from("name,value\n");
        for (name, v) in self.scalars() {
            let _ = writeln!(metrics, "{name},{}", io::fmt_real(v));
        }
        std::fs::write(dir.join("metrics.csv"), metrics)?;
        io::write_reliability(&dir.join("reliability_prediction.csv"), &self.test.hist_pred.bins)?;
        io::write_reliability(&dir.join("reliability_output.csv"), &self.test.hist_out.bins)?;
        io::write_reports(
            &dir.join("calibration.csv"),
            &[
                self.test.hist_pred.clone(),
                self.test.hist_out.clone(),
                self.test.kde_pred.clone(),
                self.test.kde_out.clone(),
            ],
        )?;
        io::write_probs(&dir.join("test_probs.csv"), &self.test_probs, &self.test_labels)?;
        io::write_class_matrix(&dir.join("targets.csv"), &self.class_names, self.targets.view())?;
        if let Some(d) = &self.distances {
            io::write_class_matrix(&dir.join("distances.csv"), &self.class_names, d.view())?;
        }
        io::write_model(&dir.join("model.txt"), &self.model)?;
        let mut trace = String::from("epoch,loss\n");
        for (e, l) in self.loss_trace.iter().enumerate() {
            let _ = writeln!(trace, "{e},{}", io::fmt_real(*l));
        }
        std::fs::write(dir.join("loss_trace.csv"), trace)?;
        Ok(())
    }
}

/// Reads `metrics.csv` written by [`ExperimentReport::write_to`].
pub fn read_metrics(path: &Path) -> Result<BTreeMap<String, f64>> {
    let t = io::Table::read(path)?;
    t.expect_header("name,value")?;
    t.rows
        .iter()
        .map(|(line, f)| Ok((f[0].clone(), t.real(*line, &f[1])?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    Beta,
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
        })
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SweepParam::Alpha),
            "beta" => Ok(SweepParam::Beta),
            _ => Err(Error::InvalidArgument(format!("unknown sweep parameter '{s}'"))),
        }
    }
}

/// Where experiment data comes from.
#[derive(Debug, Clone)]
pub enum DataSource {
    /// The same data for every seed.
    Fixed(Box<ExperimentData>),
    /// A fresh synthetic dataset per seed, drawn from child stream 4.
    Synthetic(SynthSpec),
}

impl DataSource {
    pub fn materialize(&self, seed: Seed) -> Result<ExperimentData> {
        match self {
            DataSource::Fixed(d) => Ok((**d).clone()),
            DataSource::Synthetic(spec) => {
                let spec = SynthSpec {
                    seed: seed.child(4),
                    ..*spec
                };
                Ok(generate_synthetic(&spec)?.into())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub seed: u64,
    pub hist_pred: f64,
    pub hist_out: f64,
    pub kde_pred: f64,
    pub kde_out: f64,
    pub acc: f64,
    pub nll: f64,
}

impl SweepRow {
    fn from_report(param: SweepParam, value: f64, report: &ExperimentReport) -> Self {
        let e = &report.test;
        Self {
            param,
            value,
            seed: report.seed.0,
            hist_pred: e.hist_pred.ece,
            hist_out: e.hist_out.ece,
            kde_pred: e.kde_pred.ece,
            kde_out: e.kde_out.ece,
            acc: e.accuracy,
            nll: e.nll,
        }
    }
}

/// Runs one experiment per `(value, seed)`; rows come back in value-major
/// order. Each seed sees the same data for every value.
pub fn sweep(
    template: &ExperimentConfig,
    source: &DataSource,
    param: SweepParam,
    values: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepRow>> {
    if values.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value and one seed".into()));
    }
    let data: Vec<ExperimentData> = seeds.iter().map(|&s| source.materialize(Seed(s))).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(values.len() * seeds.len());
    for &value in values {
        let mut cfg = template.clone();
        match param {
            SweepParam::Alpha => cfg.alpha = value,
            SweepParam::Beta => cfg.beta = value,
        }
        for (&s, d) in seeds.iter().zip(&data) {
            let report = run_experiment(&cfg, d, Seed(s))?;
            rows.push(SweepRow::from_report(param, value, &report));
        }
    }
    Ok(rows)
}

pub fn sweep_text(rows: &[SweepRow]) -> String {
    let mut out = format!("{}\n", io::SWEEP_HEADER);
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.param,
            io::fmt_real(r.value),
            r.seed,
            io::fmt_real(r.hist_pred),
            io::fmt_real(r.hist_out),
            io::fmt_real(r.kde_pred),
            io::fmt_real(r.kde_out),
            io::fmt_real(r.acc),
            io::fmt_real(r.nll)
        );
    }
    out
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, sweep_text(rows))?;
    Ok(())
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRow>> {
    let t = io::Table::read(path)?;
    t.expect_header(io::SWEEP_HEADER)?;
    t.rows
        .iter()
        .map(|(line, f)| {
            let r = |i: usize| t.real(*line, &f[i]);
            Ok(SweepRow {
                param: f[0].parse()?,
                value: r(1)?,
                seed: f[2].parse().map_err(|_| t.error(*line, "bad seed"))?,
                hist_pred: r(3)?,
                hist_out: r(4)?,
                kde_pred: r(5)?,
                kde_out: r(6)?,
                acc: r(7)?,
                nll: r(8)?,
            })
        })
        .collect()
}

/// Per-value means over seeds, in first-appearance order of the values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMean {
    pub value: f64,
    pub hist_pred: f64,
    pub hist_out: f64,
    pub kde_pred: f64,
    pub kde_out: f64,
    pub acc: f64,
    pub nll: f64,
}

pub fn summarize_sweep(rows: &[SweepRow]) -> Vec<SweepMean> {
    let mut values: Vec<f64> = Vec::new();
    for r in rows {
        if !values.contains(&r.value) {
            values.push(r.value);
        }
    }
    values
        .into_iter()
        .map(|v| {
            let group: Vec<&SweepRow> = rows.iter().filter(|r| r.value == v).collect();
            let mean = |f: fn(&SweepRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / group.len() as f64;
            SweepMean {
                value: v,
                hist_pred: mean(|r| r.hist_pred),
                hist_out: mean(|r| r.hist_out),
                kde_pred: mean(|r| r.kde_pred),
                kde_out: mean(|r| r.kde_out),
                acc: mean(|r| r.acc),
                nll: mean(|r| r.nll),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OodReport {
    pub histogram: ConfidenceHistogram,
    pub mean_confidence: f64,
}

/// Winning-class confidence distribution of `model` on `ood` inputs.
pub fn ood_eval(model: &SoftModel, ood: &FeatureMatrix, n_bins: usize) -> Result<OodReport> {
    let (_, probs) = forward(model, ood)?;
    Ok(OodReport {
        histogram: confidence_histogram(&probs, n_bins)?,
        mean_confidence: mean_confidence(&probs),
    })
}

/// Names `c0…c{K−1}`, used when a file carries no class names.
pub fn default_class_names(k: usize) -> Vec<String> {
    (0..k).map(|c| format!("c{c}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::Layout;

    fn small_spec() -> SynthSpec {
        SynthSpec {
            classes: 4,
            dim: 2,
            n_per_class: 40,
            layout: Layout::Line,
            spacing: 1.0,
            noise_std: 0.4,
            seed: Seed(0),
        }
    }

    fn quick_cfg() -> ExperimentConfig {
        ExperimentConfig {
            train: TrainConfig {
                epochs: 5,
                batch_size: 16,
                learning_rate: 0.1,
                seed: Seed(0),
                shuffle: true,
            },
            hidden: 8,
            temperature_scaling: true,
            ..Default::default()
        }
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let y = LabelVector::new((0..100).map(|i| i % 4).collect(), 4).unwrap();
        let s = split_indices(&y, (0.6, 0.2, 0.2), Seed(1)).unwrap();
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), 100);
        assert_eq!(s.train.len(), 60);
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        for k in 0..4 {
            assert!(s.test.iter().any(|&i| i % 4 == k));
        }
    }

    #[test]
    fn experiment_is_reproducible() {
        let data: ExperimentData = generate_synthetic(&small_spec()).unwrap().into();
        let a = run_experiment(&quick_cfg(), &data, Seed(3)).unwrap();
        let b = run_experiment(&quick_cfg(), &data, Seed(3)).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.scalars(), b.scalars());
        assert!(a.temperature.is_some());
    }

    #[test]
    fn beta_zero_targets_are_uniform_over_others() {
        let data: ExperimentData = generate_synthetic(&small_spec()).unwrap().into();
        let cfg = ExperimentConfig { beta: 0.0, ..quick_cfg() };
        let r = run_experiment(&cfg, &data, Seed(0)).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let want = if a == b { 0.9 } else { 0.1 / 3.0 };
                assert!((r.targets.view()[[a, b]] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn report_files_round_trip() {
        let data: ExperimentData = generate_synthetic(&small_spec()).unwrap().into();
        let r = run_experiment(&quick_cfg(), &data, Seed(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        r.write_to(dir.path()).unwrap();
        let metrics = read_metrics(&dir.path().join("metrics.csv")).unwrap();
        for (name, v) in r.scalars() {
            assert_eq!(metrics[&name], v, "{name}");
        }
        assert_eq!(io::read_reliability(&dir.path().join("reliability_output.csv")).unwrap(), r.test.hist_out.bins);
        assert_eq!(io::read_model(&dir.path().join("model.txt")).unwrap(), r.model);
        let (p, y) = io::read_probs(&dir.path().join("test_probs.csv")).unwrap();
        assert_eq!((p, y), (r.test_probs.clone(), r.test_labels.clone()));
        let reports = io::read_reports(&dir.path().join("calibration.csv")).unwrap();
        assert_eq!(reports[3].ece, r.test.kde_out.ece);
        assert_eq!(reports[3].bandwidth, r.test.kde_out.bandwidth);
        let (names, d) = io::read_class_matrix(&dir.path().join("distances.csv")).unwrap();
        assert_eq!(names, r.class_names);
        assert_eq!(d.view(), r.distances.unwrap().view());
    }

    #[test]
    fn single_value_sweep_is_one_experiment() {
        let source = DataSource::Synthetic(small_spec());
        let rows = sweep(&quick_cfg(), &source, SweepParam::Alpha, &[0.2], &[5]).unwrap();
        assert_eq!(rows.len(), 1);
        let cfg = ExperimentConfig { alpha: 0.2, ..quick_cfg() };
        let r = run_experiment(&cfg, &source.materialize(Seed(5)).unwrap(), Seed(5)).unwrap();
        assert_eq!(rows[0].hist_out, r.test.hist_out.ece);
        assert_eq!(rows[0].nll, r.test.nll);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_sweep(&path, &rows).unwrap();
        assert_eq!(read_sweep(&path).unwrap(), rows);
    }

    #[test]
    fn config_keys_override_defaults() {
        let c = Config::parse("scheme = uniform\nalpha = 0.3\nsplit = 0.5, 0.25, 0.25\nepochs = 7\nkde_norm = l2\n", "t").unwrap();
        let cfg = ExperimentConfig::from_config(&c).unwrap();
        assert_eq!(cfg.scheme, Scheme::Uniform);
        assert_eq!(cfg.alpha, 0.3);
        assert_eq!(cfg.split, (0.5, 0.25, 0.25));
        assert_eq!(cfg.train.epochs, 7);
        assert_eq!(cfg.kde.norm, crate::metrics::KdeNorm::L2);
        assert_eq!(cfg.beta, 2.0);
        let bad = Config::parse("split = 0.5, 0.5, 0.5\n", "t").unwrap();
        assert!(matches!(ExperimentConfig::from_config(&bad), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn word_metric_needs_vectors() {
        let data: ExperimentData = generate_synthetic(&small_spec()).unwrap().into();
        let cfg = ExperimentConfig { metric: Metric::Word, ..quick_cfg() };
        assert!(matches!(run_experiment(&cfg, &data, Seed(0)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn ood_counts_sum_to_n() {
        let m = SoftModel::new(Arch::Mlp1, 2, 4, 3, Activation::Relu, Seed(1)).unwrap();
        let x = crate::harness::synth::uniform_noise(37, 2, -3.0, 3.0, Seed(2)).unwrap();
        let r = ood_eval(&m, &x, 10).unwrap();
        assert_eq!(r.histogram.total(), 37);
        let bad = crate::harness::synth::uniform_noise(5, 3, 0.0, 1.0, Seed(2)).unwrap();
        assert!(matches!(ood_eval(&m, &bad, 10), Err(Error::DimensionMismatch(_))));
    }
}
