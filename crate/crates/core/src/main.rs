use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use simcal::data::FeatureMatrix;
use simcal::harness::experiment::{class_distances, default_class_names, write_sweep};
use simcal::harness::{
    io, ood_eval, run_experiment, sweep, Config, DataSource, Dataset, ExperimentConfig, ExperimentData,
    SweepParam, SynthSpec,
};
use simcal::labels::{onehot_labels, similarity_labels, uniform_labels, Scheme, SmoothLabelMatrix};
use simcal::metrics::{
    histogram_ece_output, histogram_ece_prediction, kde_ece, reliability_bins, CalibrationReport, Estimator, Variant,
};
use simcal::rng::Seed;
use simcal::similarity::{similarity_from_distances, DistanceMatrix, Metric};
use simcal::trainer::{fit_temperature, forward, train, SoftModel, TrainConfig};
use simcal::{Error, Result};

#[derive(Parser)]
#[command(name = "simcal", version, about = "Class-similarity label smoothing and calibration metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<(Config, Seed)> {
        let mut c = Config::load_optional(self.config.as_deref())?;
        if let Some(s) = self.seed {
            c.set("seed", s);
        }
        let seed = Seed(c.get_or("seed", 0u64)?);
        Ok((c, seed))
    }
}

fn set<T: ToString>(c: &mut Config, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        c.set(key, v.to_string());
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset file to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n_per_class: Option<usize>,
    /// line, ring or random.
    #[arg(long)]
    layout: Option<String>,
    #[arg(long)]
    spacing: Option<f64>,
    #[arg(long)]
    noise_std: Option<f64>,
    /// Offset added to the last coordinate, for out-of-distribution data.
    #[arg(long, allow_negative_numbers = true)]
    shift: Option<f64>,
}

#[derive(Args)]
struct DistancesArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset file (`label,f0,…`).
    #[arg(long = "in")]
    input: PathBuf,
    /// Distance matrix file to write.
    #[arg(long)]
    out: PathBuf,
    /// l1, l2, embedding or word.
    #[arg(long)]
    metric: Option<String>,
    /// Per-sample embeddings keyed `0…n-1` (embedding metric).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Word-vector table (word metric).
    #[arg(long)]
    words: Option<PathBuf>,
    /// Comma-separated class names; defaults to `c0,c1,…`.
    #[arg(long)]
    names: Option<String>,
    /// Maximum sampled pairs per class pair.
    #[arg(long)]
    pair_cap: Option<usize>,
}

#[derive(Args)]
struct SmoothArgs {
    #[command(flatten)]
    common: Common,
    /// Distance matrix file; gives the class names and, for the similarity
    /// scheme, the distances.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Class count when no distance file is given.
    #[arg(long)]
    classes: Option<usize>,
    /// Smooth-label matrix file to write.
    #[arg(long)]
    out: PathBuf,
    /// onehot, uniform or similarity.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Training dataset file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Smooth-label matrix file.
    #[arg(long)]
    labels: PathBuf,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// Dataset to predict after training.
    #[arg(long)]
    eval: Option<PathBuf>,
    /// Probability file for `--eval` predictions.
    #[arg(long)]
    probs_out: Option<PathBuf>,
    /// Dataset on which to fit a temperature applied to `--eval` predictions.
    #[arg(long)]
    calibrate: Option<PathBuf>,
    /// Per-epoch loss file.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    activation: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
}

#[derive(Args)]
struct EceArgs {
    #[command(flatten)]
    common: Common,
    /// Probability file (`label,p0,…`).
    #[arg(long = "in")]
    input: PathBuf,
    /// Report file to write.
    #[arg(long)]
    out: PathBuf,
    /// histogram or kde; both when omitted.
    #[arg(long)]
    estimator: Option<String>,
    /// prediction or output; both when omitted.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    bandwidth_factor: Option<f64>,
    /// l1 or l2.
    #[arg(long)]
    kde_norm: Option<String>,
}

#[derive(Args)]
struct ReliabilityArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// prediction (default) or output.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset file; synthetic data from the config is drawn per seed
    /// when omitted.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Sweep table to write.
    #[arg(long)]
    out: PathBuf,
    /// alpha or beta.
    #[arg(long)]
    param: Option<String>,
    /// Comma-separated parameter values.
    #[arg(long)]
    values: Option<String>,
    /// Comma-separated experiment seeds; defaults to `--seed`.
    #[arg(long)]
    seeds: Option<String>,
    /// Also write every experiment's files under this directory.
    #[arg(long)]
    runs_dir: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct OodArgs {
    #[command(flatten)]
    common: Common,
    /// Model file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Confidence histogram file to write.
    #[arg(long)]
    out: PathBuf,
    /// Dataset of out-of-distribution inputs; uniform noise when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Number of uniform-noise samples.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    low: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    high: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Gaussian-blob dataset.
    Synth(SynthArgs),
    /// Class distance matrix from a dataset or word vectors.
    Distances(DistancesArgs),
    /// Smooth-label matrix from a distance matrix.
    Smooth(SmoothArgs),
    /// Train a model on smooth labels.
    Train(TrainArgs),
    /// Calibration error of a probability file.
    Ece(EceArgs),
    /// Reliability diagram table of a probability file.
    Reliability(ReliabilityArgs),
    /// Run experiments over alpha or beta values and seeds.
    Sweep(SweepArgs),
    /// Confidence histogram of a model on out-of-distribution inputs.
    Ood(OodArgs),
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let (mut c, seed) = a.common.load()?;
    set(&mut c, "classes", &a.classes);
    set(&mut c, "dim", &a.dim);
    set(&mut c, "n_per_class", &a.n_per_class);
    set(&mut c, "layout", &a.layout);
    set(&mut c, "spacing", &a.spacing);
    set(&mut c, "noise_std", &a.noise_std);
    set(&mut c, "shift", &a.shift);
    let spec = SynthSpec::from_config(&c, seed)?;
    let ds = match c.get::<f64>("shift")? {
        Some(shift) => simcal::harness::generate_shifted(&spec, shift)?,
        None => simcal::harness::generate_synthetic(&spec)?,
    };
    io::write_dataset(&a.out, &ds.features, &ds.labels)
}

fn class_names(c: &Config, k: usize) -> Result<Vec<String>> {
    match c.raw("names") {
        None => Ok(default_class_names(k)),
        Some(v) => {
            let names: Vec<String> = v.split(',').map(|s| s.trim().to_string()).collect();
            if names.len() != k {
                return Err(Error::DimensionMismatch(format!("{} class names for {k} classes", names.len())));
            }
            Ok(names)
        }
    }
}

fn cmd_distances(a: &DistancesArgs) -> Result<()> {
    let (mut c, seed) = a.common.load()?;
    set(&mut c, "metric", &a.metric);
    set(&mut c, "names", &a.names);
    set(&mut c, "pair_cap", &a.pair_cap);
    let metric: Metric = c.get_or("metric", Metric::L2)?;
    let (features, labels) = io::read_dataset(&a.input, c.get("classes")?)?;
    let names = class_names(&c, labels.classes())?;
    let n = features.n();
    let embeddings = match &a.embeddings {
        Some(p) => Some(io::read_embedding_table(p)?.sample_matrix(n)?),
        None => None,
    };
    let word_vectors = a.words.as_deref().map(io::read_embedding_table).transpose()?;
    let data = ExperimentData {
        dataset: Dataset {
            features,
            labels,
            class_names: names.clone(),
        },
        embeddings,
        word_vectors,
    };
    let all: Vec<usize> = (0..n).collect();
    let d = class_distances(&data, &all, metric, c.get("pair_cap")?, seed.child(3))?;
    io::write_class_matrix(&a.out, &names, d.view())
}

fn cmd_smooth(a: &SmoothArgs) -> Result<()> {
    let (mut c, _) = a.common.load()?;
    set(&mut c, "scheme", &a.scheme);
    set(&mut c, "alpha", &a.alpha);
    set(&mut c, "beta", &a.beta);
    set(&mut c, "classes", &a.classes);
    let scheme: Scheme = c.get_or("scheme", Scheme::Similarity)?;
    let alpha = c.get_or("alpha", 0.1)?;
    let beta = c.get_or("beta", 2.0)?;
    let matrix = match &a.input {
        Some(p) => Some(io::read_class_matrix(p)?),
        None => None,
    };
    let (names, table): (Vec<String>, SmoothLabelMatrix) = match (scheme, matrix) {
        (Scheme::Similarity, Some((names, values))) => {
            let metric = c.get_or("metric", Metric::L2)?;
            let s = similarity_from_distances(&DistanceMatrix::new(values, metric)?, beta)?;
            (names, similarity_labels(&s, alpha)?)
        }
        (Scheme::Similarity, None) => {
            return Err(Error::InvalidArgument("similarity scheme needs --in <distance matrix>".into()));
        }
        (scheme, matrix) => {
            let names = match matrix {
                Some((names, _)) => names,
                None => {
                    let k = c
                        .get::<usize>("classes")?
                        .ok_or_else(|| Error::InvalidArgument("need --in or --classes".into()))?;
                    default_class_names(k)
                }
            };
            let table = if scheme == Scheme::OneHot {
                onehot_labels(names.len())?
            } else {
                uniform_labels(names.len(), alpha)?
            };
            (names, table)
        }
    };
    io::write_class_matrix(&a.out, &names, table.view())
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let (mut c, seed) = a.common.load()?;
    set(&mut c, "arch", &a.arch);
    set(&mut c, "hidden", &a.hidden);
    set(&mut c, "activation", &a.activation);
    set(&mut c, "epochs", &a.epochs);
    set(&mut c, "batch_size", &a.batch_size);
    set(&mut c, "learning_rate", &a.learning_rate);
    let cfg = ExperimentConfig::from_config(&c)?;
    let (names, values) = io::read_class_matrix(&a.labels)?;
    let table = SmoothLabelMatrix::from_values(values, c.get_or("alpha", 0.0)?, c.get_or("scheme", Scheme::Similarity)?)?;
    let (x, y) = io::read_dataset(&a.input, Some(names.len()))?;
    let model = SoftModel::new(cfg.arch, x.dim(), cfg.hidden, names.len(), cfg.activation, seed.child(1))?;
    let train_cfg = TrainConfig {
        seed: seed.child(2),
        ..cfg.train
    };
    let outcome = train(model, &x, &y, &table, &train_cfg)?;
    io::write_model(&a.out, &outcome.model)?;
    if let Some(p) = &a.trace_out {
        let mut text = String::from("epoch,loss\n");
        for (e, l) in outcome.loss_trace.iter().enumerate() {
            text.push_str(&format!("{e},{}\n", io::fmt_real(*l)));
        }
        std::fs::write(p, text)?;
    }
    if let Some(eval) = &a.eval {
        let out = a
            .probs_out
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("--eval needs --probs-out".into()))?;
        let (xe, ye) = io::read_dataset(eval, Some(names.len()))?;
        let (logits, mut probs) = forward(&outcome.model, &xe)?;
        if let Some(cal) = &a.calibrate {
            let (xc, yc) = io::read_dataset(cal, Some(names.len()))?;
            let (cal_logits, _) = forward(&outcome.model, &xc)?;
            let fit = fit_temperature(cal_logits.view(), &yc)?;
            probs = fit.temperature.apply(logits.view())?;
        }
        io::write_probs(out, &probs, &ye)?;
    }
    Ok(())
}

fn cmd_ece(a: &EceArgs) -> Result<()> {
    let (mut c, _) = a.common.load()?;
    set(&mut c, "bins", &a.bins);
    set(&mut c, "bandwidth_factor", &a.bandwidth_factor);
    set(&mut c, "kde_norm", &a.kde_norm);
    let cfg = ExperimentConfig::from_config(&c)?;
    let (probs, labels) = io::read_probs(&a.input)?;
    let estimators = match &a.estimator {
        Some(e) => vec![e.parse::<Estimator>()?],
        None => vec![Estimator::Histogram, Estimator::Kde],
    };
    let variants = match &a.variant {
        Some(v) => vec![v.parse::<Variant>()?],
        None => vec![Variant::Prediction, Variant::Output],
    };
    let mut reports: Vec<CalibrationReport> = Vec::new();
    for e in &estimators {
        for v in &variants {
            reports.push(match (e, v) {
                (Estimator::Histogram, Variant::Prediction) => histogram_ece_prediction(&probs, &labels, cfg.bins)?,
                (Estimator::Histogram, Variant::Output) => histogram_ece_output(&probs, &labels, cfg.bins)?,
                (Estimator::Kde, v) => kde_ece(&probs, &labels, *v, &cfg.kde)?,
            });
        }
    }
    io::write_reports(&a.out, &reports)
}

fn cmd_reliability(a: &ReliabilityArgs) -> Result<()> {
    let (mut c, _) = a.common.load()?;
    set(&mut c, "bins", &a.bins);
    set(&mut c, "variant", &a.variant);
    let (probs, labels) = io::read_probs(&a.input)?;
    let bins = reliability_bins(
        &probs,
        &labels,
        c.get_or("variant", Variant::Prediction)?,
        c.get_or("bins", simcal::metrics::DEFAULT_BINS)?,
    )?;
    io::write_reliability(&a.out, &bins)
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let (mut c, seed) = a.common.load()?;
    set(&mut c, "param", &a.param);
    set(&mut c, "values", &a.values);
    set(&mut c, "seeds", &a.seeds);
    set(&mut c, "scheme", &a.scheme);
    set(&mut c, "metric", &a.metric);
    set(&mut c, "alpha", &a.alpha);
    set(&mut c, "beta", &a.beta);
    set(&mut c, "epochs", &a.epochs);
    let template = ExperimentConfig::from_config(&c)?;
    let param: SweepParam = c
        .get("param")?
        .ok_or_else(|| Error::InvalidArgument("sweep needs param = alpha|beta".into()))?;
    let values: Vec<f64> = c
        .get_list("values")?
        .ok_or_else(|| Error::InvalidArgument("sweep needs a values list".into()))?;
    let seeds: Vec<u64> = c.get_list("seeds")?.unwrap_or_else(|| vec![seed.0]);
    let source = match &a.input {
        Some(p) => {
            let (features, labels) = io::read_dataset(p, c.get("classes")?)?;
            let names = class_names(&c, labels.classes())?;
            DataSource::Fixed(Box::new(
                Dataset {
                    features,
                    labels,
                    class_names: names,
                }
                .into(),
            ))
        }
        None => DataSource::Synthetic(SynthSpec::from_config(&c, seed)?),
    };
    let rows = sweep(&template, &source, param, &values, &seeds)?;
    write_sweep(&a.out, &rows)?;
    if let Some(dir) = &a.runs_dir {
        for &s in &seeds {
            let data = source.materialize(Seed(s))?;
            for &v in &values {
                let mut cfg = template.clone();
                match param {
                    SweepParam::Alpha => cfg.alpha = v,
                    SweepParam::Beta => cfg.beta = v,
                }
                let report = run_experiment(&cfg, &data, Seed(s))?;
                report.write_to(&dir.join(format!("{param}_{v}_seed{s}")))?;
            }
        }
    }
    Ok(())
}

fn cmd_ood(a: &OodArgs) -> Result<()> {
    let (mut c, seed) = a.common.load()?;
    set(&mut c, "bins", &a.bins);
    set(&mut c, "n", &a.n);
    set(&mut c, "low", &a.low);
    set(&mut c, "high", &a.high);
    let model = io::read_model(&a.input)?;
    let x: FeatureMatrix = match &a.data {
        Some(p) => io::read_dataset(p, None)?.0,
        None => simcal::harness::uniform_noise(
            c.get_or("n", 1000)?,
            model.input_dim(),
            c.get_or("low", -1.0)?,
            c.get_or("high", 1.0)?,
            seed,
        )?,
    };
    let report = ood_eval(&model, &x, c.get_or("bins", 10)?)?;
    io::write_confidence_histogram(&a.out, &report.histogram)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Distances(a) => cmd_distances(a),
        Command::Smooth(a) => cmd_smooth(a),
        Command::Train(a) => cmd_train(a),
        Command::Ece(a) => cmd_ece(a),
        Command::Reliability(a) => cmd_reliability(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Ood(a) => cmd_ood(a),
    }
}

fn report(kind: &str, message: &str) {
    let message = message.trim().replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
    eprintln!("error kind={kind} message=\"{message}\"");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            report("UsageError", text.lines().next().unwrap_or("").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(e.kind(), &e.to_string());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

