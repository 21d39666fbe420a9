//! Synthetic data, file formats, configuration and experiment pipelines.

pub mod config;
pub mod experiment;
pub mod io;
pub mod synth;

pub use config::Config;
pub use experiment::{
    evaluate, ood_eval, run_experiment, split_indices, summarize_sweep, sweep, DataSource, Evaluation,
    ExperimentConfig, ExperimentData, ExperimentReport, OodReport, Split, SweepMean, SweepParam, SweepRow,
};
pub use synth::{generate_shifted, generate_synthetic, uniform_noise, Dataset, Layout, SynthSpec};
