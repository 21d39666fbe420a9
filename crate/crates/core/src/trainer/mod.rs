//! Small softmax classifiers trained against soft targets, plus temperature
//! scaling.
//!
//! With per-sample target rows `π_i` the loss is the mean cross-entropy
//! `−(1/n) Σ_i Σ_k π_i(k) log h(k|x_i)`. Because it is linear in the targets,
//! a smoothed target `(1 − α)e_y + α q` splits it into
//! `(1 − α)·(one-hot loss) + α·(cross-entropy against q)`.

mod model;
mod temperature;

pub use model::{
    forward, gradients, soft_cross_entropy, softmax_rows, train, Activation, Arch, Dense, Gradients,
    SoftModel, TrainConfig, TrainOutcome, LOG_FLOOR,
};
pub use temperature::{fit_temperature, nll_at_temperature, Temperature, TemperatureFit, T_MAX, T_MIN};
