use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::data::{FeatureMatrix, LabelVector, ProbMatrix};
use crate::error::{mismatch, Error, Result};
use crate::labels::{expand_to_samples, SmoothLabelMatrix};
use crate::rng::{Seed, SeededRng};

/// Probabilities are clipped below at this value inside the logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    Linear,
    /// One hidden layer.
    Mlp1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::Linear => "linear",
            Arch::Mlp1 => "mlp1",
        })
    }
}

impl FromStr for Arch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Arch::Linear),
            "mlp1" => Ok(Arch::Mlp1),
            _ => Err(Error::InvalidArgument(format!("unknown architecture '{s}'"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            _ => Err(Error::InvalidArgument(format!("unknown activation '{s}'"))),
        }
    }
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

/// Affine layer `y = x·W + b` with `W` of shape `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    /// Weights uniform in `±sqrt(6 / (in + out))`, zero bias.
    fn glorot(inputs: usize, outputs: usize, rng: &mut SeededRng) -> Self {
        let a = (6.0 / (inputs + outputs) as f64).sqrt();
        Self {
            weights: Array2::from_shape_fn((inputs, outputs), |_| rng.uniform_range(-a, a)),
            bias: Array1::zeros(outputs),
        }
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.weights) + &self.bias
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }
}

/// Linear softmax classifier or one-hidden-layer network.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftModel {
    arch: Arch,
    activation: Activation,
    input_dim: usize,
    hidden_dim: usize,
    classes: usize,
    layers: Vec<Dense>,
}

impl SoftModel {
    /// Seeded Glorot-uniform initialization. `hidden_dim` is ignored for
    /// the linear architecture.
    pub fn new(
        arch: Arch,
        input_dim: usize,
        hidden_dim: usize,
        classes: usize,
        activation: Activation,
        seed: Seed,
    ) -> Result<Self> {
        let mut model = Self::zeros(arch, input_dim, hidden_dim, classes, activation)?;
        let mut rng = seed.rng();
        let shapes: Vec<(usize, usize)> = model.layers.iter().map(|l| l.weights.dim()).collect();
        for (layer, (i, o)) in model.layers.iter_mut().zip(shapes) {
            *layer = Dense::glorot(i, o, &mut rng);
        }
        Ok(model)
    }

    pub fn zeros(
        arch: Arch,
        input_dim: usize,
        hidden_dim: usize,
        classes: usize,
        activation: Activation,
    ) -> Result<Self> {
        if input_dim == 0 || classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "model needs input_dim >= 1 and classes >= 2, got {input_dim} and {classes}"
            )));
        }
        let (hidden_dim, layers) = match arch {
            Arch::Linear => (0, vec![Dense::zeros(input_dim, classes)]),
            Arch::Mlp1 => {
                if hidden_dim == 0 {
                    return Err(Error::InvalidArgument("hidden_dim must be positive".into()));
                }
                (
                    hidden_dim,
                    vec![Dense::zeros(input_dim, hidden_dim), Dense::zeros(hidden_dim, classes)],
                )
            }
        };
        Ok(Self {
            arch,
            activation,
            input_dim,
            hidden_dim,
            classes,
            layers,
        })
    }

    /// Replaces all layers, checking shapes against the architecture.
    pub fn with_layers(mut self, layers: Vec<Dense>) -> Result<Self> {
        if layers.len() != self.layers.len() {
            return Err(mismatch(format!("expected {} layers, got {}", self.layers.len(), layers.len())));
        }
        for (have, want) in layers.iter().zip(&self.layers) {
            if have.weights.dim() != want.weights.dim() || have.bias.len() != want.bias.len() {
                return Err(mismatch(format!(
                    "layer shape {:?} does not match {:?}",
                    have.weights.dim(),
                    want.weights.dim()
                )));
            }
        }
        self.layers = layers;
        Ok(self)
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Dense::is_finite)
    }

    fn hidden(&self, x: ArrayView2<'_, f64>) -> Option<(Array2<f64>, Array2<f64>)> {
        match self.arch {
            Arch::Linear => None,
            Arch::Mlp1 => {
                let pre = self.layers[0].apply(x);
                let act = pre.mapv(|z| self.activation.apply(z));
                Some((pre, act))
            }
        }
    }

    fn logits_view(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        match self.hidden(x) {
            None => self.layers[0].apply(x),
            Some((_, act)) => self.layers[1].apply(act.view()),
        }
    }

    fn check_input(&self, x: ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.input_dim {
            return Err(mismatch(format!(
                "model expects {} features, got {}",
                self.input_dim,
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Logits for raw feature rows.
    pub fn logits(&self, x: &FeatureMatrix) -> Result<Array2<f64>> {
        self.check_input(x.view())?;
        Ok(self.logits_view(x.view()))
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|z| (z - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|e| e / sum);
    }
    out
}

/// Logits and softmax probabilities.
pub fn forward(model: &SoftModel, x: &FeatureMatrix) -> Result<(Array2<f64>, ProbMatrix)> {
    let logits = model.logits(x)?;
    let probs = ProbMatrix::validate(softmax_rows(logits.view()), 1e-9)?;
    Ok((logits, probs))
}

fn cross_entropy(probs: ArrayView2<'_, f64>, targets: ArrayView2<'_, f64>) -> f64 {
    let mut total = 0.0;
    for (p, t) in probs.rows().into_iter().zip(targets.rows()) {
        for (&pk, &tk) in p.iter().zip(t) {
            if tk != 0.0 {
                total -= tk * pk.max(LOG_FLOOR).ln();
            }
        }
    }
    total / probs.nrows() as f64
}

/// Mean over samples of `−Σ_k π(k)·log p(k)`.
pub fn soft_cross_entropy(probs: &ProbMatrix, targets: ArrayView2<'_, f64>) -> Result<f64> {
    if probs.view().dim() != targets.dim() {
        return Err(mismatch(format!(
            "probabilities {:?} vs targets {:?}",
            probs.view().dim(),
            targets.dim()
        )));
    }
    Ok(cross_entropy(probs.view(), targets))
}

/// Parameter gradients, one entry per layer of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

/// Loss and exact gradients of [`soft_cross_entropy`] for raw views.
fn loss_and_gradients(
    model: &SoftModel,
    x: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
) -> (f64, Gradients) {
    let n = x.nrows() as f64;
    let hidden = model.hidden(x);
    let logits = match &hidden {
        None => model.layers[0].apply(x),
        Some((_, act)) => model.layers[1].apply(act.view()),
    };
    let probs = softmax_rows(logits.view());
    let loss = cross_entropy(probs.view(), targets);
    // d loss / d logits = (p − π) / n
    let signal = (&probs - &targets) / n;
    let layers = match hidden {
        None => vec![Dense {
            weights: x.t().dot(&signal),
            bias: signal.sum_axis(Axis(0)),
        }],
        Some((pre, act)) => {
            let out = Dense {
                weights: act.t().dot(&signal),
                bias: signal.sum_axis(Axis(0)),
            };
            let mut back = signal.dot(&model.layers[1].weights.t());
            back.zip_mut_with(&pre, |g, &z| *g *= model.activation.derivative(z));
            let inner = Dense {
                weights: x.t().dot(&back),
                bias: back.sum_axis(Axis(0)),
            };
            vec![inner, out]
        }
    };
    (loss, Gradients { layers })
}

/// Exact gradients of the mean soft-target cross-entropy. The clipping
/// floor is ignored, which only matters for probabilities below `1e-12`.
pub fn gradients(model: &SoftModel, x: &FeatureMatrix, targets: ArrayView2<'_, f64>) -> Result<Gradients> {
    model.check_input(x.view())?;
    if targets.dim() != (x.n(), model.classes) {
        return Err(mismatch(format!(
            "targets {:?} for {} samples and {} classes",
            targets.dim(),
            x.n(),
            model.classes
        )));
    }
    Ok(loss_and_gradients(model, x.view(), targets).1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Drives the per-epoch shuffle.
    pub seed: Seed,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            learning_rate: 0.1,
            seed: Seed(0),
            shuffle: true,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SoftModel,
    /// Mean training loss of each epoch, measured on the mini-batches as
    /// they were visited.
    pub loss_trace: Vec<f64>,
}

/// Plain mini-batch gradient descent on the soft-target cross-entropy, with
/// targets looked up per sample from `table`.
pub fn train(
    model: SoftModel,
    x: &FeatureMatrix,
    labels: &LabelVector,
    table: &SmoothLabelMatrix,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    model.check_input(x.view())?;
    if x.n() != labels.len() {
        return Err(mismatch(format!("{} samples but {} labels", x.n(), labels.len())));
    }
    if x.n() == 0 {
        return Err(Error::InsufficientData("no training samples".into()));
    }
    if table.classes() != model.classes {
        return Err(mismatch(format!(
            "label matrix has {} classes, model {}",
            table.classes(),
            model.classes
        )));
    }
    let targets = expand_to_samples(table, labels)?;
    let mut model = model;
    let mut rng = config.seed.rng();
    let mut order: Vec<usize> = (0..x.n()).collect();
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        if config.shuffle {
            rng.shuffle(&mut order);
        }
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xb = x.view().select(Axis(0), batch);
            let tb = targets.select(Axis(0), batch);
            let (loss, grads) = loss_and_gradients(&model, xb.view(), tb.view());
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            epoch_loss += loss * batch.len() as f64;
            for (layer, g) in model.layers.iter_mut().zip(&grads.layers) {
                layer.weights.scaled_add(-config.learning_rate, &g.weights);
                layer.bias.scaled_add(-config.learning_rate, &g.bias);
            }
            if !model.is_finite() {
                return Err(Error::Divergence { epoch, loss: f64::NAN });
            }
        }
        trace.push(epoch_loss / x.n() as f64);
    }
    Ok(TrainOutcome {
        model,
        loss_trace: trace,
    })
}
