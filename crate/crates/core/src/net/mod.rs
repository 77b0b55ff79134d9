//! Dense ReLU network: a backbone of hidden layers, an affine classification
//! head, and an optional projection head used only during contrastive
//! pre-training.
//!
//! Dropout uses the inverted convention: masks hold `0` or `1 / (1 - p)` so
//! the mask-free forward pass is the inference path. A mask with a single row
//! broadcasts over the batch, which is how Monte-Carlo dropout samples one
//! thinned network per mask.

mod adam;
mod checkpoint;
mod loss;
pub(crate) mod stack;
mod train;

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use loss::{softmax, softmax_xent};
pub use train::{train_supervised, TrainOutcome};

use crate::{Error, Result};
use stack::Activation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    /// `fan_in × fan_out`
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl LayerParams {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        LayerParams {
            w: Array2::zeros((fan_in, fan_out)),
            b: Array1::zeros(fan_out),
        }
    }

    /// He-style uniform initialisation, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, zero bias.
    pub fn he_uniform<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let limit = (6.0 / fan_in.max(1) as f64).sqrt();
        let w = Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-limit..limit));
        LayerParams {
            w,
            b: Array1::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.w.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.w.ncols()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.fan_in(), self.fan_out())
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(self.b.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub backbone_layers: usize,
    pub hidden_units: usize,
    pub pretrain_head_layers: usize,
    pub dropout_rate: f64,
    pub n_classes: usize,
}

impl NetConfig {
    /// Five hidden layers of 256 units, two-layer projection head.
    pub fn full_size(n_classes: usize) -> Self {
        NetConfig {
            backbone_layers: 5,
            hidden_units: 256,
            pretrain_head_layers: 2,
            dropout_rate: 0.0,
            n_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.backbone_layers == 0 || self.hidden_units == 0 || self.pretrain_head_layers == 0 {
            return Err(Error::InvalidArgument("layer counts and widths must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if self.n_classes < 2 {
            return Err(Error::InvalidArgument("need at least 2 classes".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 128,
            epochs: 30,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be ≥ 1".into()));
        }
        if self.batch_size == 0 || self.learning_rate <= 0.0 || self.epsilon <= 0.0 {
            return Err(Error::InvalidArgument(
                "batch size, learning rate and epsilon must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidArgument("Adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Backbone, classification head and optional pre-training head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub backbone: Vec<LayerParams>,
    pub class_head: LayerParams,
    pub pretrain_head: Option<Vec<LayerParams>>,
    /// Dropout rate the model was (or will be) trained with.
    pub dropout_rate: f64,
}

/// Per-hidden-layer dropout masks, already scaled by `1 / (1 - p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    pub layers: Vec<Array2<f64>>,
}

impl DropoutMask {
    /// Bernoulli keep-masks with `rows` rows for each width in `widths`.
    pub fn sample<R: Rng + ?Sized>(rows: usize, widths: &[usize], rate: f64, rng: &mut R) -> Self {
        let scale = 1.0 / (1.0 - rate);
        let layers = widths
            .iter()
            .map(|&w| {
                Array2::from_shape_simple_fn((rows, w), || {
                    if rng.random::<f64>() < rate {
                        0.0
                    } else {
                        scale
                    }
                })
            })
            .collect();
        DropoutMask { layers }
    }

    /// Every unit kept, scaled by `1 / (1 - rate)`.
    pub fn all_keep(widths: &[usize], rate: f64) -> Self {
        let scale = 1.0 / (1.0 - rate);
        DropoutMask {
            layers: widths.iter().map(|&w| Array2::from_elem((1, w), scale)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub logits: Array2<f64>,
    pub penultimate: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub backbone: Vec<LayerParams>,
    pub class_head: LayerParams,
}

impl ModelBundle {
    pub fn init<R: Rng + ?Sized>(input_dim: usize, cfg: &NetConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        if input_dim == 0 {
            return Err(Error::Shape("input dimension must be ≥ 1".into()));
        }
        let mut backbone = Vec::with_capacity(cfg.backbone_layers);
        let mut fan_in = input_dim;
        for _ in 0..cfg.backbone_layers {
            backbone.push(LayerParams::he_uniform(fan_in, cfg.hidden_units, rng));
            fan_in = cfg.hidden_units;
        }
        let class_head = LayerParams::he_uniform(fan_in, cfg.n_classes, rng);
        Ok(ModelBundle {
            backbone,
            class_head,
            pretrain_head: None,
            dropout_rate: cfg.dropout_rate,
        })
    }

    /// Attaches a fresh projection head of `cfg.pretrain_head_layers` layers.
    pub fn attach_pretrain_head<R: Rng + ?Sized>(&mut self, cfg: &NetConfig, rng: &mut R) {
        let mut fan_in = self.embedding_dim();
        let mut head = Vec::with_capacity(cfg.pretrain_head_layers);
        for _ in 0..cfg.pretrain_head_layers {
            head.push(LayerParams::he_uniform(fan_in, cfg.hidden_units, rng));
            fan_in = cfg.hidden_units;
        }
        self.pretrain_head = Some(head);
    }

    /// Replaces the classification head with a fresh initialisation.
    pub fn reset_class_head<R: Rng + ?Sized>(&mut self, n_classes: usize, rng: &mut R) {
        self.class_head = LayerParams::he_uniform(self.embedding_dim(), n_classes, rng);
    }

    pub fn input_dim(&self) -> usize {
        self.backbone[0].fan_in()
    }

    pub fn embedding_dim(&self) -> usize {
        self.backbone.last().map(|l| l.fan_out()).unwrap_or(0)
    }

    pub fn n_classes(&self) -> usize {
        self.class_head.fan_out()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.backbone.iter().map(LayerParams::fan_out).collect()
    }

    pub(crate) fn classifier_layers(&self) -> (Vec<&LayerParams>, Vec<Activation>) {
        let layers: Vec<&LayerParams> = self.backbone.iter().chain(std::iter::once(&self.class_head)).collect();
        let mut acts = vec![Activation::Relu; self.backbone.len()];
        acts.push(Activation::Identity);
        (layers, acts)
    }

    /// Backbone followed by the projection head (ReLU between, linear output).
    pub(crate) fn pretrain_layers(&self) -> Option<(Vec<&LayerParams>, Vec<Activation>)> {
        let head = self.pretrain_head.as_ref()?;
        let layers: Vec<&LayerParams> = self.backbone.iter().chain(head.iter()).collect();
        let mut acts = vec![Activation::Relu; self.backbone.len() + head.len()];
        *acts.last_mut().unwrap() = Activation::Identity;
        Some((layers, acts))
    }

    pub(crate) fn classifier_params_mut(&mut self) -> Vec<&mut LayerParams> {
        self.backbone.iter_mut().chain(std::iter::once(&mut self.class_head)).collect()
    }

    pub(crate) fn pretrain_params_mut(&mut self) -> Vec<&mut LayerParams> {
        let head = self.pretrain_head.as_mut().expect("pretrain head attached");
        self.backbone.iter_mut().chain(head.iter_mut()).collect()
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} columns, model expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn check_mask(&self, rows: usize, mask: &DropoutMask) -> Result<()> {
        let widths = self.hidden_widths();
        if mask.layers.len() != widths.len() {
            return Err(Error::Shape(format!(
                "mask has {} layers, backbone has {}",
                mask.layers.len(),
                widths.len()
            )));
        }
        for (m, &w) in mask.layers.iter().zip(&widths) {
            if m.ncols() != w || (m.nrows() != 1 && m.nrows() != rows) {
                return Err(Error::Shape(format!(
                    "mask {:?} does not fit {rows} rows × {w} units",
                    m.shape()
                )));
            }
        }
        Ok(())
    }

    fn mask_refs<'a>(&self, mask: Option<&'a DropoutMask>) -> Vec<Option<&'a Array2<f64>>> {
        let mut refs: Vec<Option<&Array2<f64>>> = match mask {
            Some(m) => m.layers.iter().map(Some).collect(),
            None => vec![None; self.backbone.len()],
        };
        refs.push(None);
        refs
    }
}

/// Logits and penultimate (last backbone) activations.
pub fn forward(model: &ModelBundle, x: ArrayView2<f64>, mask: Option<&DropoutMask>) -> Result<ForwardOutput> {
    model.check_input(&x)?;
    if let Some(m) = mask {
        model.check_mask(x.nrows(), m)?;
    }
    let (layers, acts) = model.classifier_layers();
    let refs = model.mask_refs(mask);
    let nb = model.backbone.len();
    let penultimate = stack::infer(&layers[..nb], &acts[..nb], x, &refs[..nb]);
    let logits = stack::infer(&layers[nb..], &acts[nb..], penultimate.view(), &[]);
    Ok(ForwardOutput { logits, penultimate })
}

/// Mean cross-entropy loss and gradients of every parameter.
pub fn backward(
    model: &ModelBundle,
    x: ArrayView2<f64>,
    y: &[usize],
    mask: Option<&DropoutMask>,
) -> Result<(f64, Gradients)> {
    model.check_input(&x)?;
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    if let Some(m) = mask {
        model.check_mask(x.nrows(), m)?;
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= model.n_classes()) {
        return Err(Error::Shape(format!("label {bad} ≥ {} classes", model.n_classes())));
    }
    let (layers, acts) = model.classifier_layers();
    let refs = model.mask_refs(mask);
    let trace = stack::forward(&layers, &acts, x, &refs);
    let (loss, dlogits) = softmax_xent(&trace.output, y);
    let (mut grads, _) = stack::backward(&layers, &acts, &trace, dlogits);
    let class_head = grads.pop().unwrap();
    Ok((
        loss,
        Gradients {
            backbone: grads,
            class_head,
        },
    ))
}

/// Softmax class probabilities of the deterministic (mask-free) network.
pub fn predict_proba(model: &ModelBundle, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    Ok(softmax(&forward(model, x, None)?.logits))
}

/// One probability matrix per dropout mask.
pub fn predict_proba_mc(model: &ModelBundle, x: ArrayView2<f64>, masks: &[DropoutMask]) -> Result<Vec<Array2<f64>>> {
    if model.dropout_rate == 0.0 {
        return Err(Error::InvalidArgument(
            "Monte-Carlo masks requested on a model trained without dropout".into(),
        ));
    }
    masks
        .iter()
        .map(|m| Ok(softmax(&forward(model, x, Some(m))?.logits)))
        .collect()
}

/// Samples `m` per-unit masks (one thinned network each) at the model's dropout rate.
pub fn sample_mc_masks<R: Rng + ?Sized>(model: &ModelBundle, m: usize, rng: &mut R) -> Result<Vec<DropoutMask>> {
    if model.dropout_rate == 0.0 {
        return Err(Error::InvalidArgument(
            "Monte-Carlo masks requested on a model trained without dropout".into(),
        ));
    }
    let widths = model.hidden_widths();
    Ok((0..m)
        .map(|_| DropoutMask::sample(1, &widths, model.dropout_rate, rng))
        .collect())
}

/// Penultimate activations of the deterministic network.
pub fn embed(model: &ModelBundle, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    Ok(forward(model, x, None)?.penultimate)
}
