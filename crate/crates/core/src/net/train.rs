use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{adam_step, backward, AdamState, DropoutMask, ModelBundle, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelBundle,
    /// Mean training loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch Adam on mean cross-entropy for `cfg.epochs` epochs.
///
/// Batches are reshuffled every epoch from a stream seeded by `cfg.seed`; the
/// final partial batch is kept. Dropout at `dropout_rate` is applied to every
/// hidden backbone activation during training only, and the rate is stored on
/// the returned model.
pub fn train_supervised(
    mut model: ModelBundle,
    x: ArrayView2<f64>,
    y: &[usize],
    cfg: &TrainConfig,
    dropout_rate: f64,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if x.nrows() == 0 {
        return Err(Error::EmptyTraining);
    }
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    if !(0.0..1.0).contains(&dropout_rate) {
        return Err(Error::InvalidArgument(format!("dropout rate {dropout_rate} outside [0, 1)")));
    }
    model.dropout_rate = dropout_rate;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = AdamState::new(model.backbone.iter().chain(std::iter::once(&model.class_head)));
    let widths = model.hidden_widths();
    let n = x.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0u64;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = x.select(Axis(0), batch);
            let yb: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let mask = (dropout_rate > 0.0).then(|| DropoutMask::sample(batch.len(), &widths, dropout_rate, &mut rng));
            let (loss, grads) = backward(&model, xb.view(), &yb, mask.as_ref())?;
            total += loss * batch.len() as f64;
            step += 1;
            let mut flat = grads.backbone;
            flat.push(grads.class_head);
            adam_step(&mut model.classifier_params_mut(), &flat, &mut state, step, cfg);
        }
        epoch_losses.push(total / n as f64);
    }
    Ok(TrainOutcome { model, epoch_losses })
}
