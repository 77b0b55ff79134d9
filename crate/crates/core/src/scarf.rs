//! Contrastive pre-training of the backbone by random feature corruption.
//!
//! Each example is paired with a corrupted view in which a fixed fraction of
//! its raw features is replaced by values drawn from that feature's empirical
//! marginal over the pre-training pool. Features are handled at the raw level,
//! so a categorical feature is swapped as a whole one-hot block. The backbone
//! plus a projection head is trained with an InfoNCE objective over cosine
//! similarities; the head is discarded afterwards.

use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::net::stack;
use crate::net::{adam_step, AdamState, ModelBundle, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionConfig {
    pub fraction: f64,
    pub temperature: f64,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        CorruptionConfig {
            fraction: 0.6,
            temperature: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    /// Number of pre-generated corrupted copies of the validation slice.
    pub val_epochs_frozen: usize,
    /// Shares of the full dataset; the pool is the train split, so the pool is
    /// divided in the ratio `train_fraction : val_fraction`.
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub corruption: CorruptionConfig,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            max_epochs: 1000,
            patience: 3,
            val_epochs_frozen: 20,
            train_fraction: 0.7,
            val_fraction: 0.1,
            batch_size: 128,
            learning_rate: 0.001,
            corruption: CorruptionConfig::default(),
        }
    }
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<()> {
        let c = &self.corruption;
        if !(0.0..=1.0).contains(&c.fraction) || c.temperature <= 0.0 {
            return Err(Error::InvalidArgument("corruption fraction must be in [0,1] and τ > 0".into()));
        }
        if self.patience == 0 || self.max_epochs == 0 || self.val_epochs_frozen == 0 || self.batch_size < 2 {
            return Err(Error::InvalidArgument(
                "patience, epochs and bank size must be ≥ 1, batch size ≥ 2".into(),
            ));
        }
        if self.train_fraction <= 0.0 || self.val_fraction <= 0.0 {
            return Err(Error::InvalidArgument("slice fractions must be positive".into()));
        }
        Ok(())
    }
}

/// Empirical per-feature marginals of the pre-training pool.
#[derive(Debug, Clone)]
pub struct MarginalSampler {
    pool: Array2<f64>,
    groups: Vec<Range<usize>>,
}

impl MarginalSampler {
    /// `groups[k]` is the encoded column range of raw feature `k`.
    pub fn new(pool: Array2<f64>, groups: Vec<Range<usize>>) -> Result<Self> {
        if pool.nrows() == 0 {
            return Err(Error::InvalidArgument("marginal sampler needs a nonempty pool".into()));
        }
        let mut next = 0;
        for g in &groups {
            if g.start != next || g.end <= g.start {
                return Err(Error::Shape("feature groups must tile the columns".into()));
            }
            next = g.end;
        }
        if next != pool.ncols() {
            return Err(Error::Shape(format!(
                "feature groups cover {next} columns, pool has {}",
                pool.ncols()
            )));
        }
        Ok(MarginalSampler { pool, groups })
    }

    pub fn n_raw_features(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    /// Values the raw feature `k` takes in row `row` of the pool.
    pub fn value(&self, row: usize, k: usize) -> ArrayView1<'_, f64> {
        self.pool.slice(s![row, self.groups[k].clone()])
    }
}

/// Number of raw features replaced at the given fraction, `⌈fraction · d⌉`.
pub fn corrupted_count(d_raw: usize, fraction: f64) -> usize {
    let raw = fraction * d_raw as f64;
    // 0.6 · 10 must give 6, not 7
    let count = (raw - 1e-9).ceil().max(0.0) as usize;
    count.min(d_raw)
}

/// Returns the corrupted view and the raw feature indices that were resampled.
pub fn corrupt_with_indices<R: Rng + ?Sized>(
    x: ArrayView1<f64>,
    sampler: &MarginalSampler,
    fraction: f64,
    rng: &mut R,
) -> (Array1<f64>, Vec<usize>) {
    let d = sampler.n_raw_features();
    let k = corrupted_count(d, fraction);
    let chosen = rand::seq::index::sample(rng, d, k).into_vec();
    let mut out = x.to_owned();
    for &f in &chosen {
        let donor = rng.random_range(0..sampler.pool.nrows());
        out.slice_mut(s![sampler.groups[f].clone()]).assign(&sampler.value(donor, f));
    }
    (out, chosen)
}

/// Replaces `⌈fraction · d_raw⌉` uniformly chosen raw features of `x` with
/// draws from their empirical marginals.
pub fn corrupt<R: Rng + ?Sized>(x: ArrayView1<f64>, sampler: &MarginalSampler, fraction: f64, rng: &mut R) -> Array1<f64> {
    corrupt_with_indices(x, sampler, fraction, rng).0
}

pub fn corrupt_batch<R: Rng + ?Sized>(x: ArrayView2<f64>, sampler: &MarginalSampler, fraction: f64, rng: &mut R) -> Array2<f64> {
    let mut out = x.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let c = corrupt(row.view(), sampler, fraction, rng);
        row.assign(&c);
    }
    out
}

fn normalize_rows(z: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>)> {
    let norms: Array1<f64> = z.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    if let Some(i) = norms.iter().position(|&n| n == 0.0 || !n.is_finite()) {
        return Err(Error::ZeroNorm(i));
    }
    let u = z / &norms.view().insert_axis(Axis(1));
    Ok((u, norms))
}

/// InfoNCE over cosine similarities: row `i` of `z1` must pick row `i` of
/// `z2` among all rows of `z2`. Mean over rows.
pub fn info_nce_loss(z1: &Array2<f64>, z2: &Array2<f64>, temperature: f64) -> Result<f64> {
    info_nce_with_grad(z1, z2, temperature).map(|(l, _, _)| l)
}

/// Loss together with its gradients with respect to `z1` and `z2`.
pub fn info_nce_with_grad(
    z1: &Array2<f64>,
    z2: &Array2<f64>,
    temperature: f64,
) -> Result<(f64, Array2<f64>, Array2<f64>)> {
    if z1.shape() != z2.shape() {
        return Err(Error::Shape(format!("views differ: {:?} vs {:?}", z1.shape(), z2.shape())));
    }
    let n = z1.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument("InfoNCE needs a batch of at least 2".into()));
    }
    if temperature <= 0.0 {
        return Err(Error::InvalidArgument("temperature must be positive".into()));
    }
    let (u, nu) = normalize_rows(z1)?;
    let (v, nv) = normalize_rows(z2)?;
    let sim = u.dot(&v.t()) / temperature;

    let mut g = sim.clone();
    let mut loss = 0.0;
    for (i, mut row) in g.axis_iter_mut(Axis(0)).enumerate() {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        loss += max + sum.ln() - sim[[i, i]];
        row.mapv_inplace(|x| x / sum);
        row[i] -= 1.0;
    }
    let nf = n as f64;
    g /= nf;

    let du = g.dot(&v) / temperature;
    let dv = g.t().dot(&u) / temperature;
    let project = |d: Array2<f64>, unit: &Array2<f64>, norms: &Array1<f64>| {
        let mut out = d;
        for ((mut row, urow), &norm) in out.axis_iter_mut(Axis(0)).zip(unit.rows()).zip(norms) {
            let along = row.dot(&urow);
            row.scaled_add(-along, &urow);
            row /= norm;
        }
        out
    };
    Ok((loss / nf, project(du, &u, &nu), project(dv, &v, &nv)))
}

/// Patience-based early stopping on a loss to be minimised.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: Option<usize>,
    bad_epochs: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: None,
            bad_epochs: 0,
        }
    }

    /// Records the loss of `epoch`; returns `true` once the loss has failed
    /// to improve for `patience` consecutive epochs.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = Some(epoch);
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
        }
        self.bad_epochs >= self.patience
    }

    pub fn improved_at(&self, epoch: usize) -> bool {
        self.best_epoch == Some(epoch)
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }
}

#[derive(Debug, Clone)]
pub struct PretrainOutcome {
    /// Backbone with the projection head removed, restored to the best epoch.
    pub model: ModelBundle,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub train_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
}

/// Batch boundaries that never leave a trailing batch of one row.
fn batch_ranges(n: usize, size: usize) -> Vec<Range<usize>> {
    let mut out: Vec<Range<usize>> = (0..n).step_by(size).map(|s| s..(s + size).min(n)).collect();
    if out.len() > 1 && out.last().map(|r| r.len()) == Some(1) {
        let last = out.pop().unwrap();
        out.last_mut().unwrap().end = last.end;
    }
    out
}

/// Contrastive pre-training on unlabeled pool features.
///
/// `model` must carry a projection head. The pool is shuffled once and split
/// into a training slice and a validation slice; a bank of
/// `val_epochs_frozen` corrupted copies of the validation slice is generated
/// up front and reused every epoch. Training stops after `max_epochs` or when
/// validation loss has not improved for `patience` epochs, and the weights of
/// the best epoch are kept. No dropout is used.
pub fn pretrain(
    mut model: ModelBundle,
    pool: ArrayView2<f64>,
    groups: &[Range<usize>],
    cfg: &PretrainConfig,
    seed: u64,
) -> Result<PretrainOutcome> {
    cfg.validate()?;
    if model.pretrain_head.is_none() {
        return Err(Error::InvalidArgument("pre-training requires a projection head".into()));
    }
    let n = pool.nrows();
    if n < 10 {
        return Err(Error::InvalidArgument(format!(
            "pre-training pool of {n} rows is too small (need ≥ 10)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = MarginalSampler::new(pool.to_owned(), groups.to_vec())?;

    let val_share = cfg.val_fraction / (cfg.train_fraction + cfg.val_fraction);
    let n_val = ((n as f64 * val_share).round() as usize).clamp(2, n - 2);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let val_idx = &order[..n_val];
    let mut train_idx = order[n_val..].to_vec();
    let val_clean = pool.select(Axis(0), val_idx);
    let fraction = cfg.corruption.fraction;
    let bank: Vec<Array2<f64>> = (0..cfg.val_epochs_frozen)
        .map(|_| corrupt_batch(val_clean.view(), &sampler, fraction, &mut rng))
        .collect();

    let adam = TrainConfig {
        learning_rate: cfg.learning_rate,
        batch_size: cfg.batch_size,
        ..TrainConfig::default()
    };
    let mut state = AdamState::new(model.backbone.iter().chain(model.pretrain_head.as_ref().unwrap()));
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = model.clone();
    let mut step = 0u64;
    let (mut train_losses, mut val_losses) = (Vec::new(), Vec::new());
    let tau = cfg.corruption.temperature;

    for epoch in 0..cfg.max_epochs {
        train_idx.shuffle(&mut rng);
        let mut total = 0.0;
        for r in batch_ranges(train_idx.len(), cfg.batch_size) {
            let batch = &train_idx[r];
            let clean = pool.select(Axis(0), batch);
            let noisy = corrupt_batch(clean.view(), &sampler, fraction, &mut rng);
            let (layers, acts) = model.pretrain_layers().unwrap();
            let t1 = stack::forward(&layers, &acts, clean.view(), &[]);
            let t2 = stack::forward(&layers, &acts, noisy.view(), &[]);
            let (loss, d1, d2) = info_nce_with_grad(&t1.output, &t2.output, tau)?;
            let (g1, _) = stack::backward(&layers, &acts, &t1, d1);
            let (g2, _) = stack::backward(&layers, &acts, &t2, d2);
            let grads: Vec<_> = g1
                .into_iter()
                .zip(g2)
                .map(|(mut a, b)| {
                    a.w += &b.w;
                    a.b += &b.b;
                    a
                })
                .collect();
            step += 1;
            adam_step(&mut model.pretrain_params_mut(), &grads, &mut state, step, &adam);
            total += loss * batch.len() as f64;
        }
        train_losses.push(total / train_idx.len() as f64);

        let val = validation_loss(&model, &val_clean, &bank, cfg.batch_size, tau)?;
        val_losses.push(val);
        let stop = stopper.observe(epoch, val);
        if stopper.improved_at(epoch) {
            best = model.clone();
        }
        if stop {
            break;
        }
    }

    best.pretrain_head = None;
    Ok(PretrainOutcome {
        model: best,
        best_epoch: stopper.best_epoch().unwrap_or(0),
        epochs_run: val_losses.len(),
        train_losses,
        val_losses,
    })
}

fn project(model: &ModelBundle, x: ArrayView2<f64>) -> Array2<f64> {
    let (layers, acts) = model.pretrain_layers().expect("projection head attached");
    stack::infer(&layers, &acts, x, &[])
}

fn validation_loss(
    model: &ModelBundle,
    clean: &Array2<f64>,
    bank: &[Array2<f64>],
    batch_size: usize,
    tau: f64,
) -> Result<f64> {
    let z_clean = project(model, clean.view());
    let ranges = batch_ranges(clean.nrows(), batch_size);
    let mut total = 0.0;
    for copy in bank {
        let z_noisy = project(model, copy.view());
        for r in &ranges {
            let a = z_clean.slice(s![r.clone(), ..]).to_owned();
            let b = z_noisy.slice(s![r.clone(), ..]).to_owned();
            total += info_nce_loss(&a, &b, tau)? * r.len() as f64;
        }
    }
    Ok(total / (bank.len() * clean.nrows()) as f64)
}

/// Penultimate activations scaled to unit L2 norm. Zero rows stay zero.
pub fn embed_normalized(model: &ModelBundle, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    let mut e = crate::net::embed(model, x)?;
    for mut row in e.axis_iter_mut(Axis(0)) {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(e)
}
