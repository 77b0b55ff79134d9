use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;

use super::uncertainty::score_margin;
use super::{bottom_k, top_k, AcquisitionContext, SelectionResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MemberInit {
    /// Same starting point as the main model (the pre-trained backbone when
    /// pre-training is on).
    Current,
    /// Fresh random initialisation, never pre-trained.
    Fresh,
}

/// Trains auxiliary models for committee-based strategies.
pub trait Trainer: Sync {
    /// Trains member `member` on the labeled multiset `(rows, labels)` and
    /// returns its class probabilities over the current pool.
    fn train_member(&self, rows: &[usize], labels: &[usize], member: usize, init: MemberInit) -> Result<Array2<f64>>;
}

/// Per-class bootstrap of the labeled set: each class present is resampled
/// with replacement to its own size. Absent classes contribute nothing.
pub fn bootstrap_per_class<R: Rng + ?Sized>(
    labeled_idx: &[usize],
    labeled_y: &[usize],
    n_classes: usize,
    rng: &mut R,
) -> (Vec<usize>, Vec<usize>) {
    let mut rows = Vec::with_capacity(labeled_idx.len());
    let mut labels = Vec::with_capacity(labeled_idx.len());
    for c in 0..n_classes {
        let members: Vec<usize> = labeled_idx
            .iter()
            .zip(labeled_y)
            .filter(|(_, &y)| y == c)
            .map(|(&i, _)| i)
            .collect();
        for _ in 0..members.len() {
            rows.push(members[rng.random_range(0..members.len())]);
            labels.push(c);
        }
    }
    (rows, labels)
}

/// Element-wise minimum of the members' margins.
pub fn score_min_margin(committee: &[Array2<f64>]) -> Result<Vec<f64>> {
    let mut out: Option<Vec<f64>> = None;
    for p in committee {
        let m = score_margin(p.view())?;
        out = Some(match out {
            None => m,
            Some(acc) => {
                if acc.len() != m.len() {
                    return Err(Error::Shape("committee members disagree on pool size".into()));
                }
                acc.into_iter().zip(m).map(|(a, b)| a.min(b)).collect()
            }
        });
    }
    out.ok_or_else(|| Error::InvalidArgument("empty committee".into()))
}

/// Variance ratio `1 - f_m / K` where `f_m` counts votes for the modal class.
pub fn score_qbc(committee: &[Array2<f64>]) -> Result<Vec<f64>> {
    let first = committee
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty committee".into()))?;
    let (n, c) = first.dim();
    let mut votes = vec![vec![0usize; c]; n];
    for p in committee {
        if p.dim() != (n, c) {
            return Err(Error::Shape("committee members disagree on shape".into()));
        }
        for (v, row) in votes.iter_mut().zip(p.rows()) {
            let arg = row
                .iter()
                .enumerate()
                .fold(0, |best, (j, &x)| if x > row[best] { j } else { best });
            v[arg] += 1;
        }
    }
    let k = committee.len() as f64;
    Ok(votes.iter().map(|v| 1.0 - *v.iter().max().unwrap() as f64 / k).collect())
}

fn trainer<'a>(ctx: &AcquisitionContext<'a>) -> Result<&'a dyn Trainer> {
    ctx.trainer.ok_or_else(|| ctx.missing("trainer"))
}

/// Min-Margin: `K` models on per-class bootstraps, score = minimum margin.
pub fn select_min_margin<R: Rng + ?Sized>(ctx: &AcquisitionContext, rng: &mut R) -> Result<SelectionResult> {
    let t = trainer(ctx)?;
    // bootstraps are drawn sequentially so the rng stream does not depend on
    // how members are scheduled
    let samples: Vec<_> = (0..ctx.config.committee_size)
        .map(|_| bootstrap_per_class(ctx.labeled_idx, ctx.labeled_y, ctx.n_classes, rng))
        .collect();
    let committee = samples
        .par_iter()
        .enumerate()
        .map(|(k, (rows, labels))| t.train_member(rows, labels, k, MemberInit::Current))
        .collect::<Result<Vec<_>>>()?;
    let scores = score_min_margin(&committee)?;
    Ok(SelectionResult {
        chosen: bottom_k(&scores, ctx.pool_idx, ctx.batch_size)
            .into_iter()
            .map(|p| ctx.pool_idx[p])
            .collect(),
        scores: Some(scores),
    })
}

/// QBC with `K` freshly initialised members trained on the labeled set.
pub fn select_qbc(ctx: &AcquisitionContext) -> Result<SelectionResult> {
    let t = trainer(ctx)?;
    let committee = (0..ctx.config.committee_size)
        .into_par_iter()
        .map(|k| t.train_member(ctx.labeled_idx, ctx.labeled_y, k, MemberInit::Fresh))
        .collect::<Result<Vec<_>>>()?;
    let scores = score_qbc(&committee)?;
    Ok(SelectionResult {
        chosen: top_k(&scores, ctx.pool_idx, ctx.batch_size)
            .into_iter()
            .map(|p| ctx.pool_idx[p])
            .collect(),
        scores: Some(scores),
    })
}
