use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Gumbel};

use super::{top_k, SelectionResult};
use crate::{Error, Result};

/// Scores below this are clamped before taking logs in the power variant.
pub const POWER_SCORE_FLOOR: f64 = 1e-12;

fn entropy(row: ArrayView1<f64>) -> f64 {
    -row.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

/// Top-1 minus top-2 probability per row (smaller is more uncertain).
pub fn score_margin(probs: ArrayView2<f64>) -> Result<Vec<f64>> {
    if probs.ncols() < 2 {
        return Err(Error::InvalidArgument(format!("margin needs at least 2 classes, got {}", probs.ncols())));
    }
    Ok(probs
        .rows()
        .into_iter()
        .map(|row| {
            let (mut a, mut b) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for &p in row {
                if p > a {
                    b = a;
                    a = p;
                } else if p > b {
                    b = p;
                }
            }
            a - b
        })
        .collect())
}

/// Natural-log entropy per row.
pub fn score_entropy(probs: ArrayView2<f64>) -> Vec<f64> {
    probs.rows().into_iter().map(entropy).collect()
}

/// `1 - max_c p(c|x)` per row.
pub fn score_lc(probs: ArrayView2<f64>) -> Vec<f64> {
    probs
        .rows()
        .into_iter()
        .map(|row| 1.0 - row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

fn mc_mean(mc: &[Array2<f64>]) -> Result<Array2<f64>> {
    let first = mc
        .first()
        .ok_or_else(|| Error::InvalidArgument("no Monte-Carlo predictions".into()))?;
    let mut mean = Array2::<f64>::zeros(first.raw_dim());
    for m in mc {
        if m.raw_dim() != first.raw_dim() {
            return Err(Error::Shape("Monte-Carlo predictions differ in shape".into()));
        }
        mean += m;
    }
    mean /= mc.len() as f64;
    Ok(mean)
}

/// Entropy of the mean Monte-Carlo predictive distribution.
pub fn score_maxent(mc: &[Array2<f64>]) -> Result<Vec<f64>> {
    Ok(score_entropy(mc_mean(mc)?.view()))
}

/// Mutual information between label and weights: entropy of the mean minus
/// the mean member entropy, clamped to `[0, H]` against rounding.
pub fn score_bald(mc: &[Array2<f64>]) -> Result<Vec<f64>> {
    let h = score_maxent(mc)?;
    let mut expected = vec![0.0; h.len()];
    for m in mc {
        for (e, row) in expected.iter_mut().zip(m.rows()) {
            *e += entropy(row);
        }
    }
    let k = mc.len() as f64;
    Ok(h.iter().zip(expected).map(|(&h, e)| (h - e / k).clamp(0.0, h)).collect())
}

/// `ln(max(s, floor)) + noise` for each score.
pub fn power_keys(scores: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
    if let Some(s) = scores.iter().find(|s| s.is_nan() || **s < 0.0) {
        return Err(Error::InvalidArgument(format!("power sampling needs non-negative scores, got {s}")));
    }
    Ok(scores
        .iter()
        .zip(noise)
        .map(|(&s, &e)| s.max(POWER_SCORE_FLOOR).ln() + e)
        .collect())
}

/// Top-`batch` of `ln s + noise` with caller-supplied noise.
pub fn select_power_with_noise(scores: &[f64], noise: &[f64], pool_idx: &[usize], batch: usize) -> Result<SelectionResult> {
    if scores.len() != pool_idx.len() || noise.len() != scores.len() {
        return Err(Error::Shape("scores, noise and pool differ in length".into()));
    }
    let keys = power_keys(scores, noise)?;
    Ok(SelectionResult {
        chosen: top_k(&keys, pool_idx, batch).into_iter().map(|p| pool_idx[p]).collect(),
        scores: Some(scores.to_vec()),
    })
}

/// Power sampling: top-`batch` of `ln s_i + ε_i` with `ε_i ~ Gumbel(0, 1/β)`,
/// i.e. sampling without replacement proportional to `s_i^β`.
pub fn select_power<R: Rng + ?Sized>(
    scores: &[f64],
    pool_idx: &[usize],
    batch: usize,
    beta: f64,
    rng: &mut R,
) -> Result<SelectionResult> {
    let gumbel = Gumbel::new(0.0, 1.0 / beta)
        .map_err(|e| Error::InvalidArgument(format!("power beta {beta}: {e}")))?;
    let noise: Vec<f64> = (0..scores.len()).map(|_| gumbel.sample(rng)).collect();
    select_power_with_noise(scores, &noise, pool_idx, batch)
}
