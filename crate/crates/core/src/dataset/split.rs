use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{Error, Result};

pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSplit {
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub trial_seed: u64,
}

/// Uniform 80/20 train/test partition driven only by `trial_seed`.
/// Both index lists are returned sorted.
pub fn make_split(dataset: &Dataset, trial_seed: u64) -> Result<TrialSplit> {
    split_rows(dataset.n_rows(), trial_seed)
}

pub(crate) fn split_rows(n: usize, trial_seed: u64) -> Result<TrialSplit> {
    if n < 5 {
        return Err(Error::InvalidDataset(format!("need at least 5 rows to split, found {n}")));
    }
    let n_train = (TRAIN_FRACTION * n as f64).round() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(trial_seed));
    let mut train_idx = idx[..n_train].to_vec();
    let mut test_idx = idx[n_train..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok(TrialSplit {
        train_idx,
        test_idx,
        trial_seed,
    })
}
