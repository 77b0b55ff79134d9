//! Acquisition strategies: each maps an [`AcquisitionContext`] to a batch of
//! pool indices.
//!
//! Indices everywhere refer to rows of the trial's train split (`0..N_total`).
//! Row `i` of every pool-aligned matrix in the context belongs to
//! `pool_idx[i]`. Top-k ties are broken by ascending pool index.

mod committee;
mod diversity;
mod uncertainty;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterAssignment;
use crate::{Error, Result};

pub use committee::{bootstrap_per_class, score_min_margin, score_qbc, select_min_margin, select_qbc, MemberInit, Trainer};
pub use diversity::{
    margin_density_scores, select_cluster_margin, select_coreset, select_margin_density, select_random,
    select_random_margin, select_typiclust, typicality,
};
pub use uncertainty::{
    power_keys, score_bald, score_entropy, score_lc, score_margin, score_maxent, select_power, select_power_with_noise,
    POWER_SCORE_FLOOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StrategyId {
    Random,
    Margin,
    Entropy,
    LeastConfident,
    RandomMargin,
    MinMargin,
    TypiClust,
    MaxEnt,
    Bald,
    Coreset,
    MarginDensity,
    ClusterMargin125,
    ClusterMargin10,
    Qbc,
    PowerMargin,
    PowerBald,
}

impl StrategyId {
    pub const ALL: [StrategyId; 16] = [
        StrategyId::Random,
        StrategyId::Margin,
        StrategyId::Entropy,
        StrategyId::LeastConfident,
        StrategyId::RandomMargin,
        StrategyId::MinMargin,
        StrategyId::TypiClust,
        StrategyId::MaxEnt,
        StrategyId::Bald,
        StrategyId::Coreset,
        StrategyId::MarginDensity,
        StrategyId::ClusterMargin125,
        StrategyId::ClusterMargin10,
        StrategyId::Qbc,
        StrategyId::PowerMargin,
        StrategyId::PowerBald,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyId::Random => "random",
            StrategyId::Margin => "margin",
            StrategyId::Entropy => "entropy",
            StrategyId::LeastConfident => "least_confident",
            StrategyId::RandomMargin => "random_margin",
            StrategyId::MinMargin => "min_margin",
            StrategyId::TypiClust => "typiclust",
            StrategyId::MaxEnt => "maxent",
            StrategyId::Bald => "bald",
            StrategyId::Coreset => "coreset",
            StrategyId::MarginDensity => "margin_density",
            StrategyId::ClusterMargin125 => "cluster_margin_1.25",
            StrategyId::ClusterMargin10 => "cluster_margin_10",
            StrategyId::Qbc => "qbc",
            StrategyId::PowerMargin => "power_margin",
            StrategyId::PowerBald => "power_bald",
        }
    }

    /// What the loop has to compute before calling [`select`].
    pub fn needs(self) -> Needs {
        let mut n = Needs::default();
        match self {
            StrategyId::MaxEnt | StrategyId::Bald | StrategyId::PowerBald => n.mc_probs = true,
            StrategyId::Coreset => {
                n.penultimate_pool = true;
                n.penultimate_labeled = true;
            }
            StrategyId::MarginDensity => n.penultimate_pool = true,
            StrategyId::TypiClust => n.embeddings = true,
            StrategyId::ClusterMargin125 => n.cluster_margin = Some(1.25),
            StrategyId::ClusterMargin10 => n.cluster_margin = Some(10.0),
            StrategyId::MinMargin | StrategyId::Qbc => n.trainer = true,
            _ => {}
        }
        n
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownStrategy {
                given: s.to_string(),
                valid: StrategyId::ALL.map(StrategyId::as_str).join(", "),
            })
    }
}

impl TryFrom<String> for StrategyId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StrategyId> for String {
    fn from(id: StrategyId) -> String {
        id.as_str().to_string()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Needs {
    pub mc_probs: bool,
    pub penultimate_pool: bool,
    pub penultimate_labeled: bool,
    /// Embeddings of all `N_total` train rows.
    pub embeddings: bool,
    /// Average cluster size `m` of the cached agglomerative clustering.
    pub cluster_margin: Option<f64>,
    pub trainer: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginDensityOrder {
    /// Smallest `margin * density` first.
    #[default]
    SmallestProduct,
    /// Smallest `margin / density` first: low margin and high density both
    /// preferred.
    PreferDense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    /// Members in the Min-Margin bootstrap and the QBC committee.
    pub committee_size: usize,
    pub power_beta: f64,
    pub margin_density_order: MarginDensityOrder,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            committee_size: 25,
            power_beta: 1.0,
            margin_density_order: MarginDensityOrder::SmallestProduct,
        }
    }
}

/// Everything a strategy may look at when choosing a batch.
pub struct AcquisitionContext<'a> {
    /// `p(y|x)` of the current model, one row per pool point.
    pub probs: ArrayView2<'a, f64>,
    /// Monte-Carlo dropout predictions over the pool.
    pub mc_probs: Option<&'a [Array2<f64>]>,
    pub penultimate_pool: Option<ArrayView2<'a, f64>>,
    pub penultimate_labeled: Option<ArrayView2<'a, f64>>,
    /// Embeddings of all train rows, indexed by train row.
    pub embeddings: Option<ArrayView2<'a, f64>>,
    /// Agglomerative clustering of all train rows, computed once per trial.
    pub clusters: Option<&'a ClusterAssignment>,
    pub labeled_idx: &'a [usize],
    /// Acquired labels, aligned with `labeled_idx`.
    pub labeled_y: &'a [usize],
    pub pool_idx: &'a [usize],
    pub n_classes: usize,
    pub batch_size: usize,
    pub round: usize,
    pub trainer: Option<&'a dyn Trainer>,
    pub config: &'a StrategyConfig,
}

impl AcquisitionContext<'_> {
    pub fn validate(&self) -> Result<()> {
        let n = self.pool_idx.len();
        if self.probs.nrows() != n {
            return Err(Error::Shape(format!("{} probability rows for a pool of {n}", self.probs.nrows())));
        }
        for (i, row) in self.probs.rows().into_iter().enumerate() {
            let s = row.sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidArgument(format!("probability row {i} sums to {s}")));
            }
        }
        if self.labeled_idx.len() != self.labeled_y.len() {
            return Err(Error::Shape("labeled_idx and labeled_y differ in length".into()));
        }
        let labeled: std::collections::HashSet<_> = self.labeled_idx.iter().collect();
        if let Some(i) = self.pool_idx.iter().find(|i| labeled.contains(i)) {
            return Err(Error::InvalidArgument(format!("index {i} is both labeled and in the pool")));
        }
        if let Some(m) = self.penultimate_pool {
            if m.nrows() != n {
                return Err(Error::Shape(format!("penultimate_pool has {} rows for a pool of {n}", m.nrows())));
            }
        }
        if let Some(mc) = self.mc_probs {
            if mc.iter().any(|m| m.nrows() != n) {
                return Err(Error::Shape("mc_probs rows do not match the pool".into()));
            }
        }
        Ok(())
    }

    fn missing(&self, what: &str) -> Error {
        Error::InvalidArgument(format!("strategy input `{what}` was not provided"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Chosen pool indices (train-row ids), in selection order.
    pub chosen: Vec<usize>,
    /// Per-pool-point diagnostic scores, aligned with `pool_idx`.
    pub scores: Option<Vec<f64>>,
}

/// Positions of the `k` smallest scores; ties go to the smaller pool index.
pub(crate) fn bottom_k(scores: &[f64], pool_idx: &[usize], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(pool_idx[a].cmp(&pool_idx[b])));
    order.truncate(k);
    order
}

/// Positions of the `k` largest scores; ties go to the smaller pool index.
pub(crate) fn top_k(scores: &[f64], pool_idx: &[usize], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(pool_idx[a].cmp(&pool_idx[b])));
    order.truncate(k);
    order
}

fn by_score(ctx: &AcquisitionContext, scores: Vec<f64>, smallest: bool) -> SelectionResult {
    let pos = if smallest {
        bottom_k(&scores, ctx.pool_idx, ctx.batch_size)
    } else {
        top_k(&scores, ctx.pool_idx, ctx.batch_size)
    };
    SelectionResult {
        chosen: pos.into_iter().map(|p| ctx.pool_idx[p]).collect(),
        scores: Some(scores),
    }
}

/// Runs strategy `id`. When the pool holds at most `batch_size` points the
/// whole pool is returned without scoring.
pub fn select(id: StrategyId, ctx: &AcquisitionContext, rng: &mut ChaCha8Rng) -> Result<SelectionResult> {
    ctx.validate()?;
    if ctx.pool_idx.len() <= ctx.batch_size {
        return Ok(SelectionResult {
            chosen: ctx.pool_idx.to_vec(),
            scores: None,
        });
    }
    match id {
        StrategyId::Random => Ok(select_random(ctx, rng)),
        StrategyId::Margin => Ok(by_score(ctx, score_margin(ctx.probs)?, true)),
        StrategyId::Entropy => Ok(by_score(ctx, score_entropy(ctx.probs), false)),
        StrategyId::LeastConfident => Ok(by_score(ctx, score_lc(ctx.probs), false)),
        StrategyId::RandomMargin => select_random_margin(ctx, rng),
        StrategyId::MinMargin => select_min_margin(ctx, rng),
        StrategyId::TypiClust => select_typiclust(ctx, rng),
        StrategyId::MaxEnt => {
            let mc = ctx.mc_probs.ok_or_else(|| ctx.missing("mc_probs"))?;
            Ok(by_score(ctx, score_maxent(mc)?, false))
        }
        StrategyId::Bald => {
            let mc = ctx.mc_probs.ok_or_else(|| ctx.missing("mc_probs"))?;
            Ok(by_score(ctx, score_bald(mc)?, false))
        }
        StrategyId::Coreset => select_coreset(ctx),
        StrategyId::MarginDensity => select_margin_density(ctx, rng),
        StrategyId::ClusterMargin125 => select_cluster_margin(ctx, 1.25, rng),
        StrategyId::ClusterMargin10 => select_cluster_margin(ctx, 10.0, rng),
        StrategyId::Qbc => select_qbc(ctx),
        StrategyId::PowerMargin => {
            let scores: Vec<f64> = score_margin(ctx.probs)?.into_iter().map(|m| 1.0 - m).collect();
            select_power(&scores, ctx.pool_idx, ctx.batch_size, ctx.config.power_beta, rng)
        }
        StrategyId::PowerBald => {
            let mc = ctx.mc_probs.ok_or_else(|| ctx.missing("mc_probs"))?;
            select_power(&score_bald(mc)?, ctx.pool_idx, ctx.batch_size, ctx.config.power_beta, rng)
        }
    }
}
