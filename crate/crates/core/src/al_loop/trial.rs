use std::collections::HashSet;
use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::oracle::{AccessLog, LabelOracle};
use super::{derive_seed, ScenarioConfig, TrialOptions, TrialRecord};
use crate::cluster::{agglomerative_avg, normalize_rows, ClusterAssignment};
use crate::dataset::{Dataset, TrialSplit};
use crate::net::{
    embed, predict_proba, predict_proba_mc, sample_mc_masks, train_supervised, ModelBundle, NetConfig, TrainConfig,
};
use crate::scarf::embed_normalized;
use crate::strategies::{select, AcquisitionContext, MemberInit, StrategyId, Trainer};
use crate::{Error, Result};

/// Labeled and pool row sets of one trial; together they always partition
/// the train split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ALState {
    /// In acquisition order.
    pub labeled: Vec<usize>,
    /// Ascending.
    pub pool: Vec<usize>,
}

impl ALState {
    pub fn new(n_total: usize, seed_rows: &[usize]) -> Result<Self> {
        let seed: HashSet<usize> = seed_rows.iter().copied().collect();
        if seed.len() != seed_rows.len() || seed_rows.iter().any(|&r| r >= n_total) {
            return Err(Error::InvalidArgument("seed set must be distinct train rows".into()));
        }
        Ok(ALState {
            labeled: seed_rows.to_vec(),
            pool: (0..n_total).filter(|r| !seed.contains(r)).collect(),
        })
    }

    /// Moves `rows` from the pool to the labeled set.
    pub fn transfer(&mut self, rows: &[usize]) -> Result<()> {
        let moving: HashSet<usize> = rows.iter().copied().collect();
        if moving.len() != rows.len() {
            return Err(Error::InvalidArgument("duplicate rows in acquisition batch".into()));
        }
        if let Some(r) = rows.iter().find(|r| self.pool.binary_search(r).is_err()) {
            return Err(Error::InvalidArgument(format!("row {r} is not in the pool")));
        }
        self.pool.retain(|r| !moving.contains(r));
        self.labeled.extend_from_slice(rows);
        Ok(())
    }

    /// Whether labeled and pool are disjoint and cover `0..n_total`.
    pub fn is_partition(&self, n_total: usize) -> bool {
        let mut all: Vec<usize> = self.labeled.iter().chain(&self.pool).copied().collect();
        all.sort_unstable();
        all.len() == n_total && all.iter().enumerate().all(|(i, &r)| i == r)
    }
}

pub struct TrialInputs<'a> {
    pub dataset: &'a Dataset,
    pub split: &'a TrialSplit,
    pub strategy: StrategyId,
    pub scenario: ScenarioConfig,
    pub trial: usize,
    pub master_seed: u64,
    /// Pre-trained backbone (head removed) for the pre-training arm.
    pub pretrained: Option<&'a ModelBundle>,
    pub options: &'a TrialOptions,
}

#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub records: Vec<TrialRecord>,
    pub log: AccessLog,
}

fn fresh_model(input_dim: usize, net: &NetConfig, pretrained: Option<&ModelBundle>, seed: u64) -> Result<ModelBundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match pretrained {
        Some(p) => {
            let mut m = p.clone();
            m.reset_class_head(net.n_classes, &mut rng);
            Ok(m)
        }
        None => ModelBundle::init(input_dim, net, &mut rng),
    }
}

fn fit(
    x: ArrayView2<f64>,
    y: &[usize],
    net: &NetConfig,
    train: &TrainConfig,
    pretrained: Option<&ModelBundle>,
    seed: u64,
) -> Result<ModelBundle> {
    let model = fresh_model(x.ncols(), net, pretrained, seed)?;
    let cfg = TrainConfig {
        seed: derive_seed(seed, &["batches"]),
        ..train.clone()
    };
    Ok(train_supervised(model, x, y, &cfg, net.dropout_rate)?.model)
}

fn argmax_rows(p: &Array2<f64>) -> Vec<usize> {
    p.rows()
        .into_iter()
        .map(|row| row.iter().enumerate().fold(0, |best, (j, &v)| if v > row[best] { j } else { best }))
        .collect()
}

struct MemberTrainer<'a> {
    x_train: ArrayView2<'a, f64>,
    x_pool: Array2<f64>,
    net: &'a NetConfig,
    train: &'a TrainConfig,
    pretrained: Option<&'a ModelBundle>,
    seed: u64,
}

impl Trainer for MemberTrainer<'_> {
    fn train_member(&self, rows: &[usize], labels: &[usize], member: usize, init: MemberInit) -> Result<Array2<f64>> {
        let (tag, start) = match init {
            MemberInit::Current => ("current", self.pretrained),
            MemberInit::Fresh => ("fresh", None),
        };
        let seed = derive_seed(self.seed, &[tag, &member.to_string()]);
        let x = self.x_train.select(Axis(0), rows);
        let model = fit(x.view(), labels, self.net, self.train, start, seed)?;
        predict_proba(&model, self.x_pool.view())
    }
}

/// Runs one trial: seed set, then up to `T` rounds of select / label /
/// retrain, evaluating on the test split after every (re)training.
///
/// The model is retrained from scratch each round (a fresh copy of the
/// pre-trained backbone when one is given). Round 0 is the seed-set model.
pub fn run_trial(inp: &TrialInputs) -> Result<TrialOutput> {
    let start = Instant::now();
    let ds = inp.dataset;
    let opts = inp.options;
    let sc = inp.scenario;
    let arm = if inp.pretrained.is_some() { "pretrain" } else { "no_pretrain" };
    let trial = inp.trial.to_string();
    let scenario = sc.name.as_str();

    let x_train = ds.x.select(Axis(0), &inp.split.train_idx);
    let x_test = ds.x.select(Axis(0), &inp.split.test_idx);
    let n_total = x_train.nrows();
    let mut oracle = LabelOracle::new(
        inp.split.train_idx.iter().map(|&i| ds.y[i]).collect(),
        inp.split.test_idx.iter().map(|&i| ds.y[i]).collect(),
    );
    if sc.seed_size > n_total {
        return Err(Error::InvalidArgument(format!(
            "seed set of {} exceeds {} train rows",
            sc.seed_size, n_total
        )));
    }

    let mut seed_rng = ChaCha8Rng::seed_from_u64(derive_seed(inp.master_seed, &["seed_set", &ds.id, scenario, &trial]));
    let seed_rows = sample(&mut seed_rng, n_total, sc.seed_size).into_vec();
    let mut state = ALState::new(n_total, &seed_rows)?;
    let mut labeled_y = oracle.acquire(0, &seed_rows)?;

    let mut strategy_rng = ChaCha8Rng::seed_from_u64(derive_seed(
        inp.master_seed,
        &["strategy", &ds.id, scenario, &trial, arm, inp.strategy.as_str()],
    ));
    let needs = inp.strategy.needs();
    let net = NetConfig {
        n_classes: ds.n_classes,
        dropout_rate: if needs.mc_probs { opts.mc_dropout_rate } else { opts.net.dropout_rate },
        ..opts.net.clone()
    };
    let rounds = opts.max_rounds.unwrap_or(sc.rounds);
    let mut clusters: Option<ClusterAssignment> = None;
    let mut embeddings: Option<Array2<f64>> = None;
    let mut records = Vec::with_capacity(rounds + 1);

    for round in 0..=rounds {
        let model_seed = derive_seed(inp.master_seed, &["model", &ds.id, scenario, &trial, arm, &round.to_string()]);
        let x_lab = x_train.select(Axis(0), &state.labeled);
        let model = fit(x_lab.view(), &labeled_y, &net, &opts.train, inp.pretrained, model_seed)?;
        let predictions = argmax_rows(&predict_proba(&model, x_test.view())?);
        let accuracy = oracle.evaluate(round, &predictions)?;
        records.push(TrialRecord {
            dataset_id: ds.id.clone(),
            strategy_id: inp.strategy,
            scenario: sc.name,
            trial: inp.trial,
            round,
            labeled_count: state.labeled.len(),
            test_accuracy: accuracy,
            wall_time: start.elapsed().as_secs_f64(),
        });
        if round == rounds || state.pool.is_empty() {
            break;
        }

        if let (Some(m), None) = (needs.cluster_margin, &clusters) {
            let emb = embed(&model, x_train.view())?;
            let k = ((n_total as f64 / m).floor() as usize).max(1);
            clusters = Some(agglomerative_avg(emb.view(), k)?);
        }
        if needs.embeddings && embeddings.is_none() {
            embeddings = Some(match inp.pretrained {
                Some(p) => embed_normalized(p, x_train.view())?,
                None => normalize_rows(x_train.view())?,
            });
        }

        let x_pool = x_train.select(Axis(0), &state.pool);
        let probs = predict_proba(&model, x_pool.view())?;
        let mc = if needs.mc_probs {
            let masks = sample_mc_masks(&model, opts.mc_samples, &mut strategy_rng)?;
            Some(predict_proba_mc(&model, x_pool.view(), &masks)?)
        } else {
            None
        };
        let pen_pool = if needs.penultimate_pool { Some(embed(&model, x_pool.view())?) } else { None };
        let pen_lab = if needs.penultimate_labeled { Some(embed(&model, x_lab.view())?) } else { None };
        let trainer = needs.trainer.then(|| MemberTrainer {
            x_train: x_train.view(),
            x_pool: x_pool.clone(),
            net: &net,
            train: &opts.train,
            pretrained: inp.pretrained,
            seed: derive_seed(model_seed, &["committee"]),
        });

        let ctx = AcquisitionContext {
            probs: probs.view(),
            mc_probs: mc.as_deref(),
            penultimate_pool: pen_pool.as_ref().map(|m| m.view()),
            penultimate_labeled: pen_lab.as_ref().map(|m| m.view()),
            embeddings: embeddings.as_ref().map(|m| m.view()),
            clusters: clusters.as_ref(),
            labeled_idx: &state.labeled,
            labeled_y: &labeled_y,
            pool_idx: &state.pool,
            n_classes: ds.n_classes,
            batch_size: sc.batch_size,
            round: round + 1,
            trainer: trainer.as_ref().map(|t| t as &dyn Trainer),
            config: &opts.strategy,
        };
        let chosen = select(inp.strategy, &ctx, &mut strategy_rng)?.chosen;
        state.transfer(&chosen)?;
        labeled_y.extend(oracle.acquire(round + 1, &chosen)?);
        debug_assert!(state.is_partition(n_total));
    }
    Ok(TrialOutput {
        records,
        log: oracle.into_log(),
    })
}
