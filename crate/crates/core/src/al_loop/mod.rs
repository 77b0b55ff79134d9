//! The active learning simulation: seed set, acquisition rounds, retraining
//! and evaluation, plus the benchmark grid runner.

mod benchmark;
mod oracle;
mod trial;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::net::{NetConfig, TrainConfig};
use crate::scarf::PretrainConfig;
use crate::strategies::{StrategyConfig, StrategyId};
use crate::{Error, Result};

pub use benchmark::{
    arm_dir, read_ledger, read_records, run_benchmark, BenchmarkPlan, BenchmarkSummary, CellFailure, CellKey,
    LEDGER_FILE, RECORDS_FILE,
};
pub use oracle::{audit, AccessEvent, AccessLog, LabelOracle, Violation};
pub use trial::{run_trial, ALState, TrialInputs, TrialOutput};

/// Acquisition rounds after the seed round.
pub const ROUNDS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Small,
    Medium,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: Scenario,
    pub seed_size: usize,
    pub batch_size: usize,
    pub rounds: usize,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Small, Scenario::Medium, Scenario::Large];

    pub fn config(self) -> ScenarioConfig {
        let (seed_size, batch_size) = match self {
            Scenario::Small => (30, 10),
            Scenario::Medium => (100, 50),
            Scenario::Large => (300, 200),
        };
        ScenarioConfig {
            name: self,
            seed_size,
            batch_size,
            rounds: ROUNDS,
        }
    }

    /// Round shown by default in reports.
    pub fn default_report_round(self) -> usize {
        match self {
            Scenario::Small => 7,
            Scenario::Medium | Scenario::Large => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Small => "small",
            Scenario::Medium => "medium",
            Scenario::Large => "large",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario {s:?} (expected small, medium or large)")))
    }
}

/// One evaluation of one trial at one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub dataset_id: String,
    pub strategy_id: StrategyId,
    pub scenario: Scenario,
    pub trial: usize,
    pub round: usize,
    pub labeled_count: usize,
    pub test_accuracy: f64,
    /// Seconds since the trial started.
    pub wall_time: f64,
}

/// Derives a 64-bit seed from the master seed and a labelled path, so that
/// each stream depends only on the parts named.
pub fn derive_seed(master: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Knobs shared by every trial of a benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOptions {
    /// Network shape; `n_classes` is overridden per dataset.
    pub net: NetConfig,
    /// Supervised training; `seed` is overridden per model.
    pub train: TrainConfig,
    pub pretrain: PretrainConfig,
    pub strategy: StrategyConfig,
    /// Monte-Carlo dropout masks for MaxEnt / BALD / PowerBALD.
    pub mc_samples: usize,
    /// Training and inference dropout for strategies that use Monte-Carlo
    /// dropout; other strategies train with `net.dropout_rate`.
    pub mc_dropout_rate: f64,
    /// Stop after this many acquisition rounds instead of the scenario's `T`.
    pub max_rounds: Option<usize>,
}

impl Default for TrialOptions {
    fn default() -> Self {
        TrialOptions {
            net: NetConfig::full_size(2),
            train: TrainConfig::default(),
            pretrain: PretrainConfig::default(),
            strategy: StrategyConfig::default(),
            mc_samples: 25,
            mc_dropout_rate: 0.5,
            max_rounds: None,
        }
    }
}
