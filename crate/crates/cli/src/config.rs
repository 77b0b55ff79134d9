//! Run configuration: a TOML file overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tabal::{Scenario, StrategyId};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PretrainArms {
    On,
    Off,
    Both,
}

impl PretrainArms {
    pub fn arms(self) -> Vec<bool> {
        match self {
            PretrainArms::On => vec![true],
            PretrainArms::Off => vec![false],
            PretrainArms::Both => vec![false, true],
        }
    }
}

/// Everything `tabal run` needs. Field names double as TOML keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// CSV paths (manifest alongside as `<stem>.manifest.json`) or
    /// `fetch:<id>` entries resolved through the cache.
    pub datasets: Vec<String>,
    pub strategies: Vec<String>,
    pub scenarios: Vec<Scenario>,
    pub trials: usize,
    pub pretrain: PretrainArms,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    /// Acquisition rounds per trial; defaults to the scenario's 20.
    pub rounds: Option<usize>,
    /// Supervised training epochs; defaults to 30.
    pub epochs: Option<usize>,
    pub hidden_units: Option<usize>,
    pub backbone_layers: Option<usize>,
}

/// The subset of [`RunConfig`] that may appear in a config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub datasets: Option<Vec<String>>,
    pub strategies: Option<Vec<String>>,
    pub scenarios: Option<Vec<Scenario>>,
    pub trials: Option<usize>,
    pub pretrain: Option<PretrainArms>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub rounds: Option<usize>,
    pub epochs: Option<usize>,
    pub hidden_units: Option<usize>,
    pub backbone_layers: Option<usize>,
}

impl PartialConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Values set in `over` win.
    pub fn merge(self, over: PartialConfig) -> PartialConfig {
        PartialConfig {
            datasets: over.datasets.or(self.datasets),
            strategies: over.strategies.or(self.strategies),
            scenarios: over.scenarios.or(self.scenarios),
            trials: over.trials.or(self.trials),
            pretrain: over.pretrain.or(self.pretrain),
            seed: over.seed.or(self.seed),
            workers: over.workers.or(self.workers),
            out: over.out.or(self.out),
            rounds: over.rounds.or(self.rounds),
            epochs: over.epochs.or(self.epochs),
            hidden_units: over.hidden_units.or(self.hidden_units),
            backbone_layers: over.backbone_layers.or(self.backbone_layers),
        }
    }

    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let cfg = RunConfig {
            datasets: self.datasets.unwrap_or_default(),
            strategies: self.strategies.unwrap_or_else(|| vec!["random".into(), "margin".into()]),
            scenarios: self.scenarios.unwrap_or_else(|| vec![Scenario::Medium]),
            trials: self.trials.unwrap_or(20),
            pretrain: self.pretrain.unwrap_or(PretrainArms::Off),
            seed: self.seed.unwrap_or(0),
            workers: self.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
            rounds: self.rounds,
            epochs: self.epochs,
            hidden_units: self.hidden_units,
            backbone_layers: self.backbone_layers,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.datasets.is_empty() {
            return Err(CliError::Config("no datasets given".into()));
        }
        if self.strategies.is_empty() {
            return Err(CliError::Config("no strategies given".into()));
        }
        if self.scenarios.is_empty() {
            return Err(CliError::Config("no scenarios given".into()));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials must be ≥ 1".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Config("workers must be ≥ 1".into()));
        }
        if self.epochs == Some(0) || self.hidden_units == Some(0) || self.backbone_layers == Some(0) {
            return Err(CliError::Config("epochs, hidden_units and backbone_layers must be ≥ 1".into()));
        }
        self.strategy_ids()?;
        Ok(())
    }

    pub fn strategy_ids(&self) -> Result<Vec<StrategyId>, CliError> {
        self.strategies
            .iter()
            .map(|s| s.parse::<StrategyId>().map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }
}
