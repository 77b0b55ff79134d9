//! Pool-based active learning for tabular classification.
//!
//! The crate bundles everything needed to simulate an active learning
//! benchmark at desk scale:
//!
//! - [`dataset`]: CSV + manifest ingestion, imputation, one-hot / z-score
//!   encoding and per-trial splits.
//! - [`net`]: a dense ReLU network with Adam, dropout and Monte-Carlo inference.
//! - [`scarf`]: contrastive pre-training by random feature corruption.
//! - [`cluster`]: k-means, spherical k-means, average-linkage agglomerative
//!   clustering and cosine k-NN.
//! - [`strategies`]: the acquisition functions.
//! - [`al_loop`]: the seed/acquire/retrain/evaluate loop and the benchmark grid.
//! - [`stats`]: Welch's t-test, win matrices, gains over random, AL curves.

pub mod al_loop;
pub mod cluster;
pub mod dataset;
mod error;
pub mod net;
pub mod scarf;
pub mod stats;
pub mod strategies;

pub use al_loop::{Scenario, ScenarioConfig, TrialOptions, TrialRecord};
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use strategies::StrategyId;
