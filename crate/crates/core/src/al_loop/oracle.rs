use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One entry of the label access log. Train rows are positions in the trial's
/// train split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccessEvent {
    /// Rows moved from the pool into the labeled set at `round`.
    Acquire { round: usize, rows: Vec<usize> },
    /// Train labels handed out at `round`.
    TrainRead { round: usize, rows: Vec<usize> },
    /// All test labels read to score predictions at `round`.
    EvalRead { round: usize },
    /// Test labels read for any other purpose.
    TestRead { round: usize },
}

pub type AccessLog = Vec<AccessEvent>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A train label was read before the row was acquired.
    EarlyTrainRead { round: usize, row: usize },
    /// A row was acquired twice.
    DoubleAcquire { round: usize, row: usize },
    /// Test labels were read outside evaluation.
    TestReadOutsideEval { round: usize },
}

/// Holds every label of a trial and hands them out only through logged
/// accessors.
#[derive(Debug)]
pub struct LabelOracle {
    train: Vec<usize>,
    test: Vec<usize>,
    log: AccessLog,
}

impl LabelOracle {
    pub fn new(train: Vec<usize>, test: Vec<usize>) -> Self {
        LabelOracle {
            train,
            test,
            log: Vec::new(),
        }
    }

    pub fn n_train(&self) -> usize {
        self.train.len()
    }

    /// Records that `rows` join the labeled set at `round` and returns their
    /// labels.
    pub fn acquire(&mut self, round: usize, rows: &[usize]) -> Result<Vec<usize>> {
        if let Some(&r) = rows.iter().find(|&&r| r >= self.train.len()) {
            return Err(Error::InvalidArgument(format!("train row {r} out of range")));
        }
        self.log.push(AccessEvent::Acquire {
            round,
            rows: rows.to_vec(),
        });
        self.log.push(AccessEvent::TrainRead {
            round,
            rows: rows.to_vec(),
        });
        Ok(rows.iter().map(|&r| self.train[r]).collect())
    }

    /// Accuracy of `predictions` on the test split.
    pub fn evaluate(&mut self, round: usize, predictions: &[usize]) -> Result<f64> {
        if predictions.len() != self.test.len() {
            return Err(Error::Shape(format!(
                "{} predictions for {} test rows",
                predictions.len(),
                self.test.len()
            )));
        }
        self.log.push(AccessEvent::EvalRead { round });
        let correct = predictions.iter().zip(&self.test).filter(|(p, y)| p == y).count();
        Ok(correct as f64 / self.test.len().max(1) as f64)
    }

    pub fn log(&self) -> &AccessLog {
        &self.log
    }

    pub fn into_log(self) -> AccessLog {
        self.log
    }
}

/// Checks that no train label is read before its row is acquired, no row is
/// acquired twice and test labels are only read for evaluation.
pub fn audit(log: &[AccessEvent]) -> Vec<Violation> {
    let mut acquired: HashMap<usize, usize> = HashMap::new();
    let mut out = Vec::new();
    for event in log {
        match event {
            AccessEvent::Acquire { round, rows } => {
                for &row in rows {
                    if acquired.insert(row, *round).is_some() {
                        out.push(Violation::DoubleAcquire { round: *round, row });
                    }
                }
            }
            AccessEvent::TrainRead { round, rows } => {
                for &row in rows {
                    match acquired.get(&row) {
                        Some(&at) if at <= *round => {}
                        _ => out.push(Violation::EarlyTrainRead { round: *round, row }),
                    }
                }
            }
            AccessEvent::EvalRead { .. } => {}
            AccessEvent::TestRead { round } => out.push(Violation::TestReadOutsideEval { round: *round }),
        }
    }
    out
}
