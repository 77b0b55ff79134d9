//! Tabular dataset ingestion, pre-processing and per-trial splits.
//!
//! The pipeline is `load_csv` → `impute` → `encode`, producing a [`Dataset`]
//! with a dense, fully numeric feature matrix. Categorical columns are
//! one-hot expanded and numeric columns are z-scored unless exempted.

mod fetch;
mod load;
mod preprocess;
mod split;
mod synth;

use std::ops::Range;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use fetch::{fetch, FetchRequest, FetchedDataset};
pub use load::{load_csv, Manifest, ManifestColumn};
pub use preprocess::{encode, encode_with_scaling, impute};
pub use split::{make_split, TrialSplit};
pub use synth::{correlated_two_gaussians, two_gaussians};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    /// Category labels in order of first appearance. Empty for numeric columns.
    pub categories: Vec<String>,
    pub scale_exempt: bool,
}

/// A single parsed cell. Categorical values index into the column's `categories`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Num(f64),
    Cat(usize),
}

#[derive(Debug, Clone)]
pub struct RawTable {
    pub schema: Vec<ColumnSchema>,
    pub rows: Vec<Vec<Option<Value>>>,
    pub target_column: String,
    pub targets: Vec<String>,
    /// Non-fatal notes raised while loading, such as dropped columns.
    pub warnings: Vec<String>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn has_missing(&self) -> bool {
        self.rows.iter().any(|r| r.iter().any(Option::is_none))
    }
}

/// Encoded dataset ready for training.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub id: String,
    pub x: Array2<f64>,
    pub y: Vec<usize>,
    pub n_classes: usize,
    pub feature_names: Vec<String>,
    /// Encoded column range of every raw feature, in schema order.
    pub feature_groups: Vec<Range<usize>>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_raw_features(&self) -> usize {
        self.feature_groups.len()
    }

    /// Checks the structural invariants of an encoded dataset.
    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        if self.x.nrows() != self.y.len() {
            return Err(Error::InvalidDataset(format!(
                "{} feature rows but {} labels",
                self.x.nrows(),
                self.y.len()
            )));
        }
        if self.n_classes < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 classes, found {}",
                self.n_classes
            )));
        }
        if let Some(&bad) = self.y.iter().find(|&&c| c >= self.n_classes) {
            return Err(Error::InvalidDataset(format!(
                "label {bad} outside [0, {})",
                self.n_classes
            )));
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite feature value".into()));
        }
        Ok(())
    }
}
