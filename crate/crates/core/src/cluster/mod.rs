//! Clustering and neighbour primitives used by the diversity-aware
//! acquisition strategies. All functions are deterministic in their inputs
//! and seed.

mod agglomerative;
mod kmeans;
mod knn;
mod spherical;

use ndarray::{Array2, ArrayView2, Axis};

pub use agglomerative::agglomerative_avg;
pub use kmeans::{kmeans, squared_distance};
pub use knn::{cosine_distance, knn, knn_among};
pub use spherical::spherical_kmeans;

use crate::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    /// Cluster id of every point, dense in `[0, k)`.
    pub labels: Vec<usize>,
    /// Cluster centres (k-means variants only).
    pub centers: Option<Array2<f64>>,
    pub sizes: Vec<usize>,
    /// Objective after every Lloyd iteration (k-means variants only).
    pub objective_history: Vec<f64>,
}

impl ClusterAssignment {
    pub fn n_clusters(&self) -> usize {
        self.sizes.len()
    }

    pub(crate) fn from_labels(labels: Vec<usize>, k: usize) -> Self {
        let mut sizes = vec![0; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        ClusterAssignment {
            labels,
            centers: None,
            sizes,
            objective_history: Vec::new(),
        }
    }

    /// Members of each cluster in ascending point order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.sizes.len()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

/// Rows scaled to unit L2 norm; zero rows are rejected.
pub fn normalize_rows(x: ArrayView2<f64>) -> Result<Array2<f64>> {
    let mut out = x.to_owned();
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm(i));
        }
        row /= norm;
    }
    Ok(out)
}

fn check_k(k: usize, rows: usize) -> Result<()> {
    if k == 0 || k > rows {
        return Err(Error::InvalidArgument(format!("cluster count {k} must lie in [1, {rows}]")));
    }
    Ok(())
}
