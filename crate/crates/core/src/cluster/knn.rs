use ndarray::{ArrayView1, ArrayView2};

use crate::{Error, Result};

/// Cosine distance scaled to `[0, 1]`: `(1 - cos) / 2`.
pub fn cosine_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    let cos = (a.dot(&b) / (na * nb)).clamp(-1.0, 1.0);
    (1.0 - cos) / 2.0
}

/// The `k` nearest rows to `query` by cosine distance, excluding the query.
/// Ties go to the smaller row index.
pub fn knn(x: ArrayView2<f64>, query: usize, k: usize) -> Result<Vec<usize>> {
    let all: Vec<usize> = (0..x.nrows()).collect();
    knn_among(x, &all, query, k)
}

/// Like [`knn`] but searching only `candidates` (row indices of `x`).
pub fn knn_among(x: ArrayView2<f64>, candidates: &[usize], query: usize, k: usize) -> Result<Vec<usize>> {
    let others: Vec<usize> = candidates.iter().copied().filter(|&c| c != query).collect();
    if k > others.len() || query >= x.nrows() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} but only {} neighbours available",
            others.len()
        )));
    }
    for &i in others.iter().chain(std::iter::once(&query)) {
        let r = x.row(i);
        if r.dot(&r) == 0.0 {
            return Err(Error::ZeroNorm(i));
        }
    }
    let q = x.row(query);
    let mut scored: Vec<(f64, usize)> = others.iter().map(|&i| (cosine_distance(q, x.row(i)), i)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(scored.into_iter().take(k).map(|(_, i)| i).collect())
}
