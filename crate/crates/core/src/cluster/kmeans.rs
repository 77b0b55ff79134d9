use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_k, ClusterAssignment};
use crate::Result;

pub fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Samples an index with probability proportional to `weights`; falls back
/// to a uniform choice among `fallback` when all weights are zero.
pub(super) fn weighted_pick<R: Rng + ?Sized>(weights: &[f64], fallback: &[usize], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    if total > 0.0 && total.is_finite() {
        let mut target = rng.random::<f64>() * total;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                if target < w {
                    return i;
                }
                target -= w;
            }
        }
        // rounding left a sliver; take the last positive weight
        return weights.iter().rposition(|&w| w > 0.0).unwrap();
    }
    fallback[rng.random_range(0..fallback.len())]
}

fn nearest(point: ArrayView1<f64>, centers: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.rows().into_iter().enumerate() {
        let d = squared_distance(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init<R: Rng + ?Sized>(x: &ArrayView2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = x.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = x.rows().into_iter().map(|r| squared_distance(r, x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let unused: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
        let next = weighted_pick(&d2, &unused, rng);
        chosen.push(next);
        for (i, r) in x.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(r, x.row(next)));
        }
    }
    x.select(Axis(0), &chosen)
}

fn means(x: &ArrayView2<f64>, labels: &[usize], k: usize, previous: &Array2<f64>) -> Array2<f64> {
    let mut sums = Array2::<f64>::zeros((k, x.ncols()));
    let mut counts = vec![0usize; k];
    for (row, &l) in x.rows().into_iter().zip(labels) {
        sums.row_mut(l).scaled_add(1.0, &row);
        counts[l] += 1;
    }
    for (c, &count) in counts.iter().enumerate() {
        if count == 0 {
            sums.row_mut(c).assign(&previous.row(c));
        } else {
            sums.row_mut(c).mapv_inplace(|v| v / count as f64);
        }
    }
    sums
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Empty clusters are repaired by moving the point farthest from its centre
/// (taken from a cluster with more than one member) into the empty cluster.
/// `objective_history` holds the inertia after every iteration.
pub fn kmeans(x: ArrayView2<f64>, k: usize, seed: u64, max_iter: usize) -> Result<ClusterAssignment> {
    check_k(k, x.nrows())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_init(&x, k, &mut rng);
    let mut labels: Vec<usize> = Vec::new();
    let mut history = Vec::new();

    for _ in 0..max_iter.max(1) {
        let mut next: Vec<(usize, f64)> = x.rows().into_iter().map(|r| nearest(r, &centers)).collect();
        repair_empty(&x, &mut next, &mut centers, k);
        let next_labels: Vec<usize> = next.iter().map(|p| p.0).collect();
        let converged = next_labels == labels;
        labels = next_labels;
        centers = means(&x, &labels, k, &centers);
        history.push(inertia(&x, &labels, &centers));
        if converged {
            break;
        }
    }

    let mut out = ClusterAssignment::from_labels(labels, k);
    out.centers = Some(centers);
    out.objective_history = history;
    Ok(out)
}

fn repair_empty(x: &ArrayView2<f64>, assign: &mut [(usize, f64)], centers: &mut Array2<f64>, k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &(c, _) in assign.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let donor = assign
            .iter()
            .enumerate()
            .filter(|(_, (c, _))| sizes[*c] > 1)
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i);
        let Some(p) = donor else { return };
        centers.row_mut(empty).assign(&x.row(p));
        assign[p] = (empty, 0.0);
    }
}

fn inertia(x: &ArrayView2<f64>, labels: &[usize], centers: &Array2<f64>) -> f64 {
    x.rows()
        .into_iter()
        .zip(labels)
        .map(|(r, &l)| squared_distance(r, centers.row(l)))
        .sum()
}
