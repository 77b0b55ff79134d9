use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kmeans::weighted_pick;
use super::{check_k, normalize_rows, ClusterAssignment, DEFAULT_MAX_ITER};
use crate::Result;

fn most_similar(point: ArrayView1<f64>, centers: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (c, center) in centers.rows().into_iter().enumerate() {
        let s = point.dot(&center);
        if s > best.1 {
            best = (c, s);
        }
    }
    best
}

/// k-means on the unit sphere: rows are L2-normalised, points join the centre
/// of maximal cosine similarity, and centres are renormalised mean directions.
///
/// Seeding is k-means++ with cosine distance. `objective_history` holds the
/// total cosine similarity to assigned centres (to be maximised).
pub fn spherical_kmeans(x: ArrayView2<f64>, k: usize, seed: u64) -> Result<ClusterAssignment> {
    check_k(k, x.nrows())?;
    let u = normalize_rows(x)?;
    let n = u.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut chosen = vec![rng.random_range(0..n)];
    let mut dist: Vec<f64> = u.rows().into_iter().map(|r| (1.0 - r.dot(&u.row(chosen[0]))).max(0.0)).collect();
    while chosen.len() < k {
        let unused: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
        let next = weighted_pick(&dist, &unused, &mut rng);
        chosen.push(next);
        for (i, r) in u.rows().into_iter().enumerate() {
            dist[i] = dist[i].min((1.0 - r.dot(&u.row(next))).max(0.0));
        }
    }
    let mut centers = u.select(Axis(0), &chosen);

    let mut labels: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    for _ in 0..DEFAULT_MAX_ITER {
        let mut assign: Vec<(usize, f64)> = u.rows().into_iter().map(|r| most_similar(r, &centers)).collect();
        repair_empty(&u, &mut assign, &mut centers, k);
        let next: Vec<usize> = assign.iter().map(|a| a.0).collect();
        let converged = next == labels;
        labels = next;
        update_centers(&u, &labels, &mut centers);
        history.push(
            u.rows()
                .into_iter()
                .zip(&labels)
                .map(|(r, &l)| r.dot(&centers.row(l)))
                .sum(),
        );
        if converged {
            break;
        }
    }
    let mut out = ClusterAssignment::from_labels(labels, k);
    out.centers = Some(centers);
    out.objective_history = history;
    Ok(out)
}

fn update_centers(u: &Array2<f64>, labels: &[usize], centers: &mut Array2<f64>) {
    let mut sums = Array2::<f64>::zeros(centers.raw_dim());
    for (row, &l) in u.rows().into_iter().zip(labels) {
        sums.row_mut(l).scaled_add(1.0, &row);
    }
    for (c, sum) in sums.rows().into_iter().enumerate() {
        let norm = sum.dot(&sum).sqrt();
        // a cancelling sum keeps its previous direction
        if norm > 1e-12 {
            centers.row_mut(c).assign(&(&sum / norm));
        }
    }
}

fn repair_empty(u: &Array2<f64>, assign: &mut [(usize, f64)], centers: &mut Array2<f64>, k: usize) {
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
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i);
        let Some(p) = donor else { return };
        centers.row_mut(empty).assign(&u.row(p));
        assign[p] = (empty, 1.0);
    }
}
