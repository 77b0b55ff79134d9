use ndarray::ArrayView2;

use super::kmeans::squared_distance;
use super::{check_k, ClusterAssignment};
use crate::Result;

/// Condensed upper-triangular distance matrix.
struct Condensed {
    n: usize,
    d: Vec<f64>,
}

impl Condensed {
    fn new(x: &ArrayView2<f64>) -> Self {
        let n = x.nrows();
        let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                d.push(squared_distance(x.row(i), x.row(j)).sqrt());
            }
        }
        Condensed { n, d }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a * (2 * self.n - a - 1) / 2 + (b - a - 1)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[self.idx(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.d[k] = v;
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Average-linkage (UPGMA) agglomerative clustering on Euclidean distance,
/// stopped when `n_clusters` clusters remain.
///
/// Uses the nearest-neighbour chain algorithm, O(n²) time and memory.
/// Labels are numbered by first appearance in point order.
pub fn agglomerative_avg(x: ArrayView2<f64>, n_clusters: usize) -> Result<ClusterAssignment> {
    let n = x.nrows();
    check_k(n_clusters, n)?;
    let mut dist = Condensed::new(&x);
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    // (height, surviving slot, absorbed slot)
    let mut merges: Vec<(f64, usize, usize)> = Vec::with_capacity(n.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::new();

    while merges.len() + 1 < n {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).unwrap());
        }
        loop {
            let top = *chain.last().unwrap();
            let prev = chain.len().checked_sub(2).map(|i| chain[i]);
            // prefer the previous chain element on ties so the chain terminates
            let mut best = prev;
            let mut best_d = prev.map_or(f64::INFINITY, |p| dist.get(top, p));
            for j in (0..n).filter(|&j| active[j] && j != top) {
                let d = dist.get(top, j);
                if d < best_d || (d == best_d && best.is_none()) {
                    best = Some(j);
                    best_d = d;
                }
            }
            let next = best.expect("at least two active clusters");
            if Some(next) == prev {
                chain.truncate(chain.len() - 2);
                let (a, b) = if top < next { (top, next) } else { (next, top) };
                merges.push((best_d, a, b));
                let (sa, sb) = (size[a] as f64, size[b] as f64);
                for k in (0..n).filter(|&k| active[k] && k != a && k != b) {
                    let v = (sa * dist.get(a, k) + sb * dist.get(b, k)) / (sa + sb);
                    dist.set(a, k, v);
                }
                size[a] += size[b];
                active[b] = false;
                break;
            }
            chain.push(next);
        }
    }

    merges.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut parent: Vec<usize> = (0..n).collect();
    for &(_, a, b) in merges.iter().take(n - n_clusters) {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra.max(rb)] = ra.min(rb);
    }
    let mut label_of_root = vec![usize::MAX; n];
    let mut next = 0;
    let labels = (0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            label_of_root[r]
        })
        .collect();
    Ok(ClusterAssignment::from_labels(labels, n_clusters))
}
