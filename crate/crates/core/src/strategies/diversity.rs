use std::collections::{BTreeMap, HashSet};

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::Rng;

use super::uncertainty::score_margin;
use super::{bottom_k, AcquisitionContext, MarginDensityOrder, SelectionResult};
use crate::cluster::{cosine_distance, kmeans, spherical_kmeans, squared_distance, DEFAULT_MAX_ITER};
use crate::Result;

/// Guards the typicality denominator when all neighbours coincide.
const TYPICALITY_EPS: f64 = 1e-12;

fn pick<R: Rng + ?Sized>(positions: &[usize], count: usize, rng: &mut R) -> Vec<usize> {
    sample(rng, positions.len(), count.min(positions.len()))
        .into_iter()
        .map(|i| positions[i])
        .collect()
}

/// Uniform sample of `batch` pool points without replacement.
pub fn select_random<R: Rng + ?Sized>(ctx: &AcquisitionContext, rng: &mut R) -> SelectionResult {
    let all: Vec<usize> = (0..ctx.pool_idx.len()).collect();
    SelectionResult {
        chosen: pick(&all, ctx.batch_size, rng).into_iter().map(|p| ctx.pool_idx[p]).collect(),
        scores: None,
    }
}

/// `ceil(B/2)` lowest-margin points, the rest uniformly from the remainder.
pub fn select_random_margin<R: Rng + ?Sized>(ctx: &AcquisitionContext, rng: &mut R) -> Result<SelectionResult> {
    let margins = score_margin(ctx.probs)?;
    let half = ctx.batch_size.div_ceil(2);
    let mut chosen = bottom_k(&margins, ctx.pool_idx, half);
    let taken: HashSet<usize> = chosen.iter().copied().collect();
    let rest: Vec<usize> = (0..ctx.pool_idx.len()).filter(|p| !taken.contains(p)).collect();
    chosen.extend(pick(&rest, ctx.batch_size - half, rng));
    Ok(SelectionResult {
        chosen: chosen.into_iter().map(|p| ctx.pool_idx[p]).collect(),
        scores: Some(margins),
    })
}

/// Greedy k-center in penultimate space: each pick is the pool point
/// farthest from its nearest labeled-or-already-picked point.
pub fn select_coreset(ctx: &AcquisitionContext) -> Result<SelectionResult> {
    let pool = ctx.penultimate_pool.ok_or_else(|| ctx.missing("penultimate_pool"))?;
    let labeled = ctx.penultimate_labeled.ok_or_else(|| ctx.missing("penultimate_labeled"))?;
    let mut nearest: Vec<f64> = pool
        .rows()
        .into_iter()
        .map(|p| {
            labeled
                .rows()
                .into_iter()
                .map(|l| squared_distance(p, l))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let initial: Vec<f64> = nearest.iter().map(|d| d.sqrt()).collect();
    let mut chosen = Vec::with_capacity(ctx.batch_size);
    for _ in 0..ctx.batch_size.min(pool.nrows()) {
        let best = (0..nearest.len())
            .filter(|&i| nearest[i] > f64::NEG_INFINITY)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if nearest[b] > nearest[i] || (nearest[b] == nearest[i] && ctx.pool_idx[b] < ctx.pool_idx[i]) => Some(b),
                _ => Some(i),
            })
            .expect("pool larger than batch");
        chosen.push(ctx.pool_idx[best]);
        let centre = pool.row(best);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(squared_distance(pool.row(i), centre));
        }
        nearest[best] = f64::NEG_INFINITY;
    }
    Ok(SelectionResult {
        chosen,
        scores: Some(initial),
    })
}

/// `margin * density` (or `margin / density`) given each point's cluster
/// label and the cluster sizes; density is cluster size over pool size.
pub fn margin_density_scores(margins: &[f64], labels: &[usize], sizes: &[usize], order: MarginDensityOrder) -> Vec<f64> {
    let n = labels.len() as f64;
    margins
        .iter()
        .zip(labels)
        .map(|(&m, &l)| {
            let density = sizes[l] as f64 / n;
            match order {
                MarginDensityOrder::SmallestProduct => m * density,
                MarginDensityOrder::PreferDense => m / density,
            }
        })
        .collect()
}

/// Margin-Density: k-means with `min(20, |Z|)` clusters on pool penultimate
/// activations, then the smallest margin-density scores.
pub fn select_margin_density<R: Rng + ?Sized>(ctx: &AcquisitionContext, rng: &mut R) -> Result<SelectionResult> {
    let pool = ctx.penultimate_pool.ok_or_else(|| ctx.missing("penultimate_pool"))?;
    let margins = score_margin(ctx.probs)?;
    let k = pool.nrows().min(20);
    let clusters = kmeans(pool, k, rng.random(), DEFAULT_MAX_ITER)?;
    let scores = margin_density_scores(&margins, &clusters.labels, &clusters.sizes, ctx.config.margin_density_order);
    Ok(SelectionResult {
        chosen: bottom_k(&scores, ctx.pool_idx, ctx.batch_size)
            .into_iter()
            .map(|p| ctx.pool_idx[p])
            .collect(),
        scores: Some(scores),
    })
}

/// Cluster-Margin with average cluster size `m`.
///
/// The `ceil(m * B)` lowest-margin candidates are grouped by their cached
/// cluster; groups are visited smallest first (size counted among retrieved
/// candidates, ties by cluster id), taking one random member per visit and
/// cycling until `B` points are chosen.
pub fn select_cluster_margin<R: Rng + ?Sized>(ctx: &AcquisitionContext, m: f64, rng: &mut R) -> Result<SelectionResult> {
    let clusters = ctx.clusters.ok_or_else(|| ctx.missing("clusters"))?;
    let margins = score_margin(ctx.probs)?;
    let retrieve = ((m * ctx.batch_size as f64).ceil() as usize).min(ctx.pool_idx.len());
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for p in bottom_k(&margins, ctx.pool_idx, retrieve) {
        groups.entry(clusters.labels[ctx.pool_idx[p]]).or_default().push(p);
    }
    let mut groups: Vec<(usize, Vec<usize>)> = groups.into_iter().collect();
    groups.sort_by_key(|(id, members)| (members.len(), *id));
    for (_, members) in &mut groups {
        members.sort_by_key(|&p| ctx.pool_idx[p]);
    }

    let mut chosen = Vec::with_capacity(ctx.batch_size);
    while chosen.len() < ctx.batch_size && groups.iter().any(|(_, g)| !g.is_empty()) {
        for (_, members) in groups.iter_mut().filter(|(_, g)| !g.is_empty()) {
            if chosen.len() == ctx.batch_size {
                break;
            }
            let p = members.remove(rng.random_range(0..members.len()));
            chosen.push(ctx.pool_idx[p]);
        }
    }
    Ok(SelectionResult {
        chosen,
        scores: Some(margins),
    })
}

/// Typicality of each of `members` (rows of `emb`) among the others:
/// the inverse of the mean scaled cosine distance to its `k` nearest fellow
/// members, with `k = min(N_total, max(20, |C|))` capped at `|C| - 1`.
pub fn typicality(emb: ArrayView2<f64>, members: &[usize]) -> Vec<f64> {
    let s = members.len();
    let k = emb.nrows().min(20.max(s)).min(s.saturating_sub(1));
    members
        .iter()
        .map(|&i| {
            let mut d: Vec<f64> = members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| cosine_distance(emb.row(i), emb.row(j)))
                .collect();
            d.sort_by(f64::total_cmp);
            let mean = if k == 0 { 0.0 } else { d[..k].iter().sum::<f64>() / k as f64 };
            1.0 / (mean + TYPICALITY_EPS)
        })
        .collect()
}

/// TypiClust: spherical k-means over all train rows into `|I| + B` clusters,
/// then the most typical point of each of the `B` largest clusters holding no
/// labeled point. If fewer than `B` such clusters exist, the used clusters
/// are revisited in turn for their next most typical point.
pub fn select_typiclust<R: Rng + ?Sized>(ctx: &AcquisitionContext, rng: &mut R) -> Result<SelectionResult> {
    let emb = ctx.embeddings.ok_or_else(|| ctx.missing("embeddings"))?;
    let k = (ctx.labeled_idx.len() + ctx.batch_size).min(emb.nrows());
    let clusters = spherical_kmeans(emb, k, rng.random())?;
    let covered: HashSet<usize> = ctx.labeled_idx.iter().map(|&i| clusters.labels[i]).collect();
    let in_pool: HashSet<usize> = ctx.pool_idx.iter().copied().collect();
    let members = clusters.members();

    let mut uncovered: Vec<usize> = (0..k).filter(|c| !covered.contains(c)).collect();
    uncovered.sort_by_key(|&c| (std::cmp::Reverse(clusters.sizes[c]), c));
    uncovered.truncate(ctx.batch_size);

    // per cluster: pool members ordered by decreasing typicality
    let mut queues: Vec<Vec<usize>> = uncovered
        .iter()
        .map(|&c| {
            let pool_members: Vec<usize> = members[c].iter().copied().filter(|i| in_pool.contains(i)).collect();
            let t = typicality(emb, &pool_members);
            let mut order: Vec<usize> = (0..pool_members.len()).collect();
            order.sort_by(|&a, &b| t[b].total_cmp(&t[a]).then(pool_members[a].cmp(&pool_members[b])));
            order.into_iter().rev().map(|o| pool_members[o]).collect()
        })
        .collect();

    let mut chosen = Vec::with_capacity(ctx.batch_size);
    while chosen.len() < ctx.batch_size && queues.iter().any(|q| !q.is_empty()) {
        for q in queues.iter_mut() {
            if chosen.len() == ctx.batch_size {
                break;
            }
            if let Some(i) = q.pop() {
                chosen.push(i);
            }
        }
    }
    if chosen.len() < ctx.batch_size {
        let taken: HashSet<usize> = chosen.iter().copied().collect();
        let mut rest: Vec<usize> = ctx.pool_idx.iter().copied().filter(|i| !taken.contains(i)).collect();
        rest.sort_unstable();
        chosen.extend(rest.into_iter().take(ctx.batch_size - chosen.len()));
    }
    Ok(SelectionResult { chosen, scores: None })
}
