use std::collections::HashSet;

use ndarray::{array, Array2};
use rand::Rng;
use tabal::strategies::{
    margin_density_scores, score_bald, score_entropy, score_lc, score_margin, score_maxent, score_qbc, select,
    select_cluster_margin, select_coreset, select_min_margin, select_power, select_power_with_noise, select_random,
    select_random_margin, select_typiclust, typicality, MarginDensityOrder, MemberInit, StrategyId, Trainer,
};

use super::{close, err, Example};
use crate::fixtures::{clusters_from_labels, entropy, matrix, random_matrix, random_probs, rng, singleton_clusters, Fixture};
use crate::Check;

pub const EXAMPLES: &[Example] = &[
    ("score_margin: [0.7, 0.2, 0.1] gives 0.5", margin_example),
    ("score_margin: uniform row gives 0", margin_uniform),
    ("score_margin: one-hot row gives 1", margin_one_hot),
    ("score_entropy: uniform over 4 gives ln 4", entropy_uniform),
    ("score_entropy: one-hot gives 0", entropy_one_hot),
    ("score_entropy: [0.5, 0.5] gives ln 2", entropy_half),
    ("score_lc: [0.7, 0.2, 0.1] gives 0.3", lc_example),
    ("score_lc: one-hot gives 0", lc_one_hot),
    ("score_lc: uniform over C gives 1 - 1/C", lc_uniform),
    ("select_random: B = |pool| returns the whole pool", random_whole_pool),
    ("select_random: fixed rng is reproducible", random_reproducible),
    ("select_random: index frequencies uniform within 3 sigma", random_frequencies),
    ("select_random_margin: B = 1 picks the lowest margin", random_margin_single),
    ("select_random_margin: stubbed rng gives a deterministic union", random_margin_deterministic),
    ("select_min_margin: K = 1 equals margin", min_margin_single),
    ("select_min_margin: identical committee equals margin", min_margin_identical),
    ("select_min_margin: K = 3 scores are element-wise min margins", min_margin_three),
    ("select_typiclust: isolated labeled points, one pick per blob", typiclust_blobs),
    ("select_typiclust: identical neighbours hit the epsilon cap", typiclust_epsilon),
    ("select_typiclust: 12-point fixture matches brute-force typicality", typiclust_brute_force),
    ("score_maxent: identical one-hot members give 0", maxent_identical),
    ("score_maxent: two disagreeing one-hot members give ln 2", maxent_disagree),
    ("score_maxent: random M = 5 stub matches the formula", maxent_random),
    ("score_bald: identical members give 0", bald_identical),
    ("score_bald: two disagreeing deterministic members give ln 2", bald_disagree),
    ("score_bald: random stub within [0, H] and matches the formula", bald_random),
    ("select_coreset: active {0}, candidates {3, 10}, B = 1 picks 10", coreset_one),
    ("select_coreset: B = 2 picks 10 then 3", coreset_two),
    ("select_coreset: 30 random points, B = 5 match greedy oracle", coreset_greedy),
    ("select_margin_density: equal densities rank by margin", md_equal_density),
    ("select_margin_density: equal margins rank by density", md_equal_margin),
    ("select_margin_density: 10-candidate products", md_products),
    ("select_cluster_margin: singleton clusters stay within the lowest margins", cm_singletons),
    ("select_cluster_margin: one giant cluster gives B distinct draws from it", cm_giant),
    ("select_cluster_margin: sizes {1, 1, 3} take both singletons first", cm_cycle),
    ("score_qbc: unanimous committee gives 0", qbc_unanimous),
    ("score_qbc: K = 25 with 13 modal votes gives 0.48", qbc_thirteen),
    ("score_qbc: three stubbed members match hand count", qbc_three),
    ("select_power: zero noise equals top-B", power_zero_noise),
    ("select_power: scores {1, e} select with ratio e", power_ratio),
    ("select_power: equal scores select uniformly", power_uniform),
    ("select: |pool| <= B returns the whole pool for every strategy", select_saturated),
    ("select: unknown strategy id is an error", select_unknown),
    ("select: margin and entropy agree on binary tasks", select_binary),
];

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn margin_example() -> Check {
    let s = score_margin(array![[0.7, 0.2, 0.1]].view()).map_err(err)?;
    ensure!(s[0] == 0.7 - 0.2 && (s[0] - 0.5).abs() < 1e-15, "{s:?}");
    Ok(())
}

fn margin_uniform() -> Check {
    let s = score_margin(array![[0.25, 0.25, 0.25, 0.25]].view()).map_err(err)?;
    ensure!(s[0] == 0.0, "{s:?}");
    Ok(())
}

fn margin_one_hot() -> Check {
    let s = score_margin(array![[0.0, 1.0, 0.0]].view()).map_err(err)?;
    ensure!(s[0] == 1.0, "{s:?}");
    Ok(())
}

fn entropy_uniform() -> Check {
    let s = score_entropy(array![[0.25, 0.25, 0.25, 0.25]].view());
    ensure!(close(s[0], 4f64.ln()), "{s:?}");
    Ok(())
}

fn entropy_one_hot() -> Check {
    let s = score_entropy(array![[0.0, 0.0, 1.0]].view());
    ensure!(s[0] == 0.0, "{s:?}");
    Ok(())
}

fn entropy_half() -> Check {
    let s = score_entropy(array![[0.5, 0.5]].view());
    ensure!(close(s[0], 2f64.ln()), "{s:?}");
    Ok(())
}

fn lc_example() -> Check {
    let s = score_lc(array![[0.7, 0.2, 0.1]].view());
    ensure!(s[0] == 1.0 - 0.7 && (s[0] - 0.3).abs() < 1e-15, "{s:?}");
    Ok(())
}

fn lc_one_hot() -> Check {
    let s = score_lc(array![[1.0, 0.0]].view());
    ensure!(s[0] == 0.0, "{s:?}");
    Ok(())
}

fn lc_uniform() -> Check {
    for c in 2..8 {
        let s = score_lc(Array2::from_elem((1, c), 1.0 / c as f64).view());
        ensure!(close(s[0], 1.0 - 1.0 / c as f64), "C={c}: {s:?}");
    }
    Ok(())
}

fn random_whole_pool() -> Check {
    let fix = Fixture::new(random_probs(6, 3, 1), vec![0, 2], vec![1, 3, 4, 5, 6, 7]);
    let sel = select_random(&fix.ctx(6), &mut rng(1));
    ensure!(sorted(sel.chosen.clone()) == fix.pool, "{:?}", sel.chosen);
    Ok(())
}

fn random_reproducible() -> Check {
    let fix = Fixture::pool_only(random_probs(30, 3, 1));
    let a = select_random(&fix.ctx(5), &mut rng(4)).chosen;
    let b = select_random(&fix.ctx(5), &mut rng(4)).chosen;
    ensure!(a == b, "{a:?} vs {b:?}");
    Ok(())
}

fn random_frequencies() -> Check {
    let fix = Fixture::pool_only(random_probs(10, 2, 1));
    let draws = 100_000;
    let mut counts = [0usize; 10];
    let mut r = rng(12);
    for _ in 0..draws {
        for c in select_random(&fix.ctx(3), &mut r).chosen {
            counts[c] += 1;
        }
    }
    // oracle: each index is included with probability B / |pool|
    let p = 0.3;
    let mean = draws as f64 * p;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    for (i, &c) in counts.iter().enumerate() {
        ensure!((c as f64 - mean).abs() <= 3.0 * sigma, "index {i}: {c} vs {mean} ± {}", 3.0 * sigma);
    }
    Ok(())
}

fn random_margin_single() -> Check {
    let probs = matrix(&[&[0.9, 0.1], &[0.55, 0.45], &[0.7, 0.3]]);
    let fix = Fixture::pool_only(probs);
    let sel = select_random_margin(&fix.ctx(1), &mut rng(0)).map_err(err)?;
    ensure!(sel.chosen == [1], "{:?}", sel.chosen);
    let sel = select_random_margin(&Fixture::pool_only(random_probs(40, 3, 5)).ctx(10), &mut rng(3)).map_err(err)?;
    ensure!(sel.chosen.len() == 10 && sorted(sel.chosen.clone()).windows(2).all(|w| w[0] < w[1]), "{:?}", sel.chosen);
    Ok(())
}

fn random_margin_deterministic() -> Check {
    let fix = Fixture::pool_only(random_probs(40, 3, 5));
    let a = select_random_margin(&fix.ctx(10), &mut rng(8)).map_err(err)?;
    let b = select_random_margin(&fix.ctx(10), &mut rng(8)).map_err(err)?;
    ensure!(a == b, "{:?} vs {:?}", a.chosen, b.chosen);
    // the first half is the five lowest margins
    let margins = score_margin(fix.probs.view()).map_err(err)?;
    let mut order: Vec<usize> = (0..40).collect();
    order.sort_by(|&x, &y| margins[x].total_cmp(&margins[y]).then(x.cmp(&y)));
    ensure!(sorted(a.chosen[..5].to_vec()) == sorted(order[..5].to_vec()), "{:?}", a.chosen);
    Ok(())
}

/// Returns fixed pool probabilities for each member index.
struct Stub(Vec<Array2<f64>>);

impl Trainer for Stub {
    fn train_member(&self, _rows: &[usize], _labels: &[usize], member: usize, _init: MemberInit) -> tabal::Result<Array2<f64>> {
        Ok(self.0[member % self.0.len()].clone())
    }
}

fn committee_fixture(probs: Array2<f64>, members: Vec<Array2<f64>>, k: usize) -> Fixture {
    let n = probs.nrows();
    let mut fix = Fixture::new(probs, vec![n, n + 1, n + 2, n + 3], (0..n).collect());
    fix.trainer = Some(Box::new(Stub(members)));
    fix.config.committee_size = k;
    fix
}

fn min_margin_single() -> Check {
    let probs = random_probs(20, 3, 2);
    let fix = committee_fixture(probs.clone(), vec![probs], 1);
    let mm = select_min_margin(&fix.ctx(4), &mut rng(0)).map_err(err)?;
    let m = select(StrategyId::Margin, &fix.ctx(4), &mut rng(0)).map_err(err)?;
    ensure!(mm.chosen == m.chosen, "{:?} vs {:?}", mm.chosen, m.chosen);
    Ok(())
}

fn min_margin_identical() -> Check {
    let probs = random_probs(20, 3, 3);
    let fix = committee_fixture(probs.clone(), vec![probs; 5], 5);
    let mm = select_min_margin(&fix.ctx(6), &mut rng(0)).map_err(err)?;
    let m = select(StrategyId::Margin, &fix.ctx(6), &mut rng(0)).map_err(err)?;
    ensure!(mm.chosen == m.chosen, "{:?} vs {:?}", mm.chosen, m.chosen);
    Ok(())
}

fn min_margin_three() -> Check {
    let members = vec![
        matrix(&[&[0.6, 0.3, 0.1], &[0.2, 0.5, 0.3], &[0.9, 0.05, 0.05], &[0.4, 0.4, 0.2]]),
        matrix(&[&[0.5, 0.4, 0.1], &[0.1, 0.8, 0.1], &[0.7, 0.2, 0.1], &[0.5, 0.3, 0.2]]),
        matrix(&[&[0.8, 0.1, 0.1], &[0.3, 0.3, 0.4], &[0.6, 0.35, 0.05], &[0.6, 0.2, 0.2]]),
    ];
    // hand-computed margins per member: [0.3, 0.2, 0.85, 0.0], [0.1, 0.7, 0.5, 0.2], [0.7, 0.1, 0.25, 0.4]
    let want = [0.1, 0.1, 0.25, 0.0];
    let fix = committee_fixture(members[0].clone(), members, 3);
    let sel = select_min_margin(&fix.ctx(2), &mut rng(0)).map_err(err)?;
    let scores = sel.scores.ok_or("no scores")?;
    for (i, (&s, &w)) in scores.iter().zip(&want).enumerate() {
        ensure!((s - w).abs() < 1e-12, "candidate {i}: {s} vs {w}");
    }
    ensure!(sel.chosen == [3, 0], "{:?}", sel.chosen);
    Ok(())
}

fn typiclust_blobs() -> Check {
    // three unlabeled blobs and two isolated labeled points, on distinct axes
    let mut r = rng(6);
    let mut rows = Vec::new();
    let mut blob_of = Vec::new();
    for b in 0..3 {
        for _ in 0..10 {
            let mut v = vec![0.0; 5];
            v[b] = 1.0;
            v.iter_mut().for_each(|x| *x += r.random_range(0.0..0.02));
            rows.push(v);
            blob_of.push(Some(b));
        }
    }
    for axis in [3, 4] {
        let mut v = vec![0.0; 5];
        v[axis] = 1.0;
        rows.push(v);
        blob_of.push(None);
    }
    let emb = Array2::from_shape_fn((32, 5), |(i, j)| rows[i][j]);
    let mut fix = Fixture::new(random_probs(30, 2, 1), vec![30, 31], (0..30).collect());
    fix.embeddings = Some(emb);
    let sel = select_typiclust(&fix.ctx(3), &mut rng(2)).map_err(err)?;
    let blobs: HashSet<usize> = sel.chosen.iter().filter_map(|&c| blob_of[c]).collect();
    ensure!(sel.chosen.len() == 3 && blobs.len() == 3, "{:?}", sel.chosen);
    Ok(())
}

fn typiclust_epsilon() -> Check {
    let emb = matrix(&[&[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.6, 0.8]]);
    let t = typicality(emb.view(), &[0, 1, 2]);
    ensure!(t.iter().all(|&v| v.is_finite() && v == 1.0 / 1e-12), "{t:?}");
    // k = 2: the duplicated pair averages {0, 0.5}, the outlier {0.5, 0.5}
    let mixed = typicality(emb.view(), &[0, 1, 3]);
    ensure!(close(mixed[0], 1.0 / (0.25 + 1e-12)) && mixed[0] == mixed[1], "{mixed:?}");
    ensure!(close(mixed[2], 1.0 / (0.5 + 1e-12)), "{mixed:?}");
    Ok(())
}

/// Typicality by definition: inverse mean scaled cosine distance to the k
/// nearest fellow members, k = min(N, max(20, |C|)) capped at |C| − 1.
fn typicality_oracle(emb: &Array2<f64>, members: &[usize]) -> Vec<f64> {
    let k = emb.nrows().min(members.len().max(20)).min(members.len() - 1);
    members
        .iter()
        .map(|&i| {
            let mut d: Vec<f64> = members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| {
                    let (a, b) = (emb.row(i), emb.row(j));
                    (1.0 - a.dot(&b) / (a.dot(&a).sqrt() * b.dot(&b).sqrt())) / 2.0
                })
                .collect();
            d.sort_by(f64::total_cmp);
            1.0 / (d[..k].iter().sum::<f64>() / k as f64 + 1e-12)
        })
        .collect()
}

fn typiclust_brute_force() -> Check {
    let mut r = rng(21);
    let dirs = [[1.0, 0.2, 0.0], [0.0, 1.0, 0.3], [0.2, 0.0, 1.0]];
    let emb = Array2::from_shape_fn((12, 3), |(i, j)| dirs[i % 3][j] + r.random_range(-0.3..0.3));
    for c in 0..3 {
        let members: Vec<usize> = (0..12).filter(|i| i % 3 == c).collect();
        let got = typicality(emb.view(), &members);
        let want = typicality_oracle(&emb, &members);
        for (g, w) in got.iter().zip(&want) {
            ensure!((g - w).abs() <= 1e-9 * w.abs(), "cluster {c}: {g} vs {w}");
        }
    }
    let mut fix = Fixture::new(random_probs(12, 2, 1), vec![], (0..12).collect());
    fix.embeddings = Some(emb.clone());
    let sel = select_typiclust(&fix.ctx(1), &mut rng(0)).map_err(err)?;
    ensure!(sel.chosen.len() == 1, "{:?}", sel.chosen);
    Ok(())
}

fn mc_stub(m: usize, n: usize, c: usize, seed: u64) -> Vec<Array2<f64>> {
    (0..m).map(|k| random_probs(n, c, seed + k as u64)).collect()
}

fn maxent_identical() -> Check {
    let one_hot = matrix(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0]]);
    let s = score_maxent(&vec![one_hot; 4]).map_err(err)?;
    ensure!(s.iter().all(|&v| v == 0.0), "{s:?}");
    Ok(())
}

fn maxent_disagree() -> Check {
    let s = score_maxent(&[matrix(&[&[1.0, 0.0, 0.0]]), matrix(&[&[0.0, 0.0, 1.0]])]).map_err(err)?;
    ensure!(close(s[0], 2f64.ln()), "{s:?}");
    Ok(())
}

fn mean_row(mc: &[Array2<f64>], i: usize) -> Vec<f64> {
    let c = mc[0].ncols();
    (0..c).map(|j| mc.iter().map(|m| m[[i, j]]).sum::<f64>() / mc.len() as f64).collect()
}

fn maxent_random() -> Check {
    let mc = mc_stub(5, 8, 4, 40);
    let s = score_maxent(&mc).map_err(err)?;
    for (i, &got) in s.iter().enumerate() {
        let want = entropy(&mean_row(&mc, i));
        ensure!(close(got, want), "row {i}: {got} vs {want}");
    }
    Ok(())
}

fn bald_identical() -> Check {
    let p = random_probs(5, 3, 2);
    let s = score_bald(&vec![p; 6]).map_err(err)?;
    ensure!(s.iter().all(|&v| v.abs() < 1e-12), "{s:?}");
    Ok(())
}

fn bald_disagree() -> Check {
    let s = score_bald(&[matrix(&[&[1.0, 0.0]]), matrix(&[&[0.0, 1.0]])]).map_err(err)?;
    ensure!(close(s[0], 2f64.ln()), "{s:?}");
    Ok(())
}

fn bald_random() -> Check {
    for seed in 0..10 {
        let mc = mc_stub(5, 8, 4, 100 + 10 * seed);
        let s = score_bald(&mc).map_err(err)?;
        for (i, &got) in s.iter().enumerate() {
            let h = entropy(&mean_row(&mc, i));
            let expected = mc.iter().map(|m| entropy(&m.row(i).to_vec())).sum::<f64>() / mc.len() as f64;
            let want = h - expected;
            ensure!((0.0..=h + 1e-12).contains(&got), "row {i}: {got} outside [0, {h}]");
            ensure!(close(got, want), "row {i}: {got} vs {want}");
        }
    }
    Ok(())
}

fn coreset_fixture() -> Fixture {
    let mut fix = Fixture::new(random_probs(2, 2, 1), vec![0], vec![1, 2]);
    fix.penultimate_labeled = Some(array![[0.0]]);
    fix.penultimate_pool = Some(array![[3.0], [10.0]]);
    fix
}

fn coreset_one() -> Check {
    let sel = select_coreset(&coreset_fixture().ctx(1)).map_err(err)?;
    ensure!(sel.chosen == [2], "{:?}", sel.chosen);
    Ok(())
}

fn coreset_two() -> Check {
    let sel = select_coreset(&coreset_fixture().ctx(2)).map_err(err)?;
    ensure!(sel.chosen == [2, 1], "{:?}", sel.chosen);
    Ok(())
}

fn coreset_greedy() -> Check {
    let points = random_matrix(30, 4, 55);
    let labeled: Vec<usize> = vec![0, 7, 19];
    let pool: Vec<usize> = (0..30).filter(|i| !labeled.contains(i)).collect();
    let mut fix = Fixture::new(random_probs(pool.len(), 2, 3), labeled.clone(), pool.clone());
    fix.penultimate_labeled = Some(points.select(ndarray::Axis(0), &labeled));
    fix.penultimate_pool = Some(points.select(ndarray::Axis(0), &pool));
    let got = select_coreset(&fix.ctx(5)).map_err(err)?.chosen;
    // oracle: full distance scan per iteration
    let dist = |a: usize, b: usize| (&points.row(a) - &points.row(b)).mapv(|v| v * v).sum().sqrt();
    let mut centers = labeled.clone();
    let mut want = Vec::new();
    for _ in 0..5 {
        let best = pool
            .iter()
            .filter(|p| !want.contains(*p))
            .map(|&p| (p, centers.iter().map(|&c| dist(p, c)).fold(f64::INFINITY, f64::min)))
            .fold(None, |best: Option<(usize, f64)>, (p, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((p, d)),
            })
            .unwrap()
            .0;
        want.push(best);
        centers.push(best);
    }
    ensure!(got == want, "{got:?} vs {want:?}");
    Ok(())
}

fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    order
}

fn md_equal_density() -> Check {
    let margins = [0.4, 0.1, 0.3, 0.2, 0.05, 0.6];
    let labels = [0, 1, 2, 0, 1, 2];
    let s = margin_density_scores(&margins, &labels, &[2, 2, 2], MarginDensityOrder::SmallestProduct);
    ensure!(ranking(&s) == ranking(&margins), "{s:?}");
    Ok(())
}

fn md_equal_margin() -> Check {
    let margins = [0.3; 6];
    let labels = [0, 1, 1, 2, 2, 2];
    let sizes = [1, 2, 3];
    let s = margin_density_scores(&margins, &labels, &sizes, MarginDensityOrder::SmallestProduct);
    let density: Vec<f64> = labels.iter().map(|&l| sizes[l] as f64).collect();
    ensure!(ranking(&s) == ranking(&density), "{s:?}");
    Ok(())
}

fn md_products() -> Check {
    let margins = [0.5, 0.1, 0.9, 0.3, 0.2, 0.7, 0.05, 0.4, 0.6, 0.8];
    let labels = [0, 0, 1, 1, 1, 2, 2, 2, 2, 0];
    let sizes = [3, 3, 4];
    // hand products: margin · size / 10
    let want = [0.15, 0.03, 0.27, 0.09, 0.06, 0.28, 0.02, 0.16, 0.24, 0.24];
    let s = margin_density_scores(&margins, &labels, &sizes, MarginDensityOrder::SmallestProduct);
    for (i, (&g, &w)) in s.iter().zip(&want).enumerate() {
        ensure!(close(g, w), "candidate {i}: {g} vs {w}");
    }
    Ok(())
}

fn cm_singletons() -> Check {
    let mut fix = Fixture::pool_only(random_probs(30, 3, 9));
    fix.clusters = Some(singleton_clusters(30));
    let margins = score_margin(fix.probs.view()).map_err(err)?;
    let allowed: HashSet<usize> = ranking(&margins)[..5].iter().copied().collect();
    let sel = select_cluster_margin(&fix.ctx(4), 1.25, &mut rng(1)).map_err(err)?;
    ensure!(sel.chosen.len() == 4 && sel.chosen.iter().all(|c| allowed.contains(c)), "{:?}", sel.chosen);
    Ok(())
}

fn cm_giant() -> Check {
    let mut fix = Fixture::pool_only(random_probs(40, 3, 10));
    fix.clusters = Some(clusters_from_labels(vec![0; 40]));
    let margins = score_margin(fix.probs.view()).map_err(err)?;
    let retrieved: HashSet<usize> = ranking(&margins)[..30].iter().copied().collect();
    let mut seen = HashSet::new();
    for seed in 0..20 {
        let sel = select_cluster_margin(&fix.ctx(3), 10.0, &mut rng(seed)).map_err(err)?;
        ensure!(sorted(sel.chosen.clone()).windows(2).all(|w| w[0] < w[1]) && sel.chosen.len() == 3, "{:?}", sel.chosen);
        ensure!(sel.chosen.iter().all(|c| retrieved.contains(c)), "{:?} outside retrieved set", sel.chosen);
        seen.extend(sel.chosen);
    }
    ensure!(seen.len() > 10, "draws are not spread: {} distinct", seen.len());
    Ok(())
}

fn cm_cycle() -> Check {
    let mut fix = Fixture::pool_only(random_probs(5, 3, 11));
    // points 3 and 1 are singletons, the rest share a cluster
    fix.clusters = Some(clusters_from_labels(vec![0, 1, 0, 2, 0]));
    for seed in 0..10 {
        let sel = select_cluster_margin(&fix.ctx(3), 10.0, &mut rng(seed)).map_err(err)?;
        // step-through: groups by (size, id) are [1], [3], [0, 2, 4]
        ensure!(sel.chosen[..2] == [1, 3], "{:?}", sel.chosen);
        ensure!([0, 2, 4].contains(&sel.chosen[2]), "{:?}", sel.chosen);
    }
    Ok(())
}

fn votes(rows: &[usize], classes: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows.len(), classes), |(i, j)| if rows[i] == j { 1.0 } else { 0.0 })
}

fn qbc_unanimous() -> Check {
    let s = score_qbc(&vec![votes(&[0, 2, 1], 3); 5]).map_err(err)?;
    ensure!(s.iter().all(|&v| v == 0.0), "{s:?}");
    Ok(())
}

fn qbc_thirteen() -> Check {
    let committee: Vec<Array2<f64>> = (0..25).map(|k| votes(&[usize::from(k >= 13)], 2)).collect();
    let s = score_qbc(&committee).map_err(err)?;
    ensure!(s[0] == 1.0 - 13.0 / 25.0 && (s[0] - 0.48).abs() < 1e-15, "{s:?}");
    Ok(())
}

fn qbc_three() -> Check {
    let committee = vec![
        matrix(&[&[0.6, 0.4, 0.0], &[0.1, 0.2, 0.7], &[0.3, 0.3, 0.4], &[0.5, 0.1, 0.4]]),
        matrix(&[&[0.7, 0.2, 0.1], &[0.6, 0.3, 0.1], &[0.1, 0.8, 0.1], &[0.2, 0.1, 0.7]]),
        matrix(&[&[0.9, 0.0, 0.1], &[0.2, 0.5, 0.3], &[0.2, 0.2, 0.6], &[0.1, 0.8, 0.1]]),
    ];
    // votes: [0,0,0], [2,0,1], [2,1,2], [0,2,1] → modal counts 3, 1, 2, 1
    let want = [0.0, 1.0 - 1.0 / 3.0, 1.0 - 2.0 / 3.0, 1.0 - 1.0 / 3.0];
    let s = score_qbc(&committee).map_err(err)?;
    for (i, (&g, &w)) in s.iter().zip(&want).enumerate() {
        ensure!(close(g, w), "candidate {i}: {g} vs {w}");
    }
    Ok(())
}

fn power_zero_noise() -> Check {
    let scores = [0.3, 0.9, 0.0, 0.5, 0.9, 0.1];
    let pool = [10, 11, 12, 13, 14, 15];
    let sel = select_power_with_noise(&scores, &[0.0; 6], &pool, 3).map_err(err)?;
    ensure!(sel.chosen == [11, 14, 13], "{:?}", sel.chosen);
    Ok(())
}

fn power_ratio() -> Check {
    let e = std::f64::consts::E;
    let draws = 100_000;
    let mut hits = 0usize;
    let mut r = rng(3);
    for _ in 0..draws {
        if select_power(&[1.0, e], &[0, 1], 1, 1.0, &mut r).map_err(err)?.chosen[0] == 1 {
            hits += 1;
        }
    }
    // oracle: categorical with P(1) = e / (1 + e)
    let p = e / (1.0 + e);
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    let dev = (hits as f64 - draws as f64 * p).abs();
    ensure!(dev <= 3.0 * sigma, "{hits} hits, expected {:.0} ± {:.0}", draws as f64 * p, 3.0 * sigma);
    let ratio = hits as f64 / (draws - hits) as f64;
    ensure!((ratio - e).abs() < 0.1, "ratio {ratio}");
    Ok(())
}

fn power_uniform() -> Check {
    let draws = 50_000;
    let mut counts = [0usize; 5];
    let mut r = rng(4);
    for _ in 0..draws {
        counts[select_power(&[0.4; 5], &[0, 1, 2, 3, 4], 1, 1.0, &mut r).map_err(err)?.chosen[0]] += 1;
    }
    let p = 0.2;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    for (i, &c) in counts.iter().enumerate() {
        ensure!((c as f64 - draws as f64 * p).abs() <= 3.0 * sigma, "index {i}: {c}");
    }
    Ok(())
}

fn select_saturated() -> Check {
    let fix = Fixture::new(random_probs(4, 3, 1), vec![0, 1], vec![2, 3, 5, 8]);
    for id in StrategyId::ALL {
        for batch in [4, 9] {
            let sel = select(id, &fix.ctx(batch), &mut rng(0)).map_err(err)?;
            ensure!(sorted(sel.chosen.clone()) == fix.pool, "{id}: {:?}", sel.chosen);
        }
    }
    Ok(())
}

fn select_unknown() -> Check {
    let e = "badge".parse::<StrategyId>().err().ok_or("badge parsed")?.to_string();
    for id in StrategyId::ALL {
        ensure!(e.contains(id.as_str()), "error does not list {id}: {e}");
    }
    Ok(())
}

fn select_binary() -> Check {
    for seed in 0..20 {
        let fix = Fixture::pool_only(random_probs(25, 2, 300 + seed));
        let m = sorted(select(StrategyId::Margin, &fix.ctx(6), &mut rng(0)).map_err(err)?.chosen);
        let e = sorted(select(StrategyId::Entropy, &fix.ctx(6), &mut rng(0)).map_err(err)?.chosen);
        ensure!(m == e, "seed {seed}: {m:?} vs {e:?}");
    }
    Ok(())
}
