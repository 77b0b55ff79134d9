use ndarray::{array, concatenate, Array2, Axis};
use rand::Rng;
use tabal::cluster::{agglomerative_avg, cosine_distance, kmeans, knn, spherical_kmeans, DEFAULT_MAX_ITER};

use super::{close, err, Example};
use crate::fixtures::{random_matrix, rng};
use crate::Check;

pub const EXAMPLES: &[Example] = &[
    ("kmeans: k = rows gives singletons with zero inertia", kmeans_saturation),
    ("kmeans: two separated blobs, centers within 0.1 of blob means", kmeans_blobs),
    ("kmeans: k = 1 center is the global mean", kmeans_single),
    ("spherical_kmeans: duplicated row shows in cluster sizes", spherical_duplicate),
    ("spherical_kmeans: positive row scaling leaves assignments unchanged", spherical_scale),
    ("spherical_kmeans: antipodal bundles separate perfectly", spherical_antipodal),
    ("agglomerative_avg: {0, 1, 10} into two clusters", agglomerative_line),
    ("agglomerative_avg: n_clusters = rows gives singletons", agglomerative_singletons),
    ("agglomerative_avg: three tight triads recovered", agglomerative_triads),
    ("knn: exact duplicate is the nearest neighbour", knn_duplicate),
    ("knn: orthogonal basis ties break by index", knn_orthogonal),
    ("knn: random 50x8 matches exhaustive scan", knn_scan),
];

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

fn kmeans_saturation() -> Check {
    let x = random_matrix(7, 3, 1);
    let a = kmeans(x.view(), 7, 0, DEFAULT_MAX_ITER).map_err(err)?;
    ensure!(a.sizes.iter().all(|&s| s == 1), "{:?}", a.sizes);
    ensure!(a.objective_history.last().copied() == Some(0.0), "{:?}", a.objective_history);
    Ok(())
}

fn kmeans_blobs() -> Check {
    let mut r = rng(4);
    let truth: Vec<usize> = (0..200).map(|i| i % 2).collect();
    let x = Array2::from_shape_fn((200, 2), |(i, j)| {
        let c = if truth[i] == 0 { [-5.0, 0.0] } else { [5.0, 3.0] };
        c[j] + r.random_range(-0.5..0.5)
    });
    let a = kmeans(x.view(), 2, 1, DEFAULT_MAX_ITER).map_err(err)?;
    let centers = a.centers.ok_or("no centers")?;
    for c in 0..2 {
        let members: Vec<usize> = (0..200).filter(|&i| truth[i] == c).collect();
        let mean = x.select(Axis(0), &members).mean_axis(Axis(0)).unwrap();
        let best = (0..2)
            .map(|k| (&centers.row(k) - &mean).mapv(f64::abs).fold(0.0f64, |m, &v| m.max(v)))
            .fold(f64::INFINITY, f64::min);
        ensure!(best < 0.1, "blob {c}: nearest center off by {best}");
    }
    Ok(())
}

fn kmeans_single() -> Check {
    let x = random_matrix(30, 4, 2);
    let a = kmeans(x.view(), 1, 0, DEFAULT_MAX_ITER).map_err(err)?;
    let centers = a.centers.ok_or("no centers")?;
    let mean = x.mean_axis(Axis(0)).unwrap();
    for j in 0..4 {
        ensure!(close(centers[[0, j]], mean[j]), "dim {j}: {} vs {}", centers[[0, j]], mean[j]);
    }
    Ok(())
}

/// Points in three tight direction bundles.
fn bundles(seed: u64) -> (Array2<f64>, Vec<usize>) {
    let dirs = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut r = rng(seed);
    let truth: Vec<usize> = (0..30).map(|i| i % 3).collect();
    let x = Array2::from_shape_fn((30, 3), |(i, j)| dirs[truth[i]][j] * 2.0 + r.random_range(-0.05..0.05));
    (x, truth)
}

fn spherical_duplicate() -> Check {
    let (x, truth) = bundles(1);
    let base = spherical_kmeans(x.view(), 3, 0).map_err(err)?;
    ensure!(same_partition(&base.labels, &truth), "bundles not recovered");
    let xx = concatenate![Axis(0), x, x.slice(ndarray::s![4..5, ..])];
    let dup = spherical_kmeans(xx.view(), 3, 0).map_err(err)?;
    ensure!(dup.labels[30] == dup.labels[4], "duplicate assigned differently");
    ensure!(dup.sizes[dup.labels[4]] == base.sizes[base.labels[4]] + 1, "sizes {:?} vs {:?}", dup.sizes, base.sizes);
    Ok(())
}

fn spherical_scale() -> Check {
    let x = random_matrix(40, 5, 3);
    let a = spherical_kmeans(x.view(), 4, 9).map_err(err)?;
    let mut r = rng(8);
    let mut scaled = x.clone();
    for mut row in scaled.rows_mut() {
        let c = r.random_range(0.1..10.0);
        row.mapv_inplace(|v| v * c);
    }
    let b = spherical_kmeans(scaled.view(), 4, 9).map_err(err)?;
    ensure!(a.labels == b.labels, "assignments changed");
    Ok(())
}

fn spherical_antipodal() -> Check {
    let mut r = rng(5);
    let x = Array2::from_shape_fn((20, 3), |(i, j)| {
        let sign = if i < 10 { 1.0 } else { -1.0 };
        sign * [1.0, 1.0, 0.5][j] + r.random_range(-0.1..0.1)
    });
    let a = spherical_kmeans(x.view(), 2, 0).map_err(err)?;
    // brute-force check: the partition equals the bundle membership
    let truth: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
    ensure!(same_partition(&a.labels, &truth), "{:?}", a.labels);
    Ok(())
}

fn agglomerative_line() -> Check {
    let x = array![[0.0], [1.0], [10.0]];
    let a = agglomerative_avg(x.view(), 2).map_err(err)?;
    ensure!(same_partition(&a.labels, &[0, 0, 1]), "{:?}", a.labels);
    Ok(())
}

fn agglomerative_singletons() -> Check {
    let x = random_matrix(6, 2, 1);
    let a = agglomerative_avg(x.view(), 6).map_err(err)?;
    ensure!(a.sizes.iter().all(|&s| s == 1), "{:?}", a.sizes);
    Ok(())
}

/// All set partitions of `n` points into exactly `k` blocks, as label vectors.
fn partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; n];
    fn go(i: usize, used: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == n {
            if used == k {
                out.push(cur.clone());
            }
            return;
        }
        for l in 0..(used + 1).min(k) {
            cur[i] = l;
            go(i + 1, used.max(l + 1), n, k, cur, out);
        }
    }
    go(0, 0, n, k, &mut cur, &mut out);
    out
}

fn agglomerative_triads() -> Check {
    let centers: [[f64; 2]; 3] = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
    let offsets = [[0.0, 0.0], [0.3, 0.1], [-0.1, 0.3]];
    let x = Array2::from_shape_fn((9, 2), |(i, j)| centers[i % 3][j] + offsets[i / 3][j]);
    let dist = |i: usize, j: usize| (&x.row(i) - &x.row(j)).mapv(|v| v * v).sum().sqrt();
    // oracle: the partition into 3 blocks with the smallest worst within-block
    // average pairwise distance
    let score = |p: &[usize]| {
        (0..3)
            .map(|b| {
                let m: Vec<usize> = (0..9).filter(|&i| p[i] == b).collect();
                let pairs: Vec<f64> = m.iter().flat_map(|&i| m.iter().filter(move |&&j| j > i).map(move |&j| (i, j))).map(|(i, j)| dist(i, j)).collect();
                if pairs.is_empty() { 0.0 } else { pairs.iter().sum::<f64>() / pairs.len() as f64 }
            })
            .fold(0.0f64, f64::max)
    };
    let all = partitions(9, 3);
    ensure!(all.len() == 3025, "{} partitions of 9 into 3", all.len());
    let best = all.iter().min_by(|a, b| score(a).total_cmp(&score(b))).unwrap();
    ensure!(same_partition(best, &[0, 1, 2, 0, 1, 2, 0, 1, 2]), "oracle picked {best:?}");
    let a = agglomerative_avg(x.view(), 3).map_err(err)?;
    ensure!(same_partition(&a.labels, best), "{:?}", a.labels);
    Ok(())
}

fn knn_duplicate() -> Check {
    let x = array![[1.0, 2.0], [0.5, -1.0], [1.0, 2.0], [3.0, 0.1]];
    let nn = knn(x.view(), 0, 1).map_err(err)?;
    ensure!(nn == [2], "{nn:?}");
    Ok(())
}

fn knn_orthogonal() -> Check {
    let x = Array2::<f64>::eye(5);
    ensure!(close(cosine_distance(x.row(0), x.row(1)), 0.5), "distance");
    let nn = knn(x.view(), 2, 3).map_err(err)?;
    ensure!(nn == [0, 1, 3], "{nn:?}");
    Ok(())
}

fn knn_scan() -> Check {
    let x = random_matrix(50, 8, 17);
    let dist = |i: usize, j: usize| {
        let (a, b) = (x.row(i), x.row(j));
        let cos = a.dot(&b) / (a.dot(&a).sqrt() * b.dot(&b).sqrt());
        (1.0 - cos) / 2.0
    };
    for q in 0..50 {
        let mut others: Vec<usize> = (0..50).filter(|&j| j != q).collect();
        others.sort_by(|&a, &b| dist(q, a).total_cmp(&dist(q, b)).then(a.cmp(&b)));
        for k in [1, 5, 49] {
            let got = knn(x.view(), q, k).map_err(err)?;
            ensure!(got == others[..k], "query {q}, k {k}: {got:?} vs {:?}", &others[..k]);
        }
    }
    Ok(())
}
