use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Dataset;

/// Two isotropic unit-variance Gaussian classes in `dims` dimensions whose
/// means sit at `±separation / 2` along the first `informative` axes
/// (split evenly). Labels are balanced Bernoulli draws.
pub fn two_gaussians(n: usize, dims: usize, informative: usize, separation: f64, seed: u64) -> Dataset {
    assert!(informative >= 1 && informative <= dims);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = separation / 2.0 / (informative as f64).sqrt();
    let mut x = Array2::<f64>::zeros((n, dims));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let class = rng.random_range(0..2usize);
        let sign = if class == 1 { 1.0 } else { -1.0 };
        for j in 0..dims {
            let noise: f64 = rng.sample(StandardNormal);
            x[[i, j]] = noise + if j < informative { sign * shift } else { 0.0 };
        }
        y.push(class);
    }
    Dataset {
        id: format!("two_gaussians_n{n}_d{dims}"),
        x,
        y,
        n_classes: 2,
        feature_names: (0..dims).map(|j| format!("x{j}")).collect(),
        feature_groups: (0..dims).map(|j| j..j + 1).collect(),
        class_names: vec!["0".into(), "1".into()],
    }
}

/// Two Gaussian classes sharing a non-isotropic covariance: means at
/// `±separation / 2` on axis 0, and axis 0 also carries `coupling` times the
/// noise of axis 1. The Bayes boundary depends on both axes, so on raw axis 0
/// the classes overlap heavily while the Bayes accuracy stays at
/// `Φ(separation / 2)`.
pub fn correlated_two_gaussians(n: usize, dims: usize, separation: f64, coupling: f64, seed: u64) -> Dataset {
    assert!(dims >= 2);
    let mut ds = two_gaussians(n, dims, 1, separation, seed);
    for mut row in ds.x.rows_mut() {
        row[0] += coupling * row[1];
    }
    ds.id = format!("correlated_gaussians_n{n}_d{dims}");
    ds
}
