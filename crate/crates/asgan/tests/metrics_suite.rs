//! Independent oracles for the distribution metrics: an
//! eigendecomposition-based route for the 2-D Fréchet distance, a
//! permutation-test null for MMD², and closed-form gradients for the
//! discriminator input-gradient statistics.

mod common;

use asgan::metrics::{
    frechet_gaussian_2d, grad_stats, mmd2_rbf, mmd2_rbf_with_bandwidth, median_bandwidth,
    mode_metrics,
};
use asgan::data::MixtureSpec;
use asgan::nn::{LayerSpec, NetworkSpec, ParamSet, Role};
use asgan::tensor::sigmoid;
use common::{frechet2d_eigen_oracle, rng, uniform_vec};
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn frechet_matches_eigendecomposition_oracle() {
    let mut r = rng(61);
    for trial in 0..20 {
        // Random Gaussian-ish clouds with distinct anisotropies.
        let n = 60;
        let mut a = Vec::with_capacity(2 * n);
        let mut b = Vec::with_capacity(2 * n);
        let (sx, sy) = (r.random_range(0.2..2.0), r.random_range(0.2..2.0));
        let rot: f64 = r.random_range(0.0..std::f64::consts::PI);
        for _ in 0..n {
            let u: f64 = r.random_range(-1.0..1.0);
            let v: f64 = r.random_range(-1.0..1.0);
            a.push(sx * u * rot.cos() - sy * v * rot.sin() + 0.3);
            a.push(sx * u * rot.sin() + sy * v * rot.cos() - 0.1);
            let u: f64 = r.random_range(-1.0..1.0);
            let v: f64 = r.random_range(-1.0..1.0);
            b.push(u + 1.0);
            b.push(0.5 * v - 0.4);
        }
        let got = frechet_gaussian_2d(&a, &b).unwrap();
        let oracle = frechet2d_eigen_oracle(&a, &b);
        assert!(
            (got - oracle).abs() <= 1e-8,
            "trial {trial}: closed form {got} vs eigen oracle {oracle}"
        );
    }
}

#[test]
fn mmd_same_distribution_below_permutation_null_quantile() {
    // Two halves of one deterministic pseudo-Gaussian cloud: the observed
    // MMD² should sit below the 95th percentile of the relabeling null.
    let mut r = rng(67);
    let n = 500;
    let all: Vec<[f64; 2]> = (0..2 * n)
        .map(|_| {
            let sum6 = |r: &mut rand_chacha::ChaCha8Rng| -> f64 {
                (0..6).map(|_| r.random_range(-0.5..0.5)).sum()
            };
            [sum6(&mut r), sum6(&mut r)]
        })
        .collect();
    let flat = |pts: &[[f64; 2]]| -> Vec<f64> { pts.iter().flat_map(|p| [p[0], p[1]]).collect() };
    let x = flat(&all[..n]);
    let y = flat(&all[n..]);
    let bw = median_bandwidth(&x, &y, 2).unwrap();
    let observed = mmd2_rbf_with_bandwidth(&x, &y, 2, bw).unwrap();

    let mut null = Vec::with_capacity(200);
    let mut pool = all.clone();
    for _ in 0..200 {
        pool.shuffle(&mut r);
        let xs = flat(&pool[..n]);
        let ys = flat(&pool[n..]);
        null.push(mmd2_rbf_with_bandwidth(&xs, &ys, 2, bw).unwrap());
    }
    null.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q95 = null[(0.95 * 200.0) as usize];
    assert!(
        observed <= q95,
        "observed {observed} above permutation 95th percentile {q95}"
    );

    let consistency = mmd2_rbf(&x, &y, 2).unwrap();
    assert!((consistency - observed).abs() <= 1e-15);
}

#[test]
fn mmd_detects_distribution_shift_against_null() {
    let mut r = rng(71);
    let n = 300;
    let x: Vec<f64> = (0..2 * n).map(|_| r.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..2 * n).map(|_| r.random_range(-1.0..1.0) + 1.5).collect();
    let bw = median_bandwidth(&x, &y, 2).unwrap();
    let observed = mmd2_rbf_with_bandwidth(&x, &y, 2, bw).unwrap();
    // Null via relabeling
    let mut pool: Vec<[f64; 2]> = x
        .chunks_exact(2)
        .chain(y.chunks_exact(2))
        .map(|c| [c[0], c[1]])
        .collect();
    let mut exceed = 0;
    for _ in 0..100 {
        pool.shuffle(&mut r);
        let xs: Vec<f64> = pool[..n].iter().flat_map(|p| [p[0], p[1]]).collect();
        let ys: Vec<f64> = pool[n..].iter().flat_map(|p| [p[0], p[1]]).collect();
        if mmd2_rbf_with_bandwidth(&xs, &ys, 2, bw).unwrap() >= observed {
            exceed += 1;
        }
    }
    assert_eq!(exceed, 0, "shifted distribution not separable from null");
}

fn linear_d(w: &[f64]) -> (NetworkSpec, ParamSet) {
    let spec = NetworkSpec {
        layers: vec![LayerSpec {
            in_dim: w.len(),
            out_dim: 1,
            activation: None,
        }],
        role: Role::Discriminator,
    };
    let mut params = ParamSet::zeros(&spec);
    params.layers[0].weight.copy_from_slice(w);
    (spec, params)
}

#[test]
fn grad_stats_matches_closed_form_for_linear_discriminator() {
    // ∇ₓ log D(x) = (1 − σ(w·x))·w for a single linear-logit layer.
    let w = [0.8, -1.3];
    let (spec, params) = linear_d(&w);
    let mut r = rng(73);
    let x = uniform_vec(&mut r, 20, -1.0, 1.0);
    let stats = grad_stats(&spec, &params, &x).unwrap();
    let l1 = w[0].abs() + w[1].abs();
    let expected: f64 = x
        .chunks_exact(2)
        .map(|row| {
            let logit = row[0] * w[0] + row[1] * w[1];
            (1.0 - sigmoid(logit)) * l1
        })
        .sum::<f64>()
        / 10.0;
    assert!(
        (stats.l1_mean - expected).abs() <= 1e-12,
        "{} vs {expected}",
        stats.l1_mean
    );
    let mass: u64 = stats.histogram.counts.iter().sum();
    assert_eq!(mass, 20);
}

#[test]
fn mode_metrics_ownership_threshold() {
    // Coverage requires max(1, 0.1·n/n_modes) high-quality samples per mode.
    let spec = MixtureSpec::ring8(0);
    let centers = spec.mode_centers();
    // 80 samples: threshold per mode = max(1, 1.0) = 1; a single sample at a
    // center claims the mode.
    let mut fake: Vec<f64> = Vec::new();
    for _ in 0..79 {
        fake.push(centers[0][0]);
        fake.push(centers[0][1]);
    }
    fake.push(centers[1][0]);
    fake.push(centers[1][1]);
    let m = mode_metrics(&fake, &spec).unwrap();
    assert_eq!(m.coverage, 2);

    // 800 samples: threshold = 10; nine samples at a second mode miss it.
    let mut fake: Vec<f64> = Vec::new();
    for _ in 0..791 {
        fake.push(centers[0][0]);
        fake.push(centers[0][1]);
    }
    for _ in 0..9 {
        fake.push(centers[1][0]);
        fake.push(centers[1][1]);
    }
    let m = mode_metrics(&fake, &spec).unwrap();
    assert_eq!(m.coverage, 1);
}
