//! Sampling-statistics oracles for the mixture sources and a brute-force
//! pooling oracle for image downsampling.

mod common;

use asgan::data::{
    parse_idx, rescale_and_downsample, sample_mixture, DataSource, MixtureKind, MixtureSpec,
    RawIdx,
};
use common::rng;
use rand::Rng;

#[test]
fn ring_mode_occupancy_uniform_within_three_sigma_binomial() {
    let spec = MixtureSpec::ring8(11);
    let n = 100_000;
    let pts = sample_mixture(&spec, n, 17).unwrap();
    let centers = spec.mode_centers();
    let mut counts = vec![0usize; centers.len()];
    for p in pts.chunks_exact(2) {
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for (k, c) in centers.iter().enumerate() {
            let d = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
            if d < best {
                best = d;
                arg = k;
            }
        }
        counts[arg] += 1;
    }
    let p = 1.0 / centers.len() as f64;
    let expect = n as f64 * p;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    for (k, &c) in counts.iter().enumerate() {
        assert!(
            (c as f64 - expect).abs() <= 3.0 * sigma,
            "mode {k}: {c} vs {expect} ± {}",
            3.0 * sigma
        );
    }
}

#[test]
fn swiss_roll_points_cluster_on_centers() {
    let spec = MixtureSpec {
        kind: MixtureKind::SwissRoll,
        n_modes: 12,
        extent: 0.9,
        sigma: 1e-8,
        seed: 3,
    };
    let pts = sample_mixture(&spec, 300, 5).unwrap();
    let centers = spec.mode_centers();
    assert_eq!(centers.len(), 12);
    for p in pts.chunks_exact(2) {
        let near = centers
            .iter()
            .map(|c| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(near < 1e-6);
    }
    // All centers within the tanh-reachable box.
    for c in centers {
        assert!(c[0].abs() <= 0.9 && c[1].abs() <= 0.9);
    }
}

#[test]
fn block_mean_pooling_matches_brute_force_oracle() {
    let mut r = rng(83);
    let raw = RawIdx {
        n: 3,
        rows: 28,
        cols: 28,
        pixels: (0..3 * 28 * 28).map(|_| r.random_range(0..=255) as u8).collect(),
    };
    let set = rescale_and_downsample(&raw, 14, 14).unwrap();
    // Brute force: mean each 2×2 block, then rescale.
    for img in 0..3 {
        for tr in 0..14 {
            for tc in 0..14 {
                let mut acc = 0.0;
                for dr in 0..2 {
                    for dc in 0..2 {
                        let row = tr * 2 + dr;
                        let col = tc * 2 + dc;
                        acc += raw.pixels[img * 784 + row * 28 + col] as f64;
                    }
                }
                let expect = 2.0 * (acc / 4.0) / 255.0 - 1.0;
                let got = set.pixels[img * 196 + tr * 14 + tc];
                assert!((got - expect).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn idx_error_paths_carry_offsets() {
    // Header cut off mid-dims.
    let mut buf = Vec::new();
    buf.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    buf.extend_from_slice(&1u32.to_be_bytes());
    let err = parse_idx(&buf).unwrap_err().to_string();
    assert!(err.contains("byte 8"), "{err}");
}

#[test]
fn mixture_batches_respect_declared_geometry() {
    let spec = MixtureSpec::ring8(19);
    let batch = spec.sample_batch(0, 2000);
    let radius_mean = batch
        .chunks_exact(2)
        .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
        .sum::<f64>()
        / 2000.0;
    assert!(
        (radius_mean - spec.extent).abs() < 0.01,
        "mean radius {radius_mean} vs {}",
        spec.extent
    );
    assert!(spec.per_dim_std() > 0.5 && spec.per_dim_std() < 0.6);
}
