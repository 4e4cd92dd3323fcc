//! Desk-scale evaluation: distributional distance (2-D Fréchet, MMD²), mode
//! coverage on explicit mixtures, discriminator input-gradient statistics,
//! and standard/robust accuracy under an FGSM attack.
//!
//! All functions are pure evaluations over immutable snapshots and safe to
//! call from concurrent experiment runners.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversarial::craft_fgsm;
use crate::data::MixtureSpec;
use crate::nn::{forward, forward_inference, NetworkSpec, NnError, ParamSet};
use crate::tensor::{sigmoid, Tape};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("need at least {need} points per set, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("point set length {len} is not a multiple of dim {dim}")]
    RaggedPoints { len: usize, dim: usize },
    #[error("empty point set")]
    Empty,
    #[error("network evaluation failed: {0}")]
    Net(#[from] NnError),
    #[error("attack crafting failed: {0}")]
    Craft(#[from] crate::adversarial::AdvError),
}

/// Per-checkpoint scalar bundle. Wall-clock fields live in
/// [`TimingRow`](crate::engine::TimingRow), not here, so metrics rows stay
/// byte-reproducible across reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub iter: u64,
    pub v_m: f64,
    pub d_loss: f64,
    pub g_loss: f64,
    pub mean_d_real: f64,
    pub mean_d_adv: f64,
    pub grad_l1_mean: f64,
    pub mode_coverage: Option<usize>,
    pub hq_fraction: Option<f64>,
    pub mmd2: f64,
    pub frechet2d: f64,
    pub adv_accuracy: f64,
    pub std_accuracy: f64,
    pub std_accuracy_real: f64,
}

impl MetricsRecord {
    /// Range checks on everything that has a closed range.
    pub fn validate(&self) -> Result<(), String> {
        let prob = |name: &str, v: f64| -> Result<(), String> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(format!("{name} = {v} outside [0,1]"))
            }
        };
        prob("mean_d_real", self.mean_d_real)?;
        prob("mean_d_adv", self.mean_d_adv)?;
        prob("adv_accuracy", self.adv_accuracy)?;
        prob("std_accuracy", self.std_accuracy)?;
        prob("std_accuracy_real", self.std_accuracy_real)?;
        if let Some(h) = self.hq_fraction {
            prob("hq_fraction", h)?;
        }
        if self.mmd2 < 0.0 {
            return Err(format!("mmd2 = {} negative", self.mmd2));
        }
        if self.frechet2d < 0.0 {
            return Err(format!("frechet2d = {} negative", self.frechet2d));
        }
        if self.grad_l1_mean < 0.0 {
            return Err(format!("grad_l1_mean = {} negative", self.grad_l1_mean));
        }
        Ok(())
    }
}

/// Version tag embedded as the first line of every metrics CSV.
pub const METRICS_CSV_VERSION: &str = "asgan_metrics_v1";

pub fn metrics_csv_header() -> String {
    format!(
        "# {METRICS_CSV_VERSION}\niter,v_m,d_loss,g_loss,mean_d_real,mean_d_adv,grad_l1_mean,\
mode_coverage,hq_fraction,mmd2,frechet2d,adv_accuracy,std_accuracy,std_accuracy_real\n"
    )
}

fn opt_cell<T: std::fmt::Display>(v: &Option<T>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => String::new(),
    }
}

pub fn metrics_csv_row(r: &MetricsRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        r.iter,
        r.v_m,
        r.d_loss,
        r.g_loss,
        r.mean_d_real,
        r.mean_d_adv,
        r.grad_l1_mean,
        opt_cell(&r.mode_coverage),
        opt_cell(&r.hq_fraction),
        r.mmd2,
        r.frechet2d,
        r.adv_accuracy,
        r.std_accuracy,
        r.std_accuracy_real
    )
}

fn check_points(points: &[f64], dim: usize, min_n: usize) -> Result<usize, MetricsError> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(MetricsError::RaggedPoints {
            len: points.len(),
            dim,
        });
    }
    let n = points.len() / dim;
    if n < min_n {
        return Err(MetricsError::TooFewPoints { need: min_n, got: n });
    }
    Ok(n)
}

fn mean_and_cov2(points: &[f64]) -> ([f64; 2], [f64; 4]) {
    let n = (points.len() / 2) as f64;
    let mut mu = [0.0; 2];
    for p in points.chunks_exact(2) {
        mu[0] += p[0];
        mu[1] += p[1];
    }
    mu[0] /= n;
    mu[1] /= n;
    let mut cov = [0.0; 4];
    for p in points.chunks_exact(2) {
        let dx = p[0] - mu[0];
        let dy = p[1] - mu[1];
        cov[0] += dx * dx;
        cov[1] += dx * dy;
        cov[2] += dy * dx;
        cov[3] += dy * dy;
    }
    for c in cov.iter_mut() {
        *c /= n;
    }
    // Ridge keeps determinants positive for degenerate point sets.
    cov[0] += 1e-8;
    cov[3] += 1e-8;
    (mu, cov)
}

/// Squared Wasserstein-2 distance between Gaussian fits of two 2-D point
/// sets: ‖μ₁−μ₂‖² + Tr(Σ₁+Σ₂−2(Σ₁Σ₂)^½), using the 2×2 closed form
/// Tr√M = √(tr M + 2√det M).
pub fn frechet_gaussian_2d(real: &[f64], fake: &[f64]) -> Result<f64, MetricsError> {
    check_points(real, 2, 3)?;
    check_points(fake, 2, 3)?;
    let (mu1, c1) = mean_and_cov2(real);
    let (mu2, c2) = mean_and_cov2(fake);
    let dmu = (mu1[0] - mu2[0]).powi(2) + (mu1[1] - mu2[1]).powi(2);
    let tr1 = c1[0] + c1[3];
    let tr2 = c2[0] + c2[3];
    // Product P = Σ₁Σ₂ enters only through its trace and determinant.
    let tr_p = c1[0] * c2[0] + c1[1] * c2[2] + c1[2] * c2[1] + c1[3] * c2[3];
    let det1 = c1[0] * c1[3] - c1[1] * c1[2];
    let det2 = c2[0] * c2[3] - c2[1] * c2[2];
    let det_p = (det1 * det2).max(0.0);
    let tr_sqrt = (tr_p + 2.0 * det_p.sqrt()).max(0.0).sqrt();
    Ok((dmu + tr1 + tr2 - 2.0 * tr_sqrt).max(0.0))
}

/// Diagonal-covariance Fréchet distance for flattened images, where the
/// full covariance is rank-deficient at desk-scale sample counts. A
/// directional analogue, not comparable across dimensionalities.
pub fn frechet_diag(real: &[f64], fake: &[f64], dim: usize) -> Result<f64, MetricsError> {
    let n1 = check_points(real, dim, 3)?;
    let n2 = check_points(fake, dim, 3)?;
    let mut total = 0.0;
    for d in 0..dim {
        let m1: f64 = real.iter().skip(d).step_by(dim).sum::<f64>() / n1 as f64;
        let m2: f64 = fake.iter().skip(d).step_by(dim).sum::<f64>() / n2 as f64;
        let v1: f64 = real
            .iter()
            .skip(d)
            .step_by(dim)
            .map(|&x| (x - m1).powi(2))
            .sum::<f64>()
            / n1 as f64
            + 1e-8;
        let v2: f64 = fake
            .iter()
            .skip(d)
            .step_by(dim)
            .map(|&x| (x - m2).powi(2))
            .sum::<f64>()
            / n2 as f64
            + 1e-8;
        total += (m1 - m2).powi(2) + v1 + v2 - 2.0 * (v1 * v2).sqrt();
    }
    Ok(total.max(0.0))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y).powi(2)).sum()
}

/// Median pairwise Euclidean distance over the pooled sample, lower median
/// on ties. Returns a floor value when every point coincides.
pub fn median_bandwidth(x: &[f64], y: &[f64], dim: usize) -> Result<f64, MetricsError> {
    check_points(x, dim, 1)?;
    check_points(y, dim, 1)?;
    let mut pooled: Vec<&[f64]> = x.chunks_exact(dim).collect();
    pooled.extend(y.chunks_exact(dim));
    let n = pooled.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(sq_dist(pooled[i], pooled[j]).sqrt());
        }
    }
    if dists.is_empty() {
        return Ok(1.0);
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(dists[(dists.len() - 1) / 2].max(1e-12))
}

/// Biased V-statistic estimator of squared MMD with an RBF kernel
/// k(a,b) = exp(−‖a−b‖²/(2h²)), h from the median heuristic. Clamped at 0.
pub fn mmd2_rbf(x: &[f64], y: &[f64], dim: usize) -> Result<f64, MetricsError> {
    let h = median_bandwidth(x, y, dim)?;
    mmd2_rbf_with_bandwidth(x, y, dim, h)
}

pub fn mmd2_rbf_with_bandwidth(
    x: &[f64],
    y: &[f64],
    dim: usize,
    bandwidth: f64,
) -> Result<f64, MetricsError> {
    let n = check_points(x, dim, 1)?;
    let m = check_points(y, dim, 1)?;
    let denom = 2.0 * bandwidth * bandwidth;
    let k = |a: &[f64], b: &[f64]| (-sq_dist(a, b) / denom).exp();
    let xs: Vec<&[f64]> = x.chunks_exact(dim).collect();
    let ys: Vec<&[f64]> = y.chunks_exact(dim).collect();
    let mut kxx = 0.0;
    for a in &xs {
        for b in &xs {
            kxx += k(a, b);
        }
    }
    let mut kyy = 0.0;
    for a in &ys {
        for b in &ys {
            kyy += k(a, b);
        }
    }
    let mut kxy = 0.0;
    for a in &xs {
        for b in &ys {
            kxy += k(a, b);
        }
    }
    let v = kxx / (n * n) as f64 + kyy / (m * m) as f64 - 2.0 * kxy / (n * m) as f64;
    Ok(v.max(0.0))
}

/// Mode occupancy of generated samples against an explicit mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMetrics {
    /// Modes owning at least max(1, 0.1·n/n_modes) high-quality samples.
    pub coverage: usize,
    /// Fraction of samples within 3σ (Euclidean) of their nearest center.
    pub hq_fraction: f64,
}

pub fn mode_metrics(fake: &[f64], spec: &MixtureSpec) -> Result<ModeMetrics, MetricsError> {
    let n = check_points(fake, 2, 1)?;
    let centers = spec.mode_centers();
    let threshold = 3.0 * spec.sigma;
    let mut per_mode = vec![0usize; centers.len()];
    let mut hq = 0usize;
    for p in fake.chunks_exact(2) {
        let mut best = f64::INFINITY;
        let mut best_mode = 0;
        for (k, c) in centers.iter().enumerate() {
            let d = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
            if d < best {
                best = d;
                best_mode = k;
            }
        }
        if best <= threshold {
            hq += 1;
            per_mode[best_mode] += 1;
        }
    }
    let own_threshold = (0.1 * n as f64 / centers.len() as f64).max(1.0);
    let coverage = per_mode
        .iter()
        .filter(|&&c| c as f64 >= own_threshold)
        .count();
    Ok(ModeMetrics {
        coverage,
        hq_fraction: hq as f64 / n as f64,
    })
}

/// Fixed-bin histogram of gradient components, range clipped to ±3
/// empirical standard deviations around the mean; clipped values land in
/// the edge bins, so total mass equals the component count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradHistogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

pub const GRAD_HIST_BINS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct GradStats {
    /// Mean over the batch of per-sample ‖∇ₓ log D(x)‖₁.
    pub l1_mean: f64,
    pub histogram: GradHistogram,
}

/// Per-sample input gradients of log D, via one traced forward/backward of
/// sum(log σ(logits)); rows do not interact, so the batch backward yields
/// each sample's own gradient.
pub fn input_log_d_gradients(
    d_spec: &NetworkSpec,
    d_params: &ParamSet,
    x: &[f64],
) -> Result<Vec<f64>, MetricsError> {
    let dim = d_spec.input_dim();
    let n = check_points(x, dim, 1)?;
    let mut tape = Tape::new();
    let xid = tape
        .leaf(x.to_vec(), vec![n, dim], true)
        .map_err(NnError::from)?;
    let (logits, _) = forward(&mut tape, d_spec, d_params, xid, false)?;
    let logd = tape.log_sigmoid(logits);
    let loss = tape.sum(logd);
    tape.backward(loss).map_err(NnError::from)?;
    Ok(tape.grad(xid).expect("input grad requested").to_vec())
}

pub fn grad_stats(
    d_spec: &NetworkSpec,
    d_params: &ParamSet,
    x: &[f64],
) -> Result<GradStats, MetricsError> {
    let dim = d_spec.input_dim();
    let n = x.len() / dim;
    let grads = input_log_d_gradients(d_spec, d_params, x)?;
    let l1_mean = grads
        .chunks_exact(dim)
        .map(|row| row.iter().map(|g| g.abs()).sum::<f64>())
        .sum::<f64>()
        / n as f64;

    let count = grads.len() as f64;
    let mean = grads.iter().sum::<f64>() / count;
    let std = (grads.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / count).sqrt();
    let half = (3.0 * std).max(1e-12);
    let (lo, hi) = (mean - half, mean + half);
    let mut counts = vec![0u64; GRAD_HIST_BINS];
    for &g in &grads {
        let clipped = g.clamp(lo, hi);
        let mut bin = ((clipped - lo) / (hi - lo) * GRAD_HIST_BINS as f64) as usize;
        if bin >= GRAD_HIST_BINS {
            bin = GRAD_HIST_BINS - 1;
        }
        counts[bin] += 1;
    }
    Ok(GradStats {
        l1_mean,
        histogram: GradHistogram { lo, hi, counts },
    })
}

/// Accuracy of the discriminator as a real/fake classifier, with ties at
/// the 0.5 threshold counted incorrect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustAccuracy {
    /// Pooled accuracy: real classified > 0.5 and fake < 0.5.
    pub std_acc: f64,
    /// Real-only standard accuracy.
    pub std_acc_real: f64,
    /// Real samples still classified real after an FGSM attack at ε.
    pub adv_acc: f64,
}

pub fn robust_accuracy(
    d_spec: &NetworkSpec,
    d_params: &ParamSet,
    x: &[f64],
    fake: &[f64],
    epsilon: f64,
) -> Result<RobustAccuracy, MetricsError> {
    let dim = d_spec.input_dim();
    let n_real = check_points(x, dim, 1)?;
    let n_fake = check_points(fake, dim, 1)?;
    let real_logits = forward_inference(d_spec, d_params, x, n_real);
    let fake_logits = forward_inference(d_spec, d_params, fake, n_fake);
    let real_ok = real_logits.iter().filter(|&&l| sigmoid(l) > 0.5).count();
    let fake_ok = fake_logits.iter().filter(|&&l| sigmoid(l) < 0.5).count();
    let std_acc = (real_ok + fake_ok) as f64 / (n_real + n_fake) as f64;
    let std_acc_real = real_ok as f64 / n_real as f64;

    // The attack direction only needs the sign of ∇ₓ of the real objective
    // term; per-sample log D gradients carry exactly that sign.
    let grads = input_log_d_gradients(d_spec, d_params, x)?;
    let x_hat = craft_fgsm(x, &grads, epsilon, None, None)?;
    let adv_logits = forward_inference(d_spec, d_params, &x_hat, n_real);
    let adv_ok = adv_logits.iter().filter(|&&l| sigmoid(l) > 0.5).count();
    Ok(RobustAccuracy {
        std_acc,
        std_acc_real,
        adv_acc: adv_ok as f64 / n_real as f64,
    })
}
