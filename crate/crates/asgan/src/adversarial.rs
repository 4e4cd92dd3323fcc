//! Crafting perturbed samples for the discriminator: FGSM, PGD, a
//! Gaussian-noise control with the same L∞ budget, ε warmup scheduling, and
//! domain clipping.
//!
//! Every crafting function enforces ‖x̂ − x‖_∞ ≤ ε exactly (not
//! approximately), returns x bitwise when ε = 0, and keeps outputs within
//! the configured domain box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::sign;

#[derive(Debug, Error)]
pub enum AdvError {
    #[error("shape mismatch: x has {x_len} values, gradient has {g_len}")]
    ShapeMismatch { x_len: usize, g_len: usize },
    #[error("pgd requires steps >= 1, got {0}")]
    BadSteps(usize),
    #[error("invalid adversarial config: {0}")]
    BadConfig(String),
    #[error("gradient evaluation failed: {0}")]
    Evaluator(String),
}

/// Perturbation crafting method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvMethod {
    /// Vanilla GAN: no extra discriminator update at all.
    None,
    /// One signed-gradient step from the cached clean-pass gradient.
    Fgsm,
    /// Iterated signed steps with per-step projection onto the ε-ball.
    Pgd,
    /// Control: same L∞ budget, direction from the sign of Gaussian noise.
    Gaussian,
    /// Ablation control: second clean update on the same batch, no crafting.
    DoubleUpdate,
}

/// Lp ball that constrains perturbations (∞ is the crafting default; 2
/// appears in the closed-form theory checks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormOrder {
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "inf")]
    LInf,
}

impl NormOrder {
    /// Dual exponent q = p/(p−1): 2 ↔ 2, ∞ ↔ 1.
    pub fn dual_name(self) -> &'static str {
        match self {
            NormOrder::L2 => "2",
            NormOrder::LInf => "1",
        }
    }
}

/// Full crafting configuration for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvConfig {
    pub method: AdvMethod,
    /// Perturbation budget in the units of the data as fed to D.
    pub epsilon: f64,
    pub norm_order: NormOrder,
    pub pgd_steps: usize,
    /// Per-iterate step size; `None` derives 2ε/steps so the ball is
    /// traversable within the configured number of steps.
    pub pgd_step_size: Option<f64>,
    pub pgd_random_init: bool,
    /// Iterations with the perturbation forced to zero.
    pub warmup_iters: u64,
    pub clip_lo: Option<f64>,
    pub clip_hi: Option<f64>,
    /// Also craft FGSM samples of the fake batch and take one extra
    /// discriminator step on them.
    pub adv_on_fake: bool,
}

impl Default for AdvConfig {
    fn default() -> Self {
        AdvConfig {
            method: AdvMethod::Fgsm,
            epsilon: 0.0,
            norm_order: NormOrder::LInf,
            pgd_steps: 4,
            pgd_step_size: None,
            pgd_random_init: true,
            warmup_iters: 0,
            clip_lo: None,
            clip_hi: None,
            adv_on_fake: false,
        }
    }
}

impl AdvConfig {
    pub fn none() -> Self {
        AdvConfig {
            method: AdvMethod::None,
            ..Default::default()
        }
    }

    pub fn fgsm(epsilon: f64) -> Self {
        AdvConfig {
            method: AdvMethod::Fgsm,
            epsilon,
            ..Default::default()
        }
    }

    pub fn effective_pgd_step_size(&self) -> f64 {
        self.pgd_step_size
            .unwrap_or(2.0 * self.epsilon / self.pgd_steps.max(1) as f64)
    }

    pub fn validate(&self, total_iters: u64) -> Result<(), AdvError> {
        if self.epsilon < 0.0 || !self.epsilon.is_finite() {
            return Err(AdvError::BadConfig(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        if self.method == AdvMethod::Pgd {
            if self.pgd_steps < 1 {
                return Err(AdvError::BadSteps(self.pgd_steps));
            }
            if let Some(ss) = self.pgd_step_size {
                if ss <= 0.0 {
                    return Err(AdvError::BadConfig(format!(
                        "pgd_step_size must be > 0, got {ss}"
                    )));
                }
                if self.epsilon > 0.0 && ss > 2.0 * self.epsilon {
                    return Err(AdvError::BadConfig(format!(
                        "pgd_step_size {ss} exceeds 2*epsilon = {}; projection makes larger steps wasteful",
                        2.0 * self.epsilon
                    )));
                }
            }
        }
        if self.warmup_iters > total_iters {
            return Err(AdvError::BadConfig(format!(
                "warmup_iters {} exceeds total iterations {total_iters}",
                self.warmup_iters
            )));
        }
        if let (Some(lo), Some(hi)) = (self.clip_lo, self.clip_hi) {
            if lo >= hi {
                return Err(AdvError::BadConfig(format!(
                    "clip bounds inverted: [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Effective perturbation at an iteration: zero during warmup, the
/// configured ε afterwards.
pub fn epsilon_at(iter: u64, config: &AdvConfig) -> f64 {
    if iter < config.warmup_iters {
        0.0
    } else {
        config.epsilon
    }
}

fn clip_value(v: f64, lo: Option<f64>, hi: Option<f64>) -> f64 {
    let v = match hi {
        Some(h) => v.min(h),
        None => v,
    };
    match lo {
        Some(l) => v.max(l),
        None => v,
    }
}

/// Next representable f64 from `v` toward `target`.
fn next_toward(v: f64, target: f64) -> f64 {
    if v.is_nan() || v == target {
        return v;
    }
    if v < target {
        if v == 0.0 {
            f64::from_bits(1)
        } else if v > 0.0 {
            f64::from_bits(v.to_bits() + 1)
        } else {
            f64::from_bits(v.to_bits() - 1)
        }
    } else if v == 0.0 {
        -f64::from_bits(1)
    } else if v > 0.0 {
        f64::from_bits(v.to_bits() - 1)
    } else {
        f64::from_bits(v.to_bits() + 1)
    }
}

/// Clip `raw` to the domain box, then project the *measured* difference to
/// `center` onto [−ε, ε] exactly: the returned value y satisfies
/// |y − center| ≤ ε as evaluated in f64, nudging by at most an ulp where
/// plain `center ± ε` would round outside the ball. Assumes `center` lies
/// inside the clip box, so moves toward it stay in the box.
fn constrained_step(
    center: f64,
    raw: f64,
    epsilon: f64,
    clip_lo: Option<f64>,
    clip_hi: Option<f64>,
) -> f64 {
    let clipped = clip_value(raw, clip_lo, clip_hi);
    let delta = (clipped - center).clamp(-epsilon, epsilon);
    let mut y = center + delta;
    while (y - center).abs() > epsilon {
        y = next_toward(y, center);
    }
    y
}

/// FGSM on a precomputed gradient: x̂ = clip(x − ε·sign(g)). Inputs are
/// expected to lie inside the clip box already; ε = 0 returns x bitwise
/// (including negative zeros).
pub fn craft_fgsm(
    x: &[f64],
    grad_x: &[f64],
    epsilon: f64,
    clip_lo: Option<f64>,
    clip_hi: Option<f64>,
) -> Result<Vec<f64>, AdvError> {
    if x.len() != grad_x.len() {
        return Err(AdvError::ShapeMismatch {
            x_len: x.len(),
            g_len: grad_x.len(),
        });
    }
    if epsilon == 0.0 {
        return Ok(x.to_vec());
    }
    Ok(x.iter()
        .zip(grad_x)
        .map(|(&xi, &gi)| constrained_step(xi, xi - epsilon * sign(gi), epsilon, clip_lo, clip_hi))
        .collect())
}

/// PGD: iterate signed steps on a gradient evaluator, projecting each
/// iterate onto the L∞ ε-ball around `x` after domain clipping. Starts at
/// `x` plus uniform noise in [−ε, ε] when `random_init` is set.
#[allow(clippy::too_many_arguments)]
pub fn craft_pgd<F>(
    x: &[f64],
    mut grad_at: F,
    epsilon: f64,
    steps: usize,
    step_size: f64,
    random_init: bool,
    seed: u64,
    clip_lo: Option<f64>,
    clip_hi: Option<f64>,
) -> Result<Vec<f64>, AdvError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, AdvError>,
{
    if steps < 1 {
        return Err(AdvError::BadSteps(steps));
    }
    if epsilon == 0.0 {
        return Ok(x.to_vec());
    }
    let mut cur: Vec<f64> = if random_init {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        x.iter()
            .map(|&xi| {
                let noise = rng.random_range(-epsilon..=epsilon);
                constrained_step(xi, xi + noise, epsilon, clip_lo, clip_hi)
            })
            .collect()
    } else {
        x.to_vec()
    };
    for _ in 0..steps {
        let g = grad_at(&cur)?;
        if g.len() != x.len() {
            return Err(AdvError::ShapeMismatch {
                x_len: x.len(),
                g_len: g.len(),
            });
        }
        for i in 0..cur.len() {
            let stepped = cur[i] - step_size * sign(g[i]);
            cur[i] = constrained_step(x[i], stepped, epsilon, clip_lo, clip_hi);
        }
    }
    Ok(cur)
}

/// Matched-magnitude control: x̂ = clip(x − ε·sign(n)) with n standard
/// normal per component. Same L∞ budget as FGSM, random direction.
pub fn craft_gaussian(
    x: &[f64],
    epsilon: f64,
    seed: u64,
    clip_lo: Option<f64>,
    clip_hi: Option<f64>,
) -> Vec<f64> {
    if epsilon == 0.0 {
        return x.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    x.iter()
        .map(|&xi| {
            let n: f64 = rng.sample(rand_distr::StandardNormal);
            constrained_step(xi, xi - epsilon * sign(n), epsilon, clip_lo, clip_hi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fgsm_sign_arithmetic() {
        let x = [0.5, -0.5];
        let g = [2.0, -3.0];
        let out = craft_fgsm(&x, &g, 0.1, None, None).unwrap();
        assert!((out[0] - 0.4).abs() < 1e-15);
        assert!((out[1] + 0.4).abs() < 1e-15);
    }

    #[test]
    fn fgsm_zero_epsilon_is_bitwise_identity() {
        let x = [0.123, -0.0, 7.5, 0.0];
        let g = [1.0, -2.0, 0.0, 5.0];
        let out = craft_fgsm(&x, &g, 0.0, None, None).unwrap();
        for (a, b) in out.iter().zip(&x) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn fgsm_clipping_at_domain_edge() {
        let out = craft_fgsm(&[0.999], &[-1.0], 0.004, None, Some(1.0)).unwrap();
        assert_eq!(out[0], 1.0);
    }

    #[test]
    fn fgsm_shape_mismatch_rejected() {
        assert!(craft_fgsm(&[1.0, 2.0], &[1.0], 0.1, None, None).is_err());
    }

    #[test]
    fn pgd_single_step_equals_fgsm_bitwise() {
        let x = [0.31, -0.7, 0.0, 0.98];
        let g = [0.4, -0.1, 0.0, -3.0];
        let eps = 0.05;
        let fgsm = craft_fgsm(&x, &g, eps, Some(-1.0), Some(1.0)).unwrap();
        let pgd = craft_pgd(
            &x,
            |_| Ok(g.to_vec()),
            eps,
            1,
            eps,
            false,
            0,
            Some(-1.0),
            Some(1.0),
        )
        .unwrap();
        for (a, b) in pgd.iter().zip(&fgsm) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn pgd_constant_gradient_saturates_ball() {
        // Four steps of 2ε/4 against a constant positive gradient land on
        // the −ε face exactly.
        let x = [1.0, -2.0];
        let eps = 0.2;
        let out = craft_pgd(
            &x,
            |_| Ok(vec![3.0, 3.0]),
            eps,
            4,
            2.0 * eps / 4.0,
            false,
            0,
            None,
            None,
        )
        .unwrap();
        for (o, xi) in out.iter().zip(&x) {
            assert!((o - (xi - eps)).abs() < 1e-15);
        }
    }

    #[test]
    fn pgd_zero_epsilon_identity_any_steps() {
        let x = [0.5, -0.25];
        let out = craft_pgd(&x, |_| Ok(vec![1.0, 1.0]), 0.0, 7, 0.1, true, 9, None, None).unwrap();
        for (a, b) in out.iter().zip(&x) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn pgd_zero_steps_rejected() {
        let x = [0.0];
        assert!(matches!(
            craft_pgd(&x, |_| Ok(vec![0.0]), 0.1, 0, 0.1, false, 0, None, None),
            Err(AdvError::BadSteps(0))
        ));
    }

    #[test]
    fn gaussian_budget_and_zero_epsilon() {
        let x = [0.2, -0.4, 1.0];
        let out = craft_gaussian(&x, 0.0, 3, None, None);
        for (a, b) in out.iter().zip(&x) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let eps = 0.03;
        let out = craft_gaussian(&x, eps, 3, None, None);
        for (o, xi) in out.iter().zip(&x) {
            let d = (o - xi).abs();
            assert!(d == 0.0 || (d - eps).abs() < 1e-15);
        }
    }

    #[test]
    fn warmup_boundary() {
        let cfg = AdvConfig {
            epsilon: 0.5,
            warmup_iters: 5,
            ..Default::default()
        };
        assert_eq!(epsilon_at(0, &cfg), 0.0);
        assert_eq!(epsilon_at(4, &cfg), 0.0);
        assert_eq!(epsilon_at(5, &cfg), 0.5);
        let always = AdvConfig {
            epsilon: 0.5,
            warmup_iters: 0,
            ..Default::default()
        };
        assert_eq!(epsilon_at(0, &always), 0.5);
    }

    #[test]
    fn config_validation() {
        let mut cfg = AdvConfig::fgsm(-0.1);
        assert!(cfg.validate(100).is_err());
        cfg.epsilon = 0.1;
        cfg.warmup_iters = 200;
        assert!(cfg.validate(100).is_err());
        cfg.warmup_iters = 5;
        cfg.validate(100).unwrap();

        let pgd = AdvConfig {
            method: AdvMethod::Pgd,
            epsilon: 0.1,
            pgd_step_size: Some(0.5),
            ..Default::default()
        };
        assert!(pgd.validate(100).is_err());
    }
}
