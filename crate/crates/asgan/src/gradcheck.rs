//! Validation harness: autodiff gradients against central finite
//! differences over whole networks, with an optional injected fault so the
//! check can prove it detects broken adjoints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::nn::{
    extract_grads, forward, init_params, InitScheme, NetworkSpec, NnError, ParamSet,
};
use crate::seeds::mix;
use crate::tensor::Tape;

/// Step used by the central differences.
pub const FD_STEP: f64 = 1e-5;
/// Relative-error denominators are floored here.
pub const FD_DENOM_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockKind {
    Weight,
    Bias,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockError {
    pub layer: usize,
    pub kind: BlockKind,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockError>,
    pub max_rel_error: f64,
}

/// Multiply one layer's autodiff weight gradients by `scale` before the
/// comparison (sabotage fixture for self-tests of the harness).
#[derive(Debug, Clone, Copy)]
pub struct AdjointFault {
    pub layer: usize,
    pub scale: f64,
}

fn quadratic_loss(
    spec: &NetworkSpec,
    params: &ParamSet,
    input: &[f64],
    target: &[f64],
    rows: usize,
) -> Result<(f64, Option<ParamSet>), NnError> {
    let mut tape = Tape::new();
    let x = tape.leaf(input.to_vec(), vec![rows, spec.input_dim()], false)?;
    let (out, taped) = forward(&mut tape, spec, params, x, true)?;
    let t = tape.leaf(target.to_vec(), vec![rows, spec.output_dim()], false)?;
    let diff = tape.sub(out, t)?;
    let sq = tape.mul(diff, diff)?;
    let loss = tape.mean(sq);
    tape.backward(loss)?;
    let grads = extract_grads(&tape, &taped)?;
    Ok((tape.scalar(loss), Some(grads)))
}

fn loss_only(
    spec: &NetworkSpec,
    params: &ParamSet,
    input: &[f64],
    target: &[f64],
    rows: usize,
) -> f64 {
    let out = crate::nn::forward_inference(spec, params, input, rows);
    let n = out.len() as f64;
    out.iter()
        .zip(target)
        .map(|(&y, &t)| (y - t) * (y - t))
        .sum::<f64>()
        / n
}

/// Compare autodiff parameter gradients of a random quadratic objective on
/// `spec` against central finite differences, per parameter block.
pub fn grad_check(spec: &NetworkSpec, seed: u64) -> Result<GradCheckReport, NnError> {
    grad_check_with_fault(spec, seed, None)
}

pub fn grad_check_with_fault(
    spec: &NetworkSpec,
    seed: u64,
    fault: Option<AdjointFault>,
) -> Result<GradCheckReport, NnError> {
    spec.validate()?;
    let params = init_params(spec, InitScheme::Xavier, mix(seed, 1));
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 2));
    let rows = 3;
    let input: Vec<f64> = (0..rows * spec.input_dim())
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    let target: Vec<f64> = (0..rows * spec.output_dim())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();

    let (_, grads) = quadratic_loss(spec, &params, &input, &target, rows)?;
    let mut grads = grads.expect("gradients present");
    if let Some(f) = fault {
        for g in grads.layers[f.layer].weight.iter_mut() {
            *g *= f.scale;
        }
    }

    let mut blocks = Vec::new();
    let mut overall: f64 = 0.0;
    for li in 0..params.layers.len() {
        for kind in [BlockKind::Weight, BlockKind::Bias] {
            let len = match kind {
                BlockKind::Weight => params.layers[li].weight.len(),
                BlockKind::Bias => params.layers[li].bias.len(),
            };
            let mut max_rel: f64 = 0.0;
            for idx in 0..len {
                let mut plus = params.clone();
                let mut minus = params.clone();
                {
                    let (p, m) = match kind {
                        BlockKind::Weight => (
                            &mut plus.layers[li].weight[idx],
                            &mut minus.layers[li].weight[idx],
                        ),
                        BlockKind::Bias => (
                            &mut plus.layers[li].bias[idx],
                            &mut minus.layers[li].bias[idx],
                        ),
                    };
                    *p += FD_STEP;
                    *m -= FD_STEP;
                }
                let fd = (loss_only(spec, &plus, &input, &target, rows)
                    - loss_only(spec, &minus, &input, &target, rows))
                    / (2.0 * FD_STEP);
                let ad = match kind {
                    BlockKind::Weight => grads.layers[li].weight[idx],
                    BlockKind::Bias => grads.layers[li].bias[idx],
                };
                let denom = ad.abs().max(fd.abs()).max(FD_DENOM_GUARD);
                max_rel = max_rel.max((ad - fd).abs() / denom);
            }
            blocks.push(BlockError {
                layer: li,
                kind,
                max_rel_error: max_rel,
            });
            overall = overall.max(max_rel);
        }
    }
    Ok(GradCheckReport {
        blocks,
        max_rel_error: overall,
    })
}

/// A random MLP spec with ≤ `max_layers` hidden layers of ≤ `max_units`
/// units, alternating through the activation kinds networks actually use.
pub fn random_mlp_spec(seed: u64, max_layers: usize, max_units: usize) -> NetworkSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_hidden = rng.random_range(1..=max_layers);
    let hidden: Vec<usize> = (0..n_hidden)
        .map(|_| rng.random_range(4..=max_units))
        .collect();
    let in_dim = rng.random_range(2..=8);
    if rng.random_range(0..2) == 0 {
        NetworkSpec::discriminator(in_dim, &hidden)
    } else {
        let out_dim = rng.random_range(1..=4);
        NetworkSpec::generator(in_dim, &hidden, out_dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{LayerSpec, Role};

    #[test]
    fn linear_quadratic_is_exact_to_rounding() {
        let spec = NetworkSpec {
            layers: vec![LayerSpec {
                in_dim: 2,
                out_dim: 1,
                activation: None,
            }],
            role: Role::Discriminator,
        };
        let report = grad_check(&spec, 7).unwrap();
        assert!(
            report.max_rel_error <= 1e-9,
            "central differences are exact for quadratics, got {}",
            report.max_rel_error
        );
    }

    #[test]
    fn default_networks_pass() {
        let g = NetworkSpec::generator(8, &[16, 16], 2);
        let d = NetworkSpec::discriminator(2, &[16, 16]);
        for spec in [g, d] {
            let report = grad_check(&spec, 3).unwrap();
            assert!(report.max_rel_error <= 1e-4, "{}", report.max_rel_error);
        }
    }

    #[test]
    fn sabotage_is_detected() {
        let spec = NetworkSpec::discriminator(3, &[12]);
        let report = grad_check_with_fault(
            &spec,
            5,
            Some(AdjointFault {
                layer: 0,
                scale: 1.5,
            }),
        )
        .unwrap();
        assert!(
            report.max_rel_error > 1e-2,
            "corrupted adjoint must surface, got {}",
            report.max_rel_error
        );
    }

    #[test]
    fn report_has_every_block() {
        let spec = NetworkSpec::discriminator(2, &[6, 6]);
        let report = grad_check(&spec, 2).unwrap();
        assert_eq!(report.blocks.len(), 3 * 2);
    }
}
