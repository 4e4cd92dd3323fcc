//! Verify the first-order structure of the robust objective numerically on
//! a trained discriminator: the gap between the brute-force minimum of
//! log D over the ε-ball and the estimate log D(x) − ε‖∇ log D(x)‖_q should
//! shrink quadratically as ε halves.
//!
//!     cargo run --release --example theory_check

use asgan::adversarial::{AdvConfig, NormOrder};
use asgan::data::{DataSource, MixtureSpec};
use asgan::engine::{train, EvalConfig, TrainConfig};
use asgan::theory::expansion_residual_sweep;

fn main() {
    let data = MixtureSpec::ring8(7);
    let cfg = TrainConfig {
        total_iters: 1500,
        g_hidden: vec![64, 64],
        d_hidden: vec![64, 64],
        seed: 5,
        ..Default::default()
    };
    let eval = EvalConfig {
        cadence: 500,
        points: 256,
        attack_epsilon: None,
    };
    println!("training a discriminator on ring-8...");
    let report = train(&cfg, &AdvConfig::fgsm(0.05), &data, &eval, |_, _| {}).unwrap();

    let points = data.sample_batch(3 << 60, 20);
    for p in [NormOrder::LInf, NormOrder::L2] {
        let rep = expansion_residual_sweep(
            &report.state.d_spec,
            &report.state.d_params,
            &points,
            p,
            &[1e-2, 5e-3, 2.5e-3],
            41,
        )
        .unwrap();
        println!("p = {} (dual q = {}):", rep.p, rep.q);
        for ((eps, bf), (fo, res)) in rep
            .epsilons
            .iter()
            .zip(&rep.brute_force_mean)
            .zip(rep.first_order_mean.iter().zip(&rep.residual))
        {
            println!("  eps {eps:<8} brute {bf:>10.6}  first-order {fo:>10.6}  residual {res:.3e}");
        }
        println!("  per-halving residual ratios (≈4 for quadratic decay): {:?}", rep.residual_ratio);
    }
}
