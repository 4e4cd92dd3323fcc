//! Does adversarial-symmetric training actually robustify the
//! discriminator? Train a vanilla and an AS discriminator, then attack both
//! on held-out real samples across a range of budgets and track the input
//! gradient norm that the extra training step implicitly penalizes.
//!
//!     cargo run --release --example robustness

use asgan::adversarial::AdvConfig;
use asgan::data::{DataSource, MixtureSpec};
use asgan::engine::{sample_generator, train, EvalConfig, TrainConfig};
use asgan::metrics::{grad_stats, robust_accuracy};

fn main() {
    let data = MixtureSpec::ring8(7);
    let cfg = TrainConfig {
        total_iters: 2500,
        seed: 3,
        ..Default::default()
    };
    let eval = EvalConfig {
        cadence: 500,
        points: 512,
        attack_epsilon: Some(0.1),
    };
    let mut adv = AdvConfig::fgsm(0.1);
    adv.warmup_iters = 125;

    let real = data.sample_batch(1 << 62, 512);
    let budgets = [0.0, 0.02, 0.05, 0.1, 0.15];
    println!(
        "{:>10} {:>9} {:>8} {}",
        "model",
        "grad_l1",
        "std_acc",
        budgets
            .iter()
            .map(|e| format!("adv@{e:<5}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    for (name, adv_cfg) in [("vanilla", AdvConfig::none()), ("as-fgsm", adv)] {
        let report = train(&cfg, &adv_cfg, &data, &eval, |_, _| {}).unwrap();
        let d_spec = &report.state.d_spec;
        let d_params = &report.state.d_params;
        let fake = sample_generator(&report.state.g_spec, &report.state.g_params, 512, 17);
        let gs = grad_stats(d_spec, d_params, &real).unwrap();
        let mut row = format!("{:>10} {:>9.3}", name, gs.l1_mean);
        let mut std_printed = false;
        for &eps in &budgets {
            let acc = robust_accuracy(d_spec, d_params, &real, &fake, eps).unwrap();
            if !std_printed {
                row.push_str(&format!(" {:>8.3}", acc.std_acc_real));
                std_printed = true;
            }
            row.push_str(&format!(" {:>9.3}", acc.adv_acc));
        }
        println!("{row}");
    }
    println!("(the adversarially trained discriminator should hold its accuracy under attack)");
}
