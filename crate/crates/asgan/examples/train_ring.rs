//! Train a vanilla GAN and an adversarially-symmetric GAN side by side on
//! the ring-of-8-Gaussians benchmark and compare their final metrics.
//!
//!     cargo run --release --example train_ring

use asgan::adversarial::AdvConfig;
use asgan::data::MixtureSpec;
use asgan::engine::{train, EvalConfig, TrainConfig};
use asgan::nn::{load_params, save_params};

fn main() {
    let data = MixtureSpec::ring8(7);
    let cfg = TrainConfig {
        total_iters: 2500,
        seed: 1,
        ..Default::default()
    };
    let eval = EvalConfig {
        cadence: 500,
        points: 512,
        attack_epsilon: Some(0.1),
    };

    let mut adv = AdvConfig::fgsm(0.1);
    adv.warmup_iters = 125;

    for (name, adv_cfg) in [("vanilla", AdvConfig::none()), ("as-fgsm", adv)] {
        println!("== {name}");
        let report = train(&cfg, &adv_cfg, &data, &eval, |rec, _| {
            println!(
                "  iter {:>5}  V_m {:>8.4}  D(x) {:.3}  coverage {:?}  mmd2 {:.5}  frechet {:.5}",
                rec.iter,
                rec.v_m,
                rec.mean_d_real,
                rec.mode_coverage,
                rec.mmd2,
                rec.frechet2d
            );
        })
        .expect("training failed");
        let last = report.records.last().unwrap();
        println!(
            "  final: coverage {:?}, hq {:?}, grad_l1 {:.3}, overhead fraction {:.2}",
            last.mode_coverage,
            last.hq_fraction,
            last.grad_l1_mean,
            report.state.wall.overhead_fraction()
        );

        // Checkpoint round trip.
        let dir = std::env::temp_dir().join("asgan_train_ring_example");
        let path = dir.join(format!("{name}_d.bin"));
        save_params(&path, &report.state.d_params).unwrap();
        let back = load_params(&path).unwrap();
        assert_eq!(back, report.state.d_params);
        println!("  checkpoint round trip ok: {}", path.display());
    }
}
