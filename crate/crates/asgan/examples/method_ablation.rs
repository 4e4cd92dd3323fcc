//! The ablation pair that separates "extra discriminator updates" from
//! "gradient-directed perturbation": vanilla, double clean update, Gaussian
//! noise at matched budget, and FGSM.
//!
//!     cargo run --release --example method_ablation

use asgan::runner::{self, ConfigFile};

fn main() {
    let out = std::env::temp_dir().join("asgan_method_ablation_example");
    let text = format!(
        r#"
out_dir = "{}"
seeds = [1, 2]
workers = 2
train.total_iters = 1200
train.g_hidden = [64, 64]
train.d_hidden = [64, 64]
adv.method = "fgsm"
adv.epsilon = 0.1
eval.cadence = 200
eval.points = 256

[sweep]
axis = "method"
values = ["none", "double_update", "gaussian", "fgsm"]
last_k = 3
"#,
        out.display()
    );
    let cfg = ConfigFile::parse(&text).unwrap();
    let section = cfg.sweep.clone().unwrap();
    let exp = cfg.resolve(None).unwrap();
    let summary = runner::sweep(&exp, &section).unwrap();
    println!(
        "{:>14} {:>14} {:>14} {:>10} {:>10}",
        "method", "final_mmd2", "final_frechet", "coverage", "overhead"
    );
    for row in &summary.rows {
        println!(
            "{:>14} {:>14.6} {:>14.6} {:>10} {:>10.2}",
            row.value,
            row.median_final_mmd2.unwrap_or(f64::NAN),
            row.median_final_frechet2d.unwrap_or(f64::NAN),
            row.median_final_coverage.unwrap_or(f64::NAN),
            row.median_overhead_fraction
        );
    }
}
