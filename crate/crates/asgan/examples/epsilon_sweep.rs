//! Sweep the perturbation level over shared seeds and print the comparison
//! table, mirroring the question "how much perturbation helps?".
//!
//!     cargo run --release --example epsilon_sweep

use asgan::runner::{self, ConfigFile};

fn main() {
    let out = std::env::temp_dir().join("asgan_epsilon_sweep_example");
    let text = format!(
        r#"
out_dir = "{}"
seeds = [1, 2]
workers = 2
train.total_iters = 1200
train.g_hidden = [64, 64]
train.d_hidden = [64, 64]
adv.method = "fgsm"
eval.cadence = 200
eval.points = 256

[sweep]
axis = "epsilon"
values = [0.0, 0.01, 0.05, 0.1, 0.4]
last_k = 3
"#,
        out.display()
    );
    let cfg = ConfigFile::parse(&text).unwrap();
    let section = cfg.sweep.clone().unwrap();
    let exp = cfg.resolve(None).unwrap();
    let summary = runner::sweep(&exp, &section).unwrap();
    println!(
        "{:>8} {:>14} {:>14} {:>10}",
        "epsilon", "final_mmd2", "best_mmd2", "coverage"
    );
    for row in &summary.rows {
        println!(
            "{:>8} {:>14.6} {:>14.6} {:>10}",
            row.value,
            row.median_final_mmd2.unwrap_or(f64::NAN),
            row.median_best_mmd2.unwrap_or(f64::NAN),
            row.median_final_coverage.unwrap_or(f64::NAN)
        );
    }
    println!("full table: {}", out.join("sweep.csv").display());
}
