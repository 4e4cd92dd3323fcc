//! Iterated crafting: how PGD step counts trade training time for quality.
//! Crafting cost grows with the number of gradient re-evaluations, so the
//! wall-clock column should rise monotonically with k.
//!
//!     cargo run --release --example pgd_steps

use asgan::runner::{self, ConfigFile};

fn main() {
    let out = std::env::temp_dir().join("asgan_pgd_steps_example");
    let text = format!(
        r#"
out_dir = "{}"
seeds = [1]
train.total_iters = 600
train.g_hidden = [64, 64]
train.d_hidden = [64, 64]
adv.method = "pgd"
adv.epsilon = 0.1
eval.cadence = 200
eval.points = 256

[sweep]
axis = "pgd_steps"
values = [1, 2, 4, 6, 12]
last_k = 2
"#,
        out.display()
    );
    let cfg = ConfigFile::parse(&text).unwrap();
    let section = cfg.sweep.clone().unwrap();
    let exp = cfg.resolve(None).unwrap();
    let summary = runner::sweep(&exp, &section).unwrap();
    println!(
        "{:>6} {:>14} {:>12} {:>10}",
        "k", "final_mmd2", "wall_ms", "overhead"
    );
    for row in &summary.rows {
        println!(
            "{:>6} {:>14.6} {:>12.0} {:>10.2}",
            row.value,
            row.median_final_mmd2.unwrap_or(f64::NAN),
            row.median_wall_total_ms,
            row.median_overhead_fraction
        );
    }
}
