//! Check every analytic gradient of the default generator/discriminator
//! shapes against central finite differences.
//!
//!     cargo run --release --example gradcheck

use asgan::runner::run_gradcheck;

fn main() {
    let outcome = run_gradcheck(0).unwrap();
    for (name, report) in &outcome.reports {
        println!("{name}: max rel error {:.3e}", report.max_rel_error);
        for b in &report.blocks {
            println!(
                "  layer {} {:?}: {:.3e}",
                b.layer, b.kind, b.max_rel_error
            );
        }
    }
    println!(
        "{}",
        if outcome.pass {
            "PASS"
        } else {
            "FAIL"
        }
    );
}
