//! Calibration probe: load discriminator checkpoints and tabulate
//! standard/adversarial accuracy across attack budgets.
//! Usage: probe_robustness <ckpt_d> [<ckpt_d> ...]

use asgan::data::{DataSource, MixtureSpec};
use asgan::engine::sample_generator;
use asgan::metrics::robust_accuracy;
use asgan::nn::load_params;
use asgan::runner::discriminator_spec_from_params;

fn main() {
    let data = MixtureSpec::ring8(7);
    let real = data.sample_batch(1 << 62, 512);
    let fake = sample_generator(
        &asgan::nn::NetworkSpec::generator(16, &[128, 128], 2),
        &asgan::nn::init_params(
            &asgan::nn::NetworkSpec::generator(16, &[128, 128], 2),
            asgan::nn::InitScheme::Xavier,
            1,
        ),
        512,
        3,
    );
    for path in std::env::args().skip(1) {
        let params = load_params(std::path::Path::new(&path)).unwrap();
        let spec = discriminator_spec_from_params(&params).unwrap();
        print!("{path}: ");
        for eps in [0.0, 0.016, 0.032, 0.05, 0.08, 0.12, 0.2] {
            let acc = robust_accuracy(&spec, &params, &real, &fake, eps).unwrap();
            if eps == 0.0 {
                print!("std_real={:.3} | adv:", acc.std_acc_real);
            }
            print!(" {eps}:{:.3}", acc.adv_acc);
        }
        println!();
    }
}
