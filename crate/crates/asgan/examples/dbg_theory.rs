use asgan::adversarial::NormOrder;
use asgan::data::{DataSource, MixtureSpec};
use asgan::engine::{discriminator_step, generator_step, standard_normal_batch, TrainConfig, TrainState};
use asgan::metrics::input_log_d_gradients;
use asgan::theory::{brute_force_robust_min, first_order_estimate, log_d};

fn main() {
    let cfg = TrainConfig {
        batch_size: 32, latent_dim: 8, total_iters: 0,
        g_hidden: vec![24], d_hidden: vec![24], seed: 2024,
        ..Default::default()
    };
    let data = MixtureSpec::ring8(6);
    let mut state = TrainState::new(&cfg, 2).unwrap();
    for t in 0..400 {
        let z = standard_normal_batch(31_000 + t, 32 * 8);
        let x = data.sample_batch(t * 32, 32);
        discriminator_step(&mut state, &x, &z, false).unwrap();
        generator_step(&mut state, &cfg, &z).unwrap();
    }
    let points = data.sample_batch(920_000, 3);
    for i in 0..3 {
        let x = &points[i * 2..(i + 1) * 2];
        let g = input_log_d_gradients(&state.d_spec, &state.d_params, x).unwrap();
        println!("point {i}: x={x:?} grad={g:?} logD={}", log_d(&state.d_spec, &state.d_params, x));
        for eps in [1e-2, 5e-3, 2.5e-3] {
            let bf = brute_force_robust_min(&state.d_spec, &state.d_params, x, eps, NormOrder::L2, 41).unwrap();
            let fo = first_order_estimate(&state.d_spec, &state.d_params, x, eps, NormOrder::L2).unwrap();
            // dense angular oracle on the circle of radius eps
            let mut circle_min = f64::INFINITY;
            let mut best_theta = 0.0;
            for k in 0..40_000 {
                let th = 2.0 * std::f64::consts::PI * k as f64 / 40_000.0;
                let pt = [x[0] - eps * th.cos(), x[1] - eps * th.sin()];
                let v = log_d(&state.d_spec, &state.d_params, &pt);
                if v < circle_min { circle_min = v; best_theta = th; }
            }
            let gdir = (g[1].atan2(g[0]) + 2.0*std::f64::consts::PI) % (2.0*std::f64::consts::PI);
            println!("  eps {eps:.4}: bf {:+.9} circle {:+.9} fo {:+.9} | res_bf {:.3e} res_circle {:.3e} | theta* {:.4} vs g_dir {:.4}",
                bf.value, circle_min, fo, (bf.value-fo).abs(), (circle_min-fo).abs(), best_theta, gdir);
        }
    }
}
