//! The training loop: per iteration, sample a noise batch and a real batch,
//! take one discriminator ascent step on the clean pair, craft perturbed
//! real samples from the gradient cached by that same backward pass, take a
//! second ascent step on the perturbed pair, then one generator descent
//! step. With `method = none` the crafting and the extra step disappear and
//! the loop is a vanilla GAN.
//!
//! Runs are strictly sequential and fully deterministic given the seed; the
//! runner parallelizes across runs, never within one.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversarial::{
    craft_fgsm, craft_gaussian, craft_pgd, epsilon_at, AdvConfig, AdvError, AdvMethod,
};
use crate::data::DataSource;
use crate::metrics::{
    frechet_diag, frechet_gaussian_2d, grad_stats, mmd2_rbf, mode_metrics, robust_accuracy,
    MetricsError, MetricsRecord,
};
use crate::nn::{
    adam_step, extract_grads, forward_inference, forward_taped, init_params, insert_params,
    AdamHyper, AdamState, GradDirection, InitScheme, NetworkSpec, NnError, ParamSet, TapedParams,
};
use crate::seeds::mix3;
use crate::tensor::{sigmoid, Tape, TensorError, TensorId};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid train config: {0}")]
    Config(String),
    #[error("real batch has {x_rows} rows but noise batch has {z_rows}")]
    BatchMismatch { x_rows: usize, z_rows: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Adv(#[from] AdvError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Which objective the generator descends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorLoss {
    /// mean log(1 − D(G(z))): the formal update rule.
    Saturating,
    /// −mean log D(G(z)): same fixed points, stronger early gradient.
    NonSaturating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub latent_dim: usize,
    pub lr_d: f64,
    pub lr_g: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub total_iters: u64,
    pub generator_loss: GeneratorLoss,
    pub d_steps_per_g: usize,
    pub g_hidden: Vec<usize>,
    pub d_hidden: Vec<usize>,
    pub init: String,
    /// Draw a fresh noise batch for the perturbed-step objective instead of
    /// reusing the clean step's batch (sensitivity analysis only).
    pub fresh_z_for_adv: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            latent_dim: 16,
            lr_d: 2e-4,
            lr_g: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            total_iters: 6000,
            generator_loss: GeneratorLoss::NonSaturating,
            d_steps_per_g: 1,
            g_hidden: vec![128, 128],
            d_hidden: vec![128, 128],
            init: "xavier".into(),
            fresh_z_for_adv: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Two time-scale preset: discriminator learning rate lowered to 5e-5.
    pub fn with_ttur(mut self) -> Self {
        self.lr_d = 5e-5;
        self
    }

    pub fn init_scheme(&self) -> Result<InitScheme, EngineError> {
        match self.init.as_str() {
            "xavier" => Ok(InitScheme::Xavier),
            "normal" => Ok(InitScheme::Normal(0.02)),
            other => Err(EngineError::Config(format!(
                "unknown init scheme '{other}' (expected 'xavier' or 'normal')"
            ))),
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.batch_size < 2 {
            return Err(EngineError::Config(format!(
                "batch_size must be >= 2, got {}",
                self.batch_size
            )));
        }
        if self.latent_dim == 0 {
            return Err(EngineError::Config("latent_dim must be >= 1".into()));
        }
        if !(self.lr_d >= 0.0) || !(self.lr_g >= 0.0) {
            return Err(EngineError::Config("learning rates must be >= 0".into()));
        }
        if self.d_steps_per_g < 1 {
            return Err(EngineError::Config("d_steps_per_g must be >= 1".into()));
        }
        self.init_scheme()?;
        Ok(())
    }
}

/// Metric evaluation knobs (cadence is in iterations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub cadence: u64,
    pub points: usize,
    /// FGSM budget used for evaluation-time attacks; `None` derives
    /// 0.01 × the per-dimension std of the held-out real sample, so both
    /// adversarially trained and vanilla runs are attacked at matched ε.
    pub attack_epsilon: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            cadence: 200,
            points: 512,
            attack_epsilon: None,
        }
    }
}

/// One entry of the execution trace, in Algorithm order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepEvent {
    SampleZ,
    SampleX,
    DClean,
    Craft,
    DAdv,
    CraftFake,
    DAdvFake,
    GStep,
}

/// Cumulative wall-clock of each loop phase at a checkpoint. Nondeterministic
/// by nature; kept out of metrics.csv.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub iter: u64,
    pub wall_ms_clean: f64,
    pub wall_ms_craft: f64,
    pub wall_ms_adv: f64,
    pub wall_ms_gen: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseWall {
    pub clean: Duration,
    pub craft: Duration,
    pub adv: Duration,
    pub gen: Duration,
}

impl PhaseWall {
    pub fn total(&self) -> Duration {
        self.clean + self.craft + self.adv + self.gen
    }

    /// Fraction of step time attributable to crafting plus the extra
    /// discriminator update.
    pub fn overhead_fraction(&self) -> f64 {
        let base = (self.clean + self.gen).as_secs_f64();
        if base == 0.0 {
            0.0
        } else {
            (self.craft + self.adv).as_secs_f64() / base
        }
    }
}

/// Everything that evolves over a run.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub iter: u64,
    pub g_spec: NetworkSpec,
    pub d_spec: NetworkSpec,
    pub g_params: ParamSet,
    pub d_params: ParamSet,
    pub g_adam: AdamState,
    pub d_adam: AdamState,
    pub seed: u64,
    pub wall: PhaseWall,
    z_draws: u64,
    x_cursor: u64,
    craft_draws: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseDiagnostic {
    pub iter: u64,
    pub quantity: String,
    pub value: f64,
}

#[derive(Debug)]
pub struct TrainReport {
    pub state: TrainState,
    pub records: Vec<MetricsRecord>,
    pub timings: Vec<TimingRow>,
    pub trace: Vec<StepEvent>,
    pub collapse: Option<CollapseDiagnostic>,
    pub mode_collapse_suspected: bool,
    pub resolved_attack_epsilon: f64,
}

const STREAM_D_INIT: u64 = 1;
const STREAM_G_INIT: u64 = 2;
const STREAM_Z: u64 = 3;
const STREAM_CRAFT: u64 = 4;
const STREAM_EVAL: u64 = 5;
/// Real-sample indices from here on are reserved for evaluation.
const EVAL_INDEX_OFFSET: u64 = 1 << 62;

impl TrainState {
    /// Fresh state with both networks initialized from the config seed.
    pub fn new(cfg: &TrainConfig, data_dim: usize) -> Result<Self, EngineError> {
        cfg.validate()?;
        let scheme = cfg.init_scheme()?;
        let g_spec = NetworkSpec::generator(cfg.latent_dim, &cfg.g_hidden, data_dim);
        let d_spec = NetworkSpec::discriminator(data_dim, &cfg.d_hidden);
        g_spec.validate()?;
        d_spec.validate()?;
        let g_params = init_params(&g_spec, scheme, mix3(cfg.seed, STREAM_G_INIT, 0));
        let d_params = init_params(&d_spec, scheme, mix3(cfg.seed, STREAM_D_INIT, 0));
        let g_adam = AdamState::new(&g_spec, AdamHyper::new(cfg.lr_g, cfg.beta1, cfg.beta2));
        let d_adam = AdamState::new(&d_spec, AdamHyper::new(cfg.lr_d, cfg.beta1, cfg.beta2));
        Ok(TrainState {
            iter: 0,
            g_spec,
            d_spec,
            g_params,
            d_params,
            g_adam,
            d_adam,
            seed: cfg.seed,
            wall: PhaseWall::default(),
            z_draws: 0,
            x_cursor: 0,
            craft_draws: 0,
        })
    }

    fn next_z(&mut self, m: usize) -> Vec<f64> {
        let seed = mix3(self.seed, STREAM_Z, self.z_draws);
        self.z_draws += 1;
        gaussian_batch(seed, m * self.g_spec.input_dim())
    }

    fn next_x(&mut self, data: &dyn DataSource, m: usize) -> Vec<f64> {
        let batch = data.sample_batch(self.x_cursor, m);
        self.x_cursor += m as u64;
        batch
    }

    fn next_craft_seed(&mut self) -> u64 {
        let s = mix3(self.seed, STREAM_CRAFT, self.craft_draws);
        self.craft_draws += 1;
        s
    }
}

fn gaussian_batch(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
        .collect()
}

// ── Objective graphs ─────────────────────────────────────────────────

/// Tape for V_m over a real batch and an already-generated fake batch (the
/// fakes enter as a detached leaf: discriminator steps never differentiate
/// through the generator).
pub struct DObjectiveGraph {
    pub tape: Tape,
    pub v_m: TensorId,
    pub x: TensorId,
    pub fake: TensorId,
    pub real_logits: TensorId,
    pub fake_logits: TensorId,
    pub d_taped: TapedParams,
}

fn v_m_from_logits(tape: &mut Tape, real_logits: TensorId, fake_logits: TensorId) -> TensorId {
    let log_d_real = tape.log_sigmoid(real_logits);
    let real_term = tape.mean(log_d_real);
    let neg_fake = tape.neg(fake_logits);
    let log_one_minus = tape.log_sigmoid(neg_fake);
    let fake_term = tape.mean(log_one_minus);
    tape.add(real_term, fake_term).expect("scalar add")
}

#[allow(clippy::too_many_arguments)]
fn build_d_objective(
    d_spec: &NetworkSpec,
    d_params: &ParamSet,
    x: &[f64],
    fake: &[f64],
    m: usize,
    x_grad: bool,
    d_grad: bool,
    fake_grad: bool,
) -> Result<DObjectiveGraph, EngineError> {
    let dim = d_spec.input_dim();
    let mut tape = Tape::new();
    let xid = tape.leaf(x.to_vec(), vec![m, dim], x_grad)?;
    let fid = tape.leaf(fake.to_vec(), vec![m, dim], fake_grad)?;
    let d_taped = insert_params(&mut tape, d_params, d_grad);
    let real_logits = forward_taped(&mut tape, d_spec, &d_taped, xid)?;
    let fake_logits = forward_taped(&mut tape, d_spec, &d_taped, fid)?;
    let v_m = v_m_from_logits(&mut tape, real_logits, fake_logits);
    Ok(DObjectiveGraph {
        tape,
        v_m,
        x: xid,
        fake: fid,
        real_logits,
        fake_logits,
        d_taped,
    })
}

/// The fully traced minibatch objective
/// V_m = (1/m) Σ [log D(xⁱ) + log(1 − D(G(zⁱ)))], with gradients available
/// for discriminator parameters, generator parameters, and the real batch
/// after one backward pass.
pub struct ObjectiveGraph {
    pub tape: Tape,
    pub v_m: TensorId,
    pub x: TensorId,
    pub z: TensorId,
    pub fake: TensorId,
    pub real_logits: TensorId,
    pub fake_logits: TensorId,
    pub d_taped: TapedParams,
    pub g_taped: TapedParams,
}

pub fn minibatch_objective(
    d_spec: &NetworkSpec,
    d_params: &ParamSet,
    g_spec: &NetworkSpec,
    g_params: &ParamSet,
    x: &[f64],
    z: &[f64],
) -> Result<ObjectiveGraph, EngineError> {
    let dim = d_spec.input_dim();
    let latent = g_spec.input_dim();
    if dim == 0 || x.len() % dim != 0 || latent == 0 || z.len() % latent != 0 {
        return Err(EngineError::Config(
            "batch lengths are not multiples of the network dims".into(),
        ));
    }
    let m = x.len() / dim;
    let zm = z.len() / latent;
    if m != zm {
        return Err(EngineError::BatchMismatch {
            x_rows: m,
            z_rows: zm,
        });
    }
    let mut tape = Tape::new();
    let xid = tape.leaf(x.to_vec(), vec![m, dim], true)?;
    let zid = tape.leaf(z.to_vec(), vec![m, latent], false)?;
    let g_taped = insert_params(&mut tape, g_params, true);
    let fake = forward_taped(&mut tape, g_spec, &g_taped, zid)?;
    let d_taped = insert_params(&mut tape, d_params, true);
    let real_logits = forward_taped(&mut tape, d_spec, &d_taped, xid)?;
    let fake_logits = forward_taped(&mut tape, d_spec, &d_taped, fake)?;
    let v_m = v_m_from_logits(&mut tape, real_logits, fake_logits);
    Ok(ObjectiveGraph {
        tape,
        v_m,
        x: xid,
        z: zid,
        fake,
        real_logits,
        fake_logits,
        d_taped,
        g_taped,
    })
}

/// ∇ₓ of the real objective term (1/m) Σ log D(xⁱ) at arbitrary points.
/// The fake term carries no x-dependence, so this equals ∇ₓ V_m bitwise.
pub fn input_gradient(
    d_spec: &NetworkSpec,
    d_params: &ParamSet,
    x: &[f64],
) -> Result<Vec<f64>, EngineError> {
    let dim = d_spec.input_dim();
    let m = x.len() / dim;
    let mut tape = Tape::new();
    let xid = tape.leaf(x.to_vec(), vec![m, dim], true)?;
    let d_taped = insert_params(&mut tape, d_params, false);
    let logits = forward_taped(&mut tape, d_spec, &d_taped, xid)?;
    let log_d = tape.log_sigmoid(logits);
    let real_term = tape.mean(log_d);
    tape.backward(real_term)?;
    Ok(tape.grad(xid).expect("x requires grad").to_vec())
}

/// What a clean discriminator step hands to the crafting stage.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub v_m: f64,
    /// ∇ₓ V_m at the pre-update parameters, cached from the same backward
    /// pass that produced the parameter gradients.
    pub x_grad: Vec<f64>,
    pub fake_values: Vec<f64>,
    /// Gradient w.r.t. the fake batch, kept only when crafting on fakes.
    pub fake_grad: Option<Vec<f64>>,
}

/// One Adam ascent step on the discriminator over the clean pair (x, G(z)).
pub fn discriminator_step(
    state: &mut TrainState,
    x: &[f64],
    z: &[f64],
    want_fake_grad: bool,
) -> Result<StepOutcome, EngineError> {
    let dim = state.d_spec.input_dim();
    let m = x.len() / dim;
    let zm = z.len() / state.g_spec.input_dim();
    if m != zm {
        return Err(EngineError::BatchMismatch {
            x_rows: m,
            z_rows: zm,
        });
    }
    let fake_values = forward_inference(&state.g_spec, &state.g_params, z, m);
    let mut graph = build_d_objective(
        &state.d_spec,
        &state.d_params,
        x,
        &fake_values,
        m,
        true,
        true,
        want_fake_grad,
    )?;
    graph.tape.backward(graph.v_m)?;
    let v_m = graph.tape.scalar(graph.v_m);
    let x_grad = graph.tape.grad(graph.x).expect("x requires grad").to_vec();
    let fake_grad = if want_fake_grad {
        Some(graph.tape.grad(graph.fake).expect("fake grad requested").to_vec())
    } else {
        None
    };
    let grads = extract_grads(&graph.tape, &graph.d_taped)?;
    adam_step(
        &mut state.d_adam,
        &mut state.d_params,
        &grads,
        GradDirection::Ascent,
    )?;
    Ok(StepOutcome {
        v_m,
        x_grad,
        fake_values,
        fake_grad,
    })
}

/// One Adam ascent step on the discriminator over (x̂, G(z)); the fake batch
/// values are reused from the clean step unless a perturbed fake batch is
/// supplied instead.
pub fn adversarial_discriminator_step(
    state: &mut TrainState,
    x_hat: &[f64],
    fake_values: &[f64],
) -> Result<f64, EngineError> {
    let dim = state.d_spec.input_dim();
    let m = x_hat.len() / dim;
    let mut graph = build_d_objective(
        &state.d_spec,
        &state.d_params,
        x_hat,
        fake_values,
        m,
        false,
        true,
        false,
    )?;
    graph.tape.backward(graph.v_m)?;
    let v_m = graph.tape.scalar(graph.v_m);
    let grads = extract_grads(&graph.tape, &graph.d_taped)?;
    adam_step(
        &mut state.d_adam,
        &mut state.d_params,
        &grads,
        GradDirection::Ascent,
    )?;
    Ok(v_m)
}

/// One Adam descent step on the generator. Returns the descended loss value.
pub fn generator_step(
    state: &mut TrainState,
    cfg: &TrainConfig,
    z: &[f64],
) -> Result<f64, EngineError> {
    let latent = state.g_spec.input_dim();
    let m = z.len() / latent;
    let mut tape = Tape::new();
    let zid = tape.leaf(z.to_vec(), vec![m, latent], false)?;
    let g_taped = insert_params(&mut tape, &state.g_params, true);
    let fake = forward_taped(&mut tape, &state.g_spec, &g_taped, zid)?;
    let d_taped = insert_params(&mut tape, &state.d_params, false);
    let fake_logits = forward_taped(&mut tape, &state.d_spec, &d_taped, fake)?;
    let loss = match cfg.generator_loss {
        GeneratorLoss::Saturating => {
            // The real term of V_m has no generator dependence, so descending
            // the fake term alone is the exact update rule.
            let neg_logits = tape.neg(fake_logits);
            let log_one_minus = tape.log_sigmoid(neg_logits);
            tape.mean(log_one_minus)
        }
        GeneratorLoss::NonSaturating => {
            let log_d = tape.log_sigmoid(fake_logits);
            let mean = tape.mean(log_d);
            tape.neg(mean)
        }
    };
    tape.backward(loss)?;
    let value = tape.scalar(loss);
    let grads = extract_grads(&tape, &g_taped)?;
    adam_step(
        &mut state.g_adam,
        &mut state.g_params,
        &grads,
        GradDirection::Descent,
    )?;
    Ok(value)
}

/// Draw n generator samples: z ~ N(0, I), returns G(z) rows.
pub fn sample_generator(
    g_spec: &NetworkSpec,
    g_params: &ParamSet,
    n: usize,
    seed: u64,
) -> Vec<f64> {
    let z = gaussian_batch(seed, n * g_spec.input_dim());
    forward_inference(g_spec, g_params, &z, n)
}

// ── The training loop ────────────────────────────────────────────────

fn finite_or_collapse(
    iter: u64,
    quantity: &str,
    value: f64,
) -> Result<(), CollapseDiagnostic> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(CollapseDiagnostic {
            iter,
            quantity: quantity.to_string(),
            value,
        })
    }
}

/// Per-dimension standard deviation of a flat `[n, dim]` sample.
fn per_dim_std(points: &[f64], dim: usize) -> f64 {
    let n = points.len() / dim;
    let mut acc = 0.0;
    for d in 0..dim {
        let mean: f64 = points.iter().skip(d).step_by(dim).sum::<f64>() / n as f64;
        let var: f64 = points
            .iter()
            .skip(d)
            .step_by(dim)
            .map(|&x| (x - mean).powi(2))
            .sum::<f64>()
            / n as f64;
        acc += var.sqrt();
    }
    acc / dim as f64
}

/// Run the full loop. Emits one metrics record (and timing row) per cadence
/// interval through `on_checkpoint` and in the returned report. Numeric
/// collapse aborts the run and is recorded as a diagnostic, not an error.
pub fn train(
    cfg: &TrainConfig,
    adv: &AdvConfig,
    data: &dyn DataSource,
    eval: &EvalConfig,
    mut on_checkpoint: impl FnMut(&MetricsRecord, &TimingRow),
) -> Result<TrainReport, EngineError> {
    cfg.validate()?;
    adv.validate(cfg.total_iters)?;
    if eval.cadence == 0 {
        return Err(EngineError::Config("eval cadence must be >= 1".into()));
    }
    let mut state = TrainState::new(cfg, data.data_dim())?;
    let m = cfg.batch_size;
    let dim = data.data_dim();

    // Held-out evaluation fixture, disjoint from the training stream.
    let eval_real = data.sample_batch(EVAL_INDEX_OFFSET, eval.points);
    let resolved_eps = eval
        .attack_epsilon
        .unwrap_or_else(|| 0.01 * per_dim_std(&eval_real, dim));

    let mut records = Vec::new();
    let mut timings = Vec::new();
    let mut trace = Vec::new();
    let mut collapse = None;
    let mut low_coverage_streak = 0u32;
    let mut suspected = false;
    let mut last_v_m = f64::NAN;

    'outer: for t in 0..cfg.total_iters {
        state.iter = t;
        let mut z = Vec::new();
        for _ in 0..cfg.d_steps_per_g {
            z = state.next_z(m);
            trace.push(StepEvent::SampleZ);
            let x = state.next_x(data, m);
            trace.push(StepEvent::SampleX);

            let want_fake_grad = adv.adv_on_fake
                && !matches!(adv.method, AdvMethod::None | AdvMethod::DoubleUpdate);
            let t0 = Instant::now();
            let outcome = discriminator_step(&mut state, &x, &z, want_fake_grad)?;
            state.wall.clean += t0.elapsed();
            trace.push(StepEvent::DClean);
            last_v_m = outcome.v_m;
            if let Err(d) = finite_or_collapse(t, "v_m", outcome.v_m) {
                collapse = Some(d);
                break 'outer;
            }

            if adv.method != AdvMethod::None {
                let eff = epsilon_at(t, adv);
                let adv_fakes: Vec<f64>;
                let fake_for_adv: &[f64] = if cfg.fresh_z_for_adv {
                    let z2 = state.next_z(m);
                    adv_fakes =
                        forward_inference(&state.g_spec, &state.g_params, &z2, m);
                    &adv_fakes
                } else {
                    &outcome.fake_values
                };

                let x_hat = match adv.method {
                    AdvMethod::Fgsm => {
                        let t0 = Instant::now();
                        let crafted =
                            craft_fgsm(&x, &outcome.x_grad, eff, adv.clip_lo, adv.clip_hi)?;
                        state.wall.craft += t0.elapsed();
                        trace.push(StepEvent::Craft);
                        crafted
                    }
                    AdvMethod::Pgd => {
                        let seed = state.next_craft_seed();
                        let step_size = adv.effective_pgd_step_size();
                        let d_spec = state.d_spec.clone();
                        let d_params = state.d_params.clone();
                        let t0 = Instant::now();
                        let crafted = craft_pgd(
                            &x,
                            |pt| {
                                input_gradient(&d_spec, &d_params, pt)
                                    .map_err(|e| AdvError::Evaluator(e.to_string()))
                            },
                            eff,
                            adv.pgd_steps,
                            step_size,
                            adv.pgd_random_init,
                            seed,
                            adv.clip_lo,
                            adv.clip_hi,
                        )?;
                        state.wall.craft += t0.elapsed();
                        trace.push(StepEvent::Craft);
                        crafted
                    }
                    AdvMethod::Gaussian => {
                        let seed = state.next_craft_seed();
                        let t0 = Instant::now();
                        let crafted = craft_gaussian(&x, eff, seed, adv.clip_lo, adv.clip_hi);
                        state.wall.craft += t0.elapsed();
                        trace.push(StepEvent::Craft);
                        crafted
                    }
                    AdvMethod::DoubleUpdate => x.clone(),
                    AdvMethod::None => unreachable!(),
                };

                let t0 = Instant::now();
                let v_adv = adversarial_discriminator_step(&mut state, &x_hat, fake_for_adv)?;
                state.wall.adv += t0.elapsed();
                trace.push(StepEvent::DAdv);
                if let Err(d) = finite_or_collapse(t, "v_m_adv", v_adv) {
                    collapse = Some(d);
                    break 'outer;
                }

                if let Some(fg) = outcome.fake_grad.as_ref() {
                    let t0 = Instant::now();
                    let fake_hat =
                        craft_fgsm(&outcome.fake_values, fg, eff, adv.clip_lo, adv.clip_hi)?;
                    state.wall.craft += t0.elapsed();
                    trace.push(StepEvent::CraftFake);
                    let t0 = Instant::now();
                    let v_rf = adversarial_discriminator_step(&mut state, &x, &fake_hat)?;
                    state.wall.adv += t0.elapsed();
                    trace.push(StepEvent::DAdvFake);
                    if let Err(d) = finite_or_collapse(t, "v_m_adv_fake", v_rf) {
                        collapse = Some(d);
                        break 'outer;
                    }
                }
            }
        }

        let t0 = Instant::now();
        let g_loss = generator_step(&mut state, cfg, &z)?;
        state.wall.gen += t0.elapsed();
        trace.push(StepEvent::GStep);
        if let Err(d) = finite_or_collapse(t, "g_loss", g_loss) {
            collapse = Some(d);
            break 'outer;
        }

        let done = t + 1;
        if done % eval.cadence == 0 || done == cfg.total_iters {
            let record = evaluate_checkpoint(
                &state,
                data,
                eval,
                &eval_real,
                resolved_eps,
                done,
                last_v_m,
                g_loss,
            )?;
            if let Some(cov) = record.mode_coverage {
                if cov < 2 {
                    low_coverage_streak += 1;
                    if low_coverage_streak >= 3 {
                        suspected = true;
                    }
                } else {
                    low_coverage_streak = 0;
                }
            }
            let timing = TimingRow {
                iter: done,
                wall_ms_clean: state.wall.clean.as_secs_f64() * 1e3,
                wall_ms_craft: state.wall.craft.as_secs_f64() * 1e3,
                wall_ms_adv: state.wall.adv.as_secs_f64() * 1e3,
                wall_ms_gen: state.wall.gen.as_secs_f64() * 1e3,
            };
            on_checkpoint(&record, &timing);
            records.push(record);
            timings.push(timing);
        }
    }

    Ok(TrainReport {
        state,
        records,
        timings,
        trace,
        collapse,
        mode_collapse_suspected: suspected,
        resolved_attack_epsilon: resolved_eps,
    })
}

#[allow(clippy::too_many_arguments)]
fn evaluate_checkpoint(
    state: &TrainState,
    data: &dyn DataSource,
    eval: &EvalConfig,
    eval_real: &[f64],
    attack_eps: f64,
    iter: u64,
    v_m: f64,
    g_loss: f64,
) -> Result<MetricsRecord, EngineError> {
    let dim = data.data_dim();
    let n = eval.points;
    let fake = sample_generator(
        &state.g_spec,
        &state.g_params,
        n,
        mix3(state.seed, STREAM_EVAL, iter),
    );

    let real_logits = forward_inference(&state.d_spec, &state.d_params, eval_real, n);
    let mean_d_real =
        real_logits.iter().map(|&l| sigmoid(l)).sum::<f64>() / n as f64;

    let x_grads = crate::metrics::input_log_d_gradients(&state.d_spec, &state.d_params, eval_real)?;
    let x_hat = craft_fgsm(eval_real, &x_grads, attack_eps, None, None)?;
    let adv_logits = forward_inference(&state.d_spec, &state.d_params, &x_hat, n);
    let mean_d_adv = adv_logits.iter().map(|&l| sigmoid(l)).sum::<f64>() / n as f64;

    let gs = grad_stats(&state.d_spec, &state.d_params, eval_real)?;
    let acc = robust_accuracy(
        &state.d_spec,
        &state.d_params,
        eval_real,
        &fake,
        attack_eps,
    )?;

    let (mode_coverage, hq_fraction) = match data.mixture_spec() {
        Some(spec) => {
            let mm = mode_metrics(&fake, spec)?;
            (Some(mm.coverage), Some(mm.hq_fraction))
        }
        None => (None, None),
    };
    let mmd2 = mmd2_rbf(eval_real, &fake, dim)?;
    let frechet2d = if dim == 2 {
        frechet_gaussian_2d(eval_real, &fake)?
    } else {
        frechet_diag(eval_real, &fake, dim)?
    };

    Ok(MetricsRecord {
        iter,
        v_m,
        d_loss: -v_m,
        g_loss,
        mean_d_real,
        mean_d_adv,
        grad_l1_mean: gs.l1_mean,
        mode_coverage,
        hq_fraction,
        mmd2,
        frechet2d,
        adv_accuracy: acc.adv_acc,
        std_accuracy: acc.std_acc,
        std_accuracy_real: acc.std_acc_real,
    })
}

/// Convenience used by the z-sampling of generator evaluation in examples.
pub fn standard_normal_batch(seed: u64, n: usize) -> Vec<f64> {
    gaussian_batch(seed, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::MixtureSpec;

    fn tiny_cfg(seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: 8,
            latent_dim: 4,
            total_iters: 12,
            g_hidden: vec![8],
            d_hidden: vec![8],
            seed,
            ..Default::default()
        }
    }

    fn tiny_eval() -> EvalConfig {
        EvalConfig {
            cadence: 6,
            points: 32,
            attack_epsilon: Some(0.01),
        }
    }

    #[test]
    fn objective_constant_half_discriminator() {
        // Zero-weight D: probability 0.5 on anything → V_m = 2 log ½.
        let d_spec = NetworkSpec::discriminator(2, &[4]);
        let d_params = ParamSet::zeros(&d_spec);
        let g_spec = NetworkSpec::generator(3, &[4], 2);
        let g_params = ParamSet::zeros(&g_spec);
        let x = vec![0.5, -0.5, 1.0, 1.0];
        let z = vec![0.1, 0.2, 0.3, -0.1, -0.2, -0.3];
        let graph =
            minibatch_objective(&d_spec, &d_params, &g_spec, &g_params, &x, &z).unwrap();
        let v = graph.tape.scalar(graph.v_m);
        assert!((v - 2.0 * (0.5f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn objective_batch_mismatch_rejected() {
        let d_spec = NetworkSpec::discriminator(2, &[4]);
        let d_params = ParamSet::zeros(&d_spec);
        let g_spec = NetworkSpec::generator(3, &[4], 2);
        let g_params = ParamSet::zeros(&g_spec);
        let x = vec![0.0; 4];
        let z = vec![0.0; 3];
        assert!(matches!(
            minibatch_objective(&d_spec, &d_params, &g_spec, &g_params, &x, &z),
            Err(EngineError::BatchMismatch { .. })
        ));
    }

    #[test]
    fn lr_zero_keeps_discriminator_but_caches_gradient() {
        let mut cfg = tiny_cfg(3);
        cfg.lr_d = 0.0;
        let mut state = TrainState::new(&cfg, 2).unwrap();
        let before = state.d_params.clone();
        let x = vec![0.3; 16];
        let z = vec![0.1; 32];
        let out = discriminator_step(&mut state, &x, &z, false).unwrap();
        assert_eq!(state.d_params, before);
        assert_eq!(out.x_grad.len(), 16);
        assert!(out.x_grad.iter().any(|&g| g != 0.0));
    }

    #[test]
    fn cached_x_grad_matches_fresh_recompute_bitwise() {
        let cfg = tiny_cfg(4);
        let mut state = TrainState::new(&cfg, 2).unwrap();
        let pre_d = state.d_params.clone();
        let g_params = state.g_params.clone();
        let x: Vec<f64> = (0..16).map(|i| (i as f64 * 0.3).sin()).collect();
        let z: Vec<f64> = (0..32).map(|i| (i as f64 * 0.17).cos()).collect();
        let out = discriminator_step(&mut state, &x, &z, false).unwrap();

        let graph = minibatch_objective(
            &state.d_spec,
            &pre_d,
            &state.g_spec,
            &g_params,
            &x,
            &z,
        )
        .unwrap();
        let mut graph = graph;
        graph.tape.backward(graph.v_m).unwrap();
        let fresh = graph.tape.grad(graph.x).unwrap();
        assert_eq!(out.x_grad.len(), fresh.len());
        for (a, b) in out.x_grad.iter().zip(fresh) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn generator_lr_zero_keeps_params() {
        let mut cfg = tiny_cfg(5);
        cfg.lr_g = 0.0;
        let mut state = TrainState::new(&cfg, 2).unwrap();
        let before = state.g_params.clone();
        let z = vec![0.2; 32];
        generator_step(&mut state, &cfg, &z).unwrap();
        assert_eq!(state.g_params, before);
    }

    #[test]
    fn vanilla_trace_has_no_adversarial_entries() {
        let cfg = tiny_cfg(6);
        let adv = AdvConfig::none();
        let data = MixtureSpec::ring8(1);
        let report = train(&cfg, &adv, &data, &tiny_eval(), |_, _| {}).unwrap();
        assert!(!report
            .trace
            .iter()
            .any(|e| matches!(e, StepEvent::Craft | StepEvent::DAdv)));
        let per_iter: Vec<_> = report.trace.iter().take(4).collect();
        assert_eq!(
            per_iter,
            [
                &StepEvent::SampleZ,
                &StepEvent::SampleX,
                &StepEvent::DClean,
                &StepEvent::GStep
            ]
        );
    }

    #[test]
    fn adversarial_trace_follows_algorithm_order() {
        let cfg = tiny_cfg(7);
        let adv = AdvConfig::fgsm(0.01);
        let data = MixtureSpec::ring8(1);
        let report = train(&cfg, &adv, &data, &tiny_eval(), |_, _| {}).unwrap();
        let expected = [
            StepEvent::SampleZ,
            StepEvent::SampleX,
            StepEvent::DClean,
            StepEvent::Craft,
            StepEvent::DAdv,
            StepEvent::GStep,
        ];
        assert_eq!(report.trace.len() as u64, cfg.total_iters * 6);
        for (i, e) in report.trace.iter().enumerate() {
            assert_eq!(*e, expected[i % 6], "at position {i}");
        }
    }

    #[test]
    fn identical_seeds_identical_records() {
        let cfg = tiny_cfg(8);
        let adv = AdvConfig::fgsm(0.02);
        let data = MixtureSpec::ring8(2);
        let a = train(&cfg, &adv, &data, &tiny_eval(), |_, _| {}).unwrap();
        let b = train(&cfg, &adv, &data, &tiny_eval(), |_, _| {}).unwrap();
        assert_eq!(a.records, b.records);
        assert_ne!(a.records.len(), 0);
    }

    #[test]
    fn zero_epsilon_equals_double_update_bitwise() {
        let cfg = tiny_cfg(9);
        let data = MixtureSpec::ring8(3);
        let eps0 = AdvConfig {
            epsilon: 0.0,
            ..AdvConfig::fgsm(0.0)
        };
        let double = AdvConfig {
            method: AdvMethod::DoubleUpdate,
            ..AdvConfig::default()
        };
        let a = train(&cfg, &eps0, &data, &tiny_eval(), |_, _| {}).unwrap();
        let b = train(&cfg, &double, &data, &tiny_eval(), |_, _| {}).unwrap();
        for (la, lb) in a
            .state
            .d_params
            .layers
            .iter()
            .zip(&b.state.d_params.layers)
        {
            for (wa, wb) in la.weight.iter().zip(&lb.weight) {
                assert_eq!(wa.to_bits(), wb.to_bits());
            }
        }
        for (la, lb) in a
            .state
            .g_params
            .layers
            .iter()
            .zip(&b.state.g_params.layers)
        {
            for (wa, wb) in la.weight.iter().zip(&lb.weight) {
                assert_eq!(wa.to_bits(), wb.to_bits());
            }
        }
    }

    #[test]
    fn generator_samples_bounded_and_deterministic() {
        let g_spec = NetworkSpec::generator(4, &[8], 2);
        let g_params = init_params(&g_spec, InitScheme::Xavier, 11);
        let a = sample_generator(&g_spec, &g_params, 20, 7);
        let b = sample_generator(&g_spec, &g_params, 20, 7);
        assert_eq!(a, b);
        for &v in &a {
            assert!((-1.0..=1.0).contains(&v));
        }

        // Zero final-layer weights: every sample is the bias image.
        let mut zeroed = g_params.clone();
        let last = zeroed.layers.len() - 1;
        zeroed.layers[last].weight.iter_mut().for_each(|w| *w = 0.0);
        let s = sample_generator(&g_spec, &zeroed, 5, 3);
        let first = &s[0..2];
        for row in s.chunks_exact(2) {
            assert_eq!(row, first);
        }
    }
}
