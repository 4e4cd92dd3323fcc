//! Generator/discriminator construction, parameter initialization, the Adam
//! optimizer, and the versioned checkpoint container.
//!
//! Networks are plain dense MLPs described by [`NetworkSpec`]. Parameters
//! live outside any tape in a [`ParamSet`]; each training step inserts them
//! as fresh leaves, runs the forward pass, and reads gradients back out.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::tensor::{Activation, Tape, TensorError, TensorId};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("layer {index}: output dim {out} does not chain into next input dim {next_in}")]
    BadChain {
        index: usize,
        out: usize,
        next_in: usize,
    },
    #[error("{role} spec violates its output contract: {detail}")]
    BadRole { role: &'static str, detail: String },
    #[error("network has no layers")]
    Empty,
    #[error("input dim {got} does not match spec input dim {expected}")]
    InputDim { got: usize, expected: usize },
    #[error("parameter layout mismatch: {0}")]
    ParamLayout(String),
    #[error("gradients missing for layer {0}; run backward first")]
    MissingGrads(usize),
    #[error("tensor op failed: {0}")]
    Tensor(#[from] TensorError),
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse at byte {offset}: {detail}")]
    BadCheckpoint { offset: usize, detail: String },
}

/// Which side of the game a network plays; constrains the output head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Output activation is tanh so samples land in [−1, 1].
    Generator,
    /// Output is a single raw logit; probabilities come from the loss side.
    Discriminator,
}

#[derive(Debug, Clone)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `None` means a linear layer (the discriminator's logit head).
    pub activation: Option<Activation>,
}

/// Layer-by-layer description of a dense network.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    pub layers: Vec<LayerSpec>,
    pub role: Role,
}

/// Negative-side slope used in every discriminator hidden layer.
pub const LEAKY_SLOPE: f64 = 0.2;

impl NetworkSpec {
    /// ReLU hidden layers, tanh output.
    pub fn generator(latent_dim: usize, hidden: &[usize], data_dim: usize) -> Self {
        let mut layers = Vec::new();
        let mut prev = latent_dim;
        for &h in hidden {
            layers.push(LayerSpec {
                in_dim: prev,
                out_dim: h,
                activation: Some(Activation::Relu),
            });
            prev = h;
        }
        layers.push(LayerSpec {
            in_dim: prev,
            out_dim: data_dim,
            activation: Some(Activation::Tanh),
        });
        NetworkSpec {
            layers,
            role: Role::Generator,
        }
    }

    /// LeakyReLU(0.2) hidden layers, single linear logit output.
    pub fn discriminator(data_dim: usize, hidden: &[usize]) -> Self {
        let mut layers = Vec::new();
        let mut prev = data_dim;
        for &h in hidden {
            layers.push(LayerSpec {
                in_dim: prev,
                out_dim: h,
                activation: Some(Activation::LeakyRelu(LEAKY_SLOPE)),
            });
            prev = h;
        }
        layers.push(LayerSpec {
            in_dim: prev,
            out_dim: 1,
            activation: None,
        });
        NetworkSpec {
            layers,
            role: Role::Discriminator,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.layers.is_empty() {
            return Err(NnError::Empty);
        }
        for i in 0..self.layers.len() - 1 {
            if self.layers[i].out_dim != self.layers[i + 1].in_dim {
                return Err(NnError::BadChain {
                    index: i,
                    out: self.layers[i].out_dim,
                    next_in: self.layers[i + 1].in_dim,
                });
            }
        }
        let last = self.layers.last().unwrap();
        match self.role {
            Role::Generator => {
                if last.activation != Some(Activation::Tanh) {
                    return Err(NnError::BadRole {
                        role: "generator",
                        detail: "output activation must be tanh".into(),
                    });
                }
            }
            Role::Discriminator => {
                if last.out_dim != 1 || last.activation.is_some() {
                    return Err(NnError::BadRole {
                        role: "discriminator",
                        detail: "output must be a single linear logit".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.in_dim * l.out_dim + l.out_dim)
            .sum()
    }
}

/// One layer's weights (row-major `[in_dim, out_dim]`) and bias (`[out_dim]`).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Flat per-layer parameter storage for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub layers: Vec<LayerParams>,
}

impl ParamSet {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        ParamSet {
            layers: spec
                .layers
                .iter()
                .map(|l| LayerParams {
                    in_dim: l.in_dim,
                    out_dim: l.out_dim,
                    weight: vec![0.0; l.in_dim * l.out_dim],
                    bias: vec![0.0; l.out_dim],
                })
                .collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn matches_spec(&self, spec: &NetworkSpec) -> bool {
        self.layers.len() == spec.layers.len()
            && self
                .layers
                .iter()
                .zip(&spec.layers)
                .all(|(p, s)| p.in_dim == s.in_dim && p.out_dim == s.out_dim)
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite()))
    }
}

/// Gradient storage mirroring a [`ParamSet`]'s layout.
pub type ParamGrads = ParamSet;

/// Weight initialization schemes. Biases are always zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScheme {
    /// Uniform on ±√(6/(fan_in+fan_out)); std √(2/(fan_in+fan_out)).
    Xavier,
    /// Zero-mean normal with the given standard deviation.
    Normal(f64),
}

/// Draw a parameter set for `spec`. Deterministic given the seed.
pub fn init_params(spec: &NetworkSpec, scheme: InitScheme, seed: u64) -> ParamSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(spec.layers.len());
    for l in &spec.layers {
        let n = l.in_dim * l.out_dim;
        let weight: Vec<f64> = match scheme {
            InitScheme::Xavier => {
                let a = (6.0 / (l.in_dim + l.out_dim) as f64).sqrt();
                (0..n).map(|_| rng.random_range(-a..=a)).collect()
            }
            InitScheme::Normal(std) => (0..n)
                .map(|_| {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    z * std
                })
                .collect(),
        };
        layers.push(LayerParams {
            in_dim: l.in_dim,
            out_dim: l.out_dim,
            weight,
            bias: vec![0.0; l.out_dim],
        });
    }
    ParamSet { layers }
}

/// Tape handles for one network's inserted parameter leaves.
#[derive(Debug, Clone)]
pub struct TapedParams {
    pub layers: Vec<(TensorId, TensorId)>,
}

/// Insert every weight/bias as a leaf on `tape`.
pub fn insert_params(tape: &mut Tape, params: &ParamSet, requires_grad: bool) -> TapedParams {
    let layers = params
        .layers
        .iter()
        .map(|l| {
            let w = tape
                .leaf(l.weight.clone(), vec![l.in_dim, l.out_dim], requires_grad)
                .expect("weight leaf");
            let b = tape
                .leaf(l.bias.clone(), vec![l.out_dim], requires_grad)
                .expect("bias leaf");
            (w, b)
        })
        .collect();
    TapedParams { layers }
}

/// Gradient-traced forward pass through already-inserted parameters.
pub fn forward_taped(
    tape: &mut Tape,
    spec: &NetworkSpec,
    params: &TapedParams,
    input: TensorId,
) -> Result<TensorId, NnError> {
    let in_dim = tape.shape(input).last().copied().unwrap_or(0);
    if in_dim != spec.input_dim() {
        return Err(NnError::InputDim {
            got: in_dim,
            expected: spec.input_dim(),
        });
    }
    if params.layers.len() != spec.layers.len() {
        return Err(NnError::ParamLayout(format!(
            "{} taped layers for a {}-layer spec",
            params.layers.len(),
            spec.layers.len()
        )));
    }
    let mut h = input;
    for (l, &(w, b)) in spec.layers.iter().zip(&params.layers) {
        let lin = tape.matmul(h, w)?;
        let biased = tape.add_bias(lin, b)?;
        h = match l.activation {
            Some(act) => tape.activation(act, biased),
            None => biased,
        };
    }
    Ok(h)
}

/// Convenience: insert params and run one traced forward pass.
pub fn forward(
    tape: &mut Tape,
    spec: &NetworkSpec,
    params: &ParamSet,
    input: TensorId,
    params_require_grad: bool,
) -> Result<(TensorId, TapedParams), NnError> {
    let taped = insert_params(tape, params, params_require_grad);
    let out = forward_taped(tape, spec, &taped, input)?;
    Ok((out, taped))
}

/// Tape-free forward pass over a row-major batch `[n_rows, in_dim]`.
/// Arithmetic order matches the traced path exactly.
pub fn forward_inference(
    spec: &NetworkSpec,
    params: &ParamSet,
    input: &[f64],
    n_rows: usize,
) -> Vec<f64> {
    debug_assert_eq!(input.len(), n_rows * spec.input_dim());
    let mut h = input.to_vec();
    let mut cols = spec.input_dim();
    for (l, p) in spec.layers.iter().zip(&params.layers) {
        let mut out = crate::tensor::mm(&h, &p.weight, n_rows, cols, p.out_dim);
        for i in 0..n_rows {
            for j in 0..p.out_dim {
                out[i * p.out_dim + j] += p.bias[j];
            }
        }
        if let Some(act) = l.activation {
            for v in out.iter_mut() {
                *v = match act {
                    Activation::Relu => {
                        if *v > 0.0 {
                            *v
                        } else {
                            0.0
                        }
                    }
                    Activation::LeakyRelu(s) => {
                        if *v > 0.0 {
                            *v
                        } else {
                            s * *v
                        }
                    }
                    Activation::Tanh => v.tanh(),
                    Activation::Sigmoid => crate::tensor::sigmoid(*v),
                };
            }
        }
        h = out;
        cols = p.out_dim;
    }
    h
}

/// Pull accumulated gradients for inserted parameters off the tape.
pub fn extract_grads(tape: &Tape, taped: &TapedParams) -> Result<ParamGrads, NnError> {
    let mut layers = Vec::with_capacity(taped.layers.len());
    for (i, &(w, b)) in taped.layers.iter().enumerate() {
        let gw = tape.grad(w).ok_or(NnError::MissingGrads(i))?;
        let gb = tape.grad(b).ok_or(NnError::MissingGrads(i))?;
        let shape = tape.shape(w);
        layers.push(LayerParams {
            in_dim: shape[0],
            out_dim: shape[1],
            weight: gw.to_vec(),
            bias: gb.to_vec(),
        });
    }
    Ok(ParamGrads { layers })
}

/// Update direction for [`adam_step`]. Ascent is descent on the negated
/// gradient, bitwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradDirection {
    Ascent,
    Descent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamHyper {
    pub fn new(lr: f64, beta1: f64, beta2: f64) -> Self {
        AdamHyper {
            lr,
            beta1,
            beta2,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub hyper: AdamHyper,
    pub t: u64,
    m: ParamSet,
    v: ParamSet,
}

impl AdamState {
    pub fn new(spec: &NetworkSpec, hyper: AdamHyper) -> Self {
        AdamState {
            hyper,
            t: 0,
            m: ParamSet::zeros(spec),
            v: ParamSet::zeros(spec),
        }
    }
}

/// One bias-corrected Adam update of `params` in place. `t` advances by
/// exactly one.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut ParamSet,
    grads: &ParamGrads,
    direction: GradDirection,
) -> Result<(), NnError> {
    if params.layers.len() != grads.layers.len() || params.layers.len() != state.m.layers.len() {
        return Err(NnError::ParamLayout(format!(
            "params {} layers, grads {} layers, state {} layers",
            params.layers.len(),
            grads.layers.len(),
            state.m.layers.len()
        )));
    }
    state.t += 1;
    let t = state.t as i32;
    let h = state.hyper;
    let bc1 = 1.0 - h.beta1.powi(t);
    let bc2 = 1.0 - h.beta2.powi(t);
    let flip = match direction {
        GradDirection::Ascent => -1.0,
        GradDirection::Descent => 1.0,
    };
    for (li, layer) in params.layers.iter_mut().enumerate() {
        let g = &grads.layers[li];
        if g.weight.len() != layer.weight.len() || g.bias.len() != layer.bias.len() {
            return Err(NnError::ParamLayout(format!(
                "layer {li}: grad sizes {}x{} vs params {}x{}",
                g.weight.len(),
                g.bias.len(),
                layer.weight.len(),
                layer.bias.len()
            )));
        }
        let update = |p: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                let gi = flip * grad[i];
                m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * gi;
                v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * gi * gi;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= h.lr * mhat / (vhat.sqrt() + h.epsilon);
            }
        };
        update(
            &mut layer.weight,
            &g.weight,
            &mut state.m.layers[li].weight,
            &mut state.v.layers[li].weight,
        );
        update(
            &mut layer.bias,
            &g.bias,
            &mut state.m.layers[li].bias,
            &mut state.v.layers[li].bias,
        );
    }
    Ok(())
}

// ── Checkpoint container ─────────────────────────────────────────────

/// Magic prefix of the parameter container format.
pub const PARAMS_MAGIC: &[u8] = b"ASGAN-PARAMS-v1";

/// Serialize a [`ParamSet`]: magic, u32-LE layer count, then per layer
/// u32-LE in/out dims followed by raw little-endian f64 weights (row-major)
/// and biases.
pub fn save_params(path: &Path, params: &ParamSet) -> Result<(), NnError> {
    let mut buf = Vec::with_capacity(64 + params.param_count() * 8);
    buf.extend_from_slice(PARAMS_MAGIC);
    buf.extend_from_slice(&(params.layers.len() as u32).to_le_bytes());
    for l in &params.layers {
        buf.extend_from_slice(&(l.in_dim as u32).to_le_bytes());
        buf.extend_from_slice(&(l.out_dim as u32).to_le_bytes());
        for &w in &l.weight {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        for &b in &l.bias {
            buf.extend_from_slice(&b.to_le_bytes());
        }
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<ParamSet, NnError> {
    let buf = fs::read(path)?;
    let mut off = 0usize;
    let take = |buf: &[u8], off: &mut usize, n: usize, what: &str| -> Result<Vec<u8>, NnError> {
        if *off + n > buf.len() {
            return Err(NnError::BadCheckpoint {
                offset: *off,
                detail: format!(
                    "truncated while reading {what}: need {n} bytes, {} remain",
                    buf.len() - *off
                ),
            });
        }
        let out = buf[*off..*off + n].to_vec();
        *off += n;
        Ok(out)
    };
    let magic = take(&buf, &mut off, PARAMS_MAGIC.len(), "magic")?;
    if magic != PARAMS_MAGIC {
        return Err(NnError::BadCheckpoint {
            offset: 0,
            detail: format!("bad magic {magic:?}, expected {PARAMS_MAGIC:?}"),
        });
    }
    let n_layers = u32::from_le_bytes(
        take(&buf, &mut off, 4, "layer count")?
            .try_into()
            .unwrap(),
    ) as usize;
    let mut layers = Vec::with_capacity(n_layers);
    for li in 0..n_layers {
        let in_dim = u32::from_le_bytes(
            take(&buf, &mut off, 4, "in_dim")?.try_into().unwrap(),
        ) as usize;
        let out_dim = u32::from_le_bytes(
            take(&buf, &mut off, 4, "out_dim")?.try_into().unwrap(),
        ) as usize;
        let wn = in_dim * out_dim;
        let wb = take(&buf, &mut off, wn * 8, "weights")?;
        let bb = take(&buf, &mut off, out_dim * 8, "biases")?;
        let weight: Vec<f64> = wb
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let bias: Vec<f64> = bb
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let _ = li;
        layers.push(LayerParams {
            in_dim,
            out_dim,
            weight,
            bias,
        });
    }
    if off != buf.len() {
        return Err(NnError::BadCheckpoint {
            offset: off,
            detail: format!("{} trailing bytes after payload", buf.len() - off),
        });
    }
    Ok(ParamSet { layers })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        let g = NetworkSpec::generator(16, &[32, 32], 2);
        g.validate().unwrap();
        assert_eq!(g.input_dim(), 16);
        assert_eq!(g.output_dim(), 2);

        let d = NetworkSpec::discriminator(2, &[32]);
        d.validate().unwrap();
        assert_eq!(d.output_dim(), 1);

        let mut broken = d.clone();
        broken.layers[0].out_dim = 7;
        assert!(matches!(broken.validate(), Err(NnError::BadChain { .. })));
    }

    #[test]
    fn init_is_deterministic() {
        let spec = NetworkSpec::discriminator(4, &[8, 8]);
        let a = init_params(&spec, InitScheme::Xavier, 99);
        let b = init_params(&spec, InitScheme::Xavier, 99);
        assert_eq!(a, b);
        let c = init_params(&spec, InitScheme::Xavier, 100);
        assert_ne!(a, c);
    }

    #[test]
    fn biases_start_zero_and_count_matches() {
        let spec = NetworkSpec::generator(3, &[5], 2);
        let p = init_params(&spec, InitScheme::Normal(0.02), 1);
        assert_eq!(p.param_count(), spec.param_count());
        for l in &p.layers {
            assert!(l.bias.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn zero_weight_discriminator_gives_probability_half() {
        let spec = NetworkSpec::discriminator(3, &[4]);
        let p = ParamSet::zeros(&spec);
        let logits = forward_inference(&spec, &p, &[0.3, -2.0, 5.0], 1);
        assert_eq!(logits, vec![0.0]);
        assert_eq!(crate::tensor::sigmoid(logits[0]), 0.5);
    }

    #[test]
    fn generator_range_is_tanh_bounded() {
        let spec = NetworkSpec::generator(4, &[8], 3);
        let p = init_params(&spec, InitScheme::Normal(2.0), 5);
        let z = vec![3.0, -4.0, 0.5, 9.0];
        let out = forward_inference(&spec, &p, &z, 1);
        for v in out {
            assert!((-1.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn single_linear_layer_is_matmul_plus_bias() {
        let spec = NetworkSpec {
            layers: vec![LayerSpec {
                in_dim: 2,
                out_dim: 2,
                activation: None,
            }],
            role: Role::Discriminator,
        };
        let mut p = ParamSet::zeros(&spec);
        p.layers[0].weight = vec![1.0, 2.0, 3.0, 4.0];
        p.layers[0].bias = vec![0.5, -0.5];
        let out = forward_inference(&spec, &p, &[1.0, 1.0], 1);
        assert_eq!(out, vec![1.0 + 3.0 + 0.5, 2.0 + 4.0 - 0.5]);
    }

    #[test]
    fn forward_dim_mismatch_rejected() {
        let spec = NetworkSpec::discriminator(3, &[4]);
        let p = ParamSet::zeros(&spec);
        let mut tape = Tape::new();
        let x = tape.leaf(vec![1.0, 2.0], vec![1, 2], false).unwrap();
        assert!(matches!(
            forward(&mut tape, &spec, &p, x, false),
            Err(NnError::InputDim { .. })
        ));
    }

    #[test]
    fn adam_hand_checked_first_step() {
        // Bias-corrected update with g=1: m̂=1, v̂=1, step = lr/(1+eps).
        let spec = NetworkSpec {
            layers: vec![LayerSpec {
                in_dim: 1,
                out_dim: 1,
                activation: None,
            }],
            role: Role::Discriminator,
        };
        let mut params = ParamSet::zeros(&spec);
        let mut grads = ParamSet::zeros(&spec);
        grads.layers[0].weight[0] = 1.0;
        let mut state = AdamState::new(&spec, AdamHyper::new(0.001, 0.5, 0.999));
        adam_step(&mut state, &mut params, &grads, GradDirection::Descent).unwrap();
        let expect = -0.001 * (1.0 / (1.0 + 1e-8));
        assert!((params.layers[0].weight[0] - expect).abs() < 1e-15);
        assert_eq!(state.t, 1);
    }

    #[test]
    fn adam_zero_grad_keeps_params() {
        let spec = NetworkSpec::discriminator(2, &[3]);
        let mut params = init_params(&spec, InitScheme::Xavier, 3);
        let before = params.clone();
        let grads = ParamSet::zeros(&spec);
        let mut state = AdamState::new(&spec, AdamHyper::new(0.01, 0.5, 0.999));
        adam_step(&mut state, &mut params, &grads, GradDirection::Descent).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn ascent_equals_descent_on_negated_gradient() {
        let spec = NetworkSpec::discriminator(2, &[3]);
        let mut pa = init_params(&spec, InitScheme::Xavier, 7);
        let mut pb = pa.clone();
        let grads = init_params(&spec, InitScheme::Normal(1.0), 8);
        let mut neg = grads.clone();
        for l in &mut neg.layers {
            l.weight.iter_mut().for_each(|v| *v = -*v);
            l.bias.iter_mut().for_each(|v| *v = -*v);
        }
        let hyper = AdamHyper::new(0.002, 0.5, 0.999);
        let mut sa = AdamState::new(&spec, hyper);
        let mut sb = AdamState::new(&spec, hyper);
        adam_step(&mut sa, &mut pa, &grads, GradDirection::Ascent).unwrap();
        adam_step(&mut sb, &mut pb, &neg, GradDirection::Descent).unwrap();
        assert_eq!(pa, pb);
    }

    #[test]
    fn checkpoint_roundtrip_bit_exact() {
        let spec = NetworkSpec::generator(4, &[6], 3);
        let p = init_params(&spec, InitScheme::Xavier, 42);
        let dir = std::env::temp_dir().join("asgan_nn_test_ckpt");
        let path = dir.join("g.params");
        save_params(&path, &p).unwrap();
        let q = load_params(&path).unwrap();
        assert_eq!(p, q);
        std::fs::remove_dir_all(&dir).ok();
    }
}
