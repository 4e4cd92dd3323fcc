//! Dense tensor arithmetic with reverse-mode automatic differentiation.
//!
//! A [`Tape`] is an append-only arena of [`Tensor`] nodes. Forward ops push
//! one node each and record enough structure to replay adjoints in reverse
//! creation order. Everything is `f64`; shapes are row-major and at most 2-D
//! (`[n]` vectors, `[m, n]` matrices, `[1]` scalars), which is all a dense
//! GAN needs.
//!
//! Gradients are accumulated, never overwritten: running `backward` twice
//! without zeroing doubles them, and zeroing then re-running reproduces the
//! previous values exactly. All loops run in fixed index order, so identical
//! tapes produce bitwise-identical gradients.

use thiserror::Error;

/// Handle into a [`Tape`]'s node arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorId(usize);

impl TensorId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Elementwise nonlinearity kinds recorded on the tape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    /// Negative-side slope; the subgradient at 0 is the slope itself.
    LeakyRelu(f64),
    Tanh,
    Sigmoid,
}

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: expected a 2-D operand, got shape {shape:?}")]
    NotMatrix { op: &'static str, shape: Vec<usize> },
    #[error("values length {len} does not match shape {shape:?}")]
    BadLeaf { len: usize, shape: Vec<usize> },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("backward on an empty tape")]
    EmptyTape,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul { a: TensorId, b: TensorId },
    Add { a: TensorId, b: TensorId },
    Sub { a: TensorId, b: TensorId },
    Mul { a: TensorId, b: TensorId },
    AddBias { a: TensorId, bias: TensorId },
    Scale { a: TensorId, factor: f64 },
    Neg { a: TensorId },
    Act { a: TensorId, kind: Activation },
    LogSigmoid { a: TensorId },
    Mean { a: TensorId },
    Sum { a: TensorId },
    BceFromLogits { logits: TensorId, target: f64 },
}

/// One node of the recorded computation: value plus (optional) adjoint.
#[derive(Debug, Clone)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub requires_grad: bool,
    pub grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Append-only record of executed operations, replayable in reverse.
///
/// A tape and its tensors are confined to one thread; parallelism happens
/// across independent tapes only.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Tensor>,
    ops: Vec<Op>,
}

/// Numerically stable log(1 + exp(x)).
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Numerically stable logistic function, monotone and in (0, 1) for finite x.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// sign with sign(0) = 0, as required by attack crafting.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn apply_activation(kind: Activation, x: f64) -> f64 {
    match kind {
        Activation::Relu => {
            if x > 0.0 {
                x
            } else {
                0.0
            }
        }
        Activation::LeakyRelu(slope) => {
            if x > 0.0 {
                x
            } else {
                slope * x
            }
        }
        Activation::Tanh => x.tanh(),
        // The op contract keeps probabilities strictly inside (0, 1) even
        // where the exact value would round to an endpoint at f64.
        Activation::Sigmoid => sigmoid(x)
            .max(f64::MIN_POSITIVE)
            .min(1.0 - f64::EPSILON / 2.0),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn values(&self, id: TensorId) -> &[f64] {
        &self.nodes[id.0].values
    }

    pub fn shape(&self, id: TensorId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    pub fn grad(&self, id: TensorId) -> Option<&[f64]> {
        self.nodes[id.0].grad.as_deref()
    }

    pub fn node(&self, id: TensorId) -> &Tensor {
        &self.nodes[id.0]
    }

    /// Value of a single-element tensor.
    pub fn scalar(&self, id: TensorId) -> f64 {
        debug_assert_eq!(self.nodes[id.0].numel(), 1);
        self.nodes[id.0].values[0]
    }

    pub fn requires_grad(&self, id: TensorId) -> bool {
        self.nodes[id.0].requires_grad
    }

    fn push(&mut self, values: Vec<f64>, shape: Vec<usize>, requires_grad: bool, op: Op) -> TensorId {
        debug_assert_eq!(values.len(), shape.iter().product::<usize>());
        let id = TensorId(self.nodes.len());
        self.nodes.push(Tensor {
            shape,
            values,
            requires_grad,
            grad: None,
        });
        self.ops.push(op);
        id
    }

    /// Insert an input tensor. `requires_grad` marks it as a differentiation
    /// target (parameters, or inputs when crafting attacks).
    pub fn leaf(
        &mut self,
        values: Vec<f64>,
        shape: Vec<usize>,
        requires_grad: bool,
    ) -> Result<TensorId, TensorError> {
        if values.len() != shape.iter().product::<usize>() {
            return Err(TensorError::BadLeaf {
                len: values.len(),
                shape,
            });
        }
        Ok(self.push(values, shape, requires_grad, Op::Leaf))
    }

    /// Matrix product `a[m,k] · b[k,n] -> [m,n]`.
    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, TensorError> {
        let (ash, bsh) = (&self.nodes[a.0].shape, &self.nodes[b.0].shape);
        if ash.len() != 2 {
            return Err(TensorError::NotMatrix {
                op: "matmul",
                shape: ash.clone(),
            });
        }
        if bsh.len() != 2 {
            return Err(TensorError::NotMatrix {
                op: "matmul",
                shape: bsh.clone(),
            });
        }
        if ash[1] != bsh[0] {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: ash.clone(),
                rhs: bsh.clone(),
            });
        }
        let (m, k, n) = (ash[0], ash[1], bsh[1]);
        let out = mm(&self.nodes[a.0].values, &self.nodes[b.0].values, m, k, n);
        let rg = self.nodes[a.0].requires_grad || self.nodes[b.0].requires_grad;
        Ok(self.push(out, vec![m, n], rg, Op::MatMul { a, b }))
    }

    fn binary_same_shape(
        &mut self,
        opname: &'static str,
        a: TensorId,
        b: TensorId,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<TensorId, TensorError> {
        if self.nodes[a.0].shape != self.nodes[b.0].shape {
            return Err(TensorError::ShapeMismatch {
                op: opname,
                lhs: self.nodes[a.0].shape.clone(),
                rhs: self.nodes[b.0].shape.clone(),
            });
        }
        let out: Vec<f64> = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(&x, &y)| f(x, y))
            .collect();
        let shape = self.nodes[a.0].shape.clone();
        let rg = self.nodes[a.0].requires_grad || self.nodes[b.0].requires_grad;
        Ok(self.push(out, shape, rg, op))
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, TensorError> {
        self.binary_same_shape("add", a, b, |x, y| x + y, Op::Add { a, b })
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, TensorError> {
        self.binary_same_shape("sub", a, b, |x, y| x - y, Op::Sub { a, b })
    }

    /// Hadamard (elementwise) product.
    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, TensorError> {
        self.binary_same_shape("mul", a, b, |x, y| x * y, Op::Mul { a, b })
    }

    /// Broadcast a bias vector `[n]` over the rows of `a[m,n]`. This is the
    /// only broadcasting form the tape supports.
    pub fn add_bias(&mut self, a: TensorId, bias: TensorId) -> Result<TensorId, TensorError> {
        let ash = self.nodes[a.0].shape.clone();
        let bsh = self.nodes[bias.0].shape.clone();
        if ash.len() != 2 || bsh.len() != 1 || bsh[0] != ash[1] {
            return Err(TensorError::ShapeMismatch {
                op: "add_bias",
                lhs: ash,
                rhs: bsh,
            });
        }
        let (m, n) = (ash[0], ash[1]);
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..n {
                out.push(self.nodes[a.0].values[i * n + j] + self.nodes[bias.0].values[j]);
            }
        }
        let rg = self.nodes[a.0].requires_grad || self.nodes[bias.0].requires_grad;
        Ok(self.push(out, vec![m, n], rg, Op::AddBias { a, bias }))
    }

    pub fn scale(&mut self, a: TensorId, factor: f64) -> TensorId {
        let out: Vec<f64> = self.nodes[a.0].values.iter().map(|&x| x * factor).collect();
        let shape = self.nodes[a.0].shape.clone();
        let rg = self.nodes[a.0].requires_grad;
        self.push(out, shape, rg, Op::Scale { a, factor })
    }

    pub fn neg(&mut self, a: TensorId) -> TensorId {
        let out: Vec<f64> = self.nodes[a.0].values.iter().map(|&x| -x).collect();
        let shape = self.nodes[a.0].shape.clone();
        let rg = self.nodes[a.0].requires_grad;
        self.push(out, shape, rg, Op::Neg { a })
    }

    pub fn activation(&mut self, kind: Activation, a: TensorId) -> TensorId {
        let out: Vec<f64> = self.nodes[a.0]
            .values
            .iter()
            .map(|&x| apply_activation(kind, x))
            .collect();
        let shape = self.nodes[a.0].shape.clone();
        let rg = self.nodes[a.0].requires_grad;
        self.push(out, shape, rg, Op::Act { a, kind })
    }

    pub fn relu(&mut self, a: TensorId) -> TensorId {
        self.activation(Activation::Relu, a)
    }

    pub fn leaky_relu(&mut self, a: TensorId, slope: f64) -> TensorId {
        self.activation(Activation::LeakyRelu(slope), a)
    }

    pub fn tanh(&mut self, a: TensorId) -> TensorId {
        self.activation(Activation::Tanh, a)
    }

    pub fn sigmoid(&mut self, a: TensorId) -> TensorId {
        self.activation(Activation::Sigmoid, a)
    }

    /// log σ(x), computed as −softplus(−x). Finite for any finite logit.
    pub fn log_sigmoid(&mut self, a: TensorId) -> TensorId {
        let out: Vec<f64> = self.nodes[a.0].values.iter().map(|&x| -softplus(-x)).collect();
        let shape = self.nodes[a.0].shape.clone();
        let rg = self.nodes[a.0].requires_grad;
        self.push(out, shape, rg, Op::LogSigmoid { a })
    }

    /// Mean over all elements; output shape `[1]`.
    pub fn mean(&mut self, a: TensorId) -> TensorId {
        let n = self.nodes[a.0].values.len() as f64;
        let s: f64 = self.nodes[a.0].values.iter().sum();
        let rg = self.nodes[a.0].requires_grad;
        self.push(vec![s / n], vec![1], rg, Op::Mean { a })
    }

    /// Sum over all elements; output shape `[1]`.
    pub fn sum(&mut self, a: TensorId) -> TensorId {
        let s: f64 = self.nodes[a.0].values.iter().sum();
        let rg = self.nodes[a.0].requires_grad;
        self.push(vec![s], vec![1], rg, Op::Sum { a })
    }

    /// Binary cross entropy against a constant target, fused with the
    /// sigmoid for stability and averaged over all elements:
    /// mean(t·softplus(−logit) + (1−t)·softplus(logit)). This form keeps the
    /// tiny tail values (≈ e^−|logit|) instead of losing them to absorption,
    /// and is finite for |logit| ≤ 50 and far beyond.
    pub fn bce_from_logits(&mut self, logits: TensorId, target: f64) -> TensorId {
        debug_assert!((0.0..=1.0).contains(&target), "target must be in [0,1]");
        let n = self.nodes[logits.0].values.len() as f64;
        let s: f64 = self.nodes[logits.0]
            .values
            .iter()
            .map(|&l| target * softplus(-l) + (1.0 - target) * softplus(l))
            .sum();
        let rg = self.nodes[logits.0].requires_grad;
        self.push(vec![s / n], vec![1], rg, Op::BceFromLogits { logits, target })
    }

    /// Reset every stored gradient buffer to zeros (buffers stay allocated,
    /// so a subsequent backward reproduces the same values).
    pub fn zero_grads(&mut self) {
        for node in &mut self.nodes {
            if let Some(g) = node.grad.as_mut() {
                g.iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }

    /// Drop every gradient buffer: all grads become absent.
    pub fn clear_grads(&mut self) {
        for node in &mut self.nodes {
            node.grad = None;
        }
    }

    /// Reverse sweep: seeds the scalar loss with 1 and accumulates adjoints
    /// into every `requires_grad` tensor reachable from it. Each recorded op
    /// is visited exactly once, in reverse creation order.
    pub fn backward(&mut self, loss: TensorId) -> Result<(), TensorError> {
        if self.nodes.is_empty() {
            return Err(TensorError::EmptyTape);
        }
        if self.nodes[loss.0].numel() != 1 {
            return Err(TensorError::NonScalarLoss {
                shape: self.nodes[loss.0].shape.clone(),
            });
        }
        for node in &mut self.nodes {
            if node.requires_grad && node.grad.is_none() {
                node.grad = Some(vec![0.0; node.values.len()]);
            }
        }
        if let Some(g) = self.nodes[loss.0].grad.as_mut() {
            g[0] += 1.0;
        }

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let out_grad = match self.nodes[i].grad.as_ref() {
                Some(g) => g.clone(),
                None => continue,
            };
            let op = self.ops[i].clone();
            match op {
                Op::Leaf => {}
                Op::MatMul { a, b } => {
                    let ash = &self.nodes[a.0].shape;
                    let (m, k) = (ash[0], ash[1]);
                    let n = self.nodes[b.0].shape[1];
                    if self.nodes[a.0].requires_grad {
                        let da = mm_abt(&out_grad, &self.nodes[b.0].values, m, n, k);
                        self.accumulate(a, &da);
                    }
                    if self.nodes[b.0].requires_grad {
                        let db = mm_atb(&self.nodes[a.0].values, &out_grad, m, k, n);
                        self.accumulate(b, &db);
                    }
                }
                Op::Add { a, b } => {
                    if self.nodes[a.0].requires_grad {
                        self.accumulate(a, &out_grad);
                    }
                    if self.nodes[b.0].requires_grad {
                        self.accumulate(b, &out_grad);
                    }
                }
                Op::Sub { a, b } => {
                    if self.nodes[a.0].requires_grad {
                        self.accumulate(a, &out_grad);
                    }
                    if self.nodes[b.0].requires_grad {
                        let db: Vec<f64> = out_grad.iter().map(|&g| -g).collect();
                        self.accumulate(b, &db);
                    }
                }
                Op::Mul { a, b } => {
                    if self.nodes[a.0].requires_grad {
                        let da: Vec<f64> = out_grad
                            .iter()
                            .zip(&self.nodes[b.0].values)
                            .map(|(&g, &y)| g * y)
                            .collect();
                        self.accumulate(a, &da);
                    }
                    if self.nodes[b.0].requires_grad {
                        let db: Vec<f64> = out_grad
                            .iter()
                            .zip(&self.nodes[a.0].values)
                            .map(|(&g, &x)| g * x)
                            .collect();
                        self.accumulate(b, &db);
                    }
                }
                Op::AddBias { a, bias } => {
                    if self.nodes[a.0].requires_grad {
                        self.accumulate(a, &out_grad);
                    }
                    if self.nodes[bias.0].requires_grad {
                        let n = self.nodes[bias.0].shape[0];
                        let m = out_grad.len() / n;
                        let mut db = vec![0.0; n];
                        for i in 0..m {
                            for j in 0..n {
                                db[j] += out_grad[i * n + j];
                            }
                        }
                        self.accumulate(bias, &db);
                    }
                }
                Op::Scale { a, factor } => {
                    if self.nodes[a.0].requires_grad {
                        let da: Vec<f64> = out_grad.iter().map(|&g| g * factor).collect();
                        self.accumulate(a, &da);
                    }
                }
                Op::Neg { a } => {
                    if self.nodes[a.0].requires_grad {
                        let da: Vec<f64> = out_grad.iter().map(|&g| -g).collect();
                        self.accumulate(a, &da);
                    }
                }
                Op::Act { a, kind } => {
                    if self.nodes[a.0].requires_grad {
                        let da: Vec<f64> = match kind {
                            Activation::Relu => out_grad
                                .iter()
                                .zip(&self.nodes[a.0].values)
                                .map(|(&g, &x)| if x > 0.0 { g } else { 0.0 })
                                .collect(),
                            Activation::LeakyRelu(slope) => out_grad
                                .iter()
                                .zip(&self.nodes[a.0].values)
                                .map(|(&g, &x)| if x > 0.0 { g } else { slope * g })
                                .collect(),
                            Activation::Tanh => out_grad
                                .iter()
                                .zip(&self.nodes[i].values)
                                .map(|(&g, &y)| g * (1.0 - y * y))
                                .collect(),
                            Activation::Sigmoid => out_grad
                                .iter()
                                .zip(&self.nodes[i].values)
                                .map(|(&g, &y)| g * y * (1.0 - y))
                                .collect(),
                        };
                        self.accumulate(a, &da);
                    }
                }
                Op::LogSigmoid { a } => {
                    if self.nodes[a.0].requires_grad {
                        // d/dx log σ(x) = σ(−x)
                        let da: Vec<f64> = out_grad
                            .iter()
                            .zip(&self.nodes[a.0].values)
                            .map(|(&g, &x)| g * sigmoid(-x))
                            .collect();
                        self.accumulate(a, &da);
                    }
                }
                Op::Mean { a } => {
                    if self.nodes[a.0].requires_grad {
                        let n = self.nodes[a.0].values.len();
                        let g = out_grad[0] / n as f64;
                        let da = vec![g; n];
                        self.accumulate(a, &da);
                    }
                }
                Op::Sum { a } => {
                    if self.nodes[a.0].requires_grad {
                        let n = self.nodes[a.0].values.len();
                        let da = vec![out_grad[0]; n];
                        self.accumulate(a, &da);
                    }
                }
                Op::BceFromLogits { logits, target } => {
                    if self.nodes[logits.0].requires_grad {
                        let n = self.nodes[logits.0].values.len() as f64;
                        let da: Vec<f64> = self.nodes[logits.0]
                            .values
                            .iter()
                            .map(|&l| out_grad[0] * (sigmoid(l) - target) / n)
                            .collect();
                        self.accumulate(logits, &da);
                    }
                }
            }
        }
        Ok(())
    }

    fn accumulate(&mut self, id: TensorId, contribution: &[f64]) {
        if let Some(g) = self.nodes[id.0].grad.as_mut() {
            for (gv, &c) in g.iter_mut().zip(contribution) {
                *gv += c;
            }
        }
    }
}

/// Row-major matrix product `a[m,k] · b[k,n]`.
pub fn mm(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let aip = a[i * k + p];
            let brow = &b[p * n..(p + 1) * n];
            let crow = &mut c[i * n..(i + 1) * n];
            for j in 0..n {
                crow[j] += aip * brow[j];
            }
        }
    }
    c
}

/// `g[m,n] · bᵀ` where b is `[k,n]`; result `[m,k]`.
fn mm_abt(g: &[f64], b: &[f64], m: usize, n: usize, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * k];
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let brow = &b[p * n..(p + 1) * n];
            let mut s = 0.0;
            for j in 0..n {
                s += grow[j] * brow[j];
            }
            out[i * k + p] = s;
        }
    }
    out
}

/// `aᵀ · g` where a is `[m,k]`, g is `[m,n]`; result `[k,n]`.
fn mm_atb(a: &[f64], g: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; k * n];
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            let orow = &mut out[p * n..(p + 1) * n];
            for j in 0..n {
                orow[j] += aip * grow[j];
            }
        }
    }
    out
}
