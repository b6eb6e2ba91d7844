use rand::Rng;

use crate::error::{IsacError, Result};
use crate::qnet::Experience;

/// Fully connected layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn affine(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.inputs).zip(&self.biases).map(|(row, b)| {
            row.iter().zip(input).fold(*b, |acc, (w, x)| acc + w * x)
        }));
    }
}

/// Feedforward Q-network: affine layers with ReLU between them and a linear
/// output layer, one output per action.
#[derive(Debug, Clone, PartialEq)]
pub struct QNet {
    layers: Vec<Layer>,
}

/// Gradient with the same shape as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<Layer>,
}

impl QNet {
    /// Scaled-uniform initialization, `±sqrt(6 / (fan_in + fan_out))`, zero
    /// biases.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(dims);
        for layer in &mut net.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..=limit);
            }
        }
        net
    }

    pub fn zeros(dims: &[usize]) -> Self {
        assert!(dims.len() >= 2, "a network needs input and output widths");
        Self {
            layers: dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(IsacError::config("network has no layers"));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(IsacError::DimensionMismatch {
                    expected: pair[0].outputs,
                    got: pair[1].inputs,
                });
            }
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(IsacError::DimensionMismatch {
                    expected: l.inputs * l.outputs,
                    got: l.weights.len(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].inputs];
        d.extend(self.layers.iter().map(|l| l.outputs));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn n_actions(&self) -> usize {
        self.layers.last().map(|l| l.outputs).unwrap_or(0)
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(IsacError::DimensionMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.affine(&cur, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Post-activation outputs of every layer, input first.
    fn activations(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.affine(&acts[i], &mut out);
            if i < last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        acts
    }

    /// Bellman target `r + γ max_a' Q_target(s', a')`.
    pub fn bellman_target(target: &QNet, e: &Experience, gamma: f64) -> Result<f64> {
        let next = target.forward(&e.next_state)?;
        let best = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(e.reward + gamma * best)
    }

    /// Mean squared TD error over the batch and its gradient with respect to
    /// this network's parameters. Targets come from `target` and are held
    /// constant.
    pub fn loss_and_gradient(
        &self,
        target: &QNet,
        batch: &[&Experience],
        gamma: f64,
    ) -> Result<(f64, Gradient)> {
        let mut grad = Gradient {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs, l.outputs))
                .collect(),
        };
        if batch.is_empty() {
            return Ok((0.0, grad));
        }
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        let n_layers = self.layers.len();
        for e in batch {
            if e.state.len() != self.input_dim() {
                return Err(IsacError::DimensionMismatch {
                    expected: self.input_dim(),
                    got: e.state.len(),
                });
            }
            if e.action >= self.n_actions() {
                return Err(IsacError::IndexOutOfRange {
                    index: e.action,
                    len: self.n_actions(),
                });
            }
            let y = Self::bellman_target(target, e, gamma)?;
            let acts = self.activations(&e.state);
            let q = acts[n_layers][e.action];
            let err = q - y;
            loss += err * err * scale;

            // delta = dL/d(pre-activation) of the current layer
            let mut delta = vec![0.0; self.n_actions()];
            delta[e.action] = 2.0 * err * scale;
            for li in (0..n_layers).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                let g = &mut grad.layers[li];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    g.biases[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    row.iter_mut().zip(input).for_each(|(gw, x)| *gw += d * x);
                }
                if li == 0 {
                    break;
                }
                let mut prev = vec![0.0; layer.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
                }
                // ReLU: the input to this layer is the previous layer's output
                for (p, &a) in prev.iter_mut().zip(input) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        Ok((loss, grad))
    }

    /// One gradient step on the batch; returns the pre-step loss.
    pub fn train_step(
        &mut self,
        target: &QNet,
        batch: &[&Experience],
        gamma: f64,
        optimizer: &mut Optimizer,
    ) -> Result<f64> {
        let (loss, grad) = self.loss_and_gradient(target, batch, gamma)?;
        optimizer.apply(self, &grad);
        Ok(loss)
    }

    /// Flat parameter count, weights then biases per layer.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Mutable access to the `index`-th parameter in flat order.
    pub fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            if index < l.weights.len() {
                return &mut l.weights[index];
            }
            index -= l.weights.len();
            if index < l.biases.len() {
                return &mut l.biases[index];
            }
            index -= l.biases.len();
        }
        panic!("parameter index out of range");
    }
}

impl Gradient {
    pub fn get(&self, mut index: usize) -> f64 {
        for l in &self.layers {
            if index < l.weights.len() {
                return l.weights[index];
            }
            index -= l.weights.len();
            if index < l.biases.len() {
                return l.biases[index];
            }
            index -= l.biases.len();
        }
        panic!("parameter index out of range");
    }
}

/// Parameter update rule.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        step: u64,
        m: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
    },
}

impl Optimizer {
    pub fn sgd(lr: f64) -> Self {
        Optimizer::Sgd { lr }
    }

    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn apply(&mut self, net: &mut QNet, grad: &Gradient) {
        match self {
            Optimizer::Sgd { lr } => {
                for (l, g) in net.layers.iter_mut().zip(&grad.layers) {
                    l.weights.iter_mut().zip(&g.weights).for_each(|(w, d)| *w -= *lr * d);
                    l.biases.iter_mut().zip(&g.biases).for_each(|(b, d)| *b -= *lr * d);
                }
            }
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
                step,
                m,
                v,
            } => {
                if m.is_empty() {
                    for g in &grad.layers {
                        let n = g.weights.len() + g.biases.len();
                        m.push(vec![0.0; n]);
                        v.push(vec![0.0; n]);
                    }
                }
                *step += 1;
                let c1 = 1.0 - beta1.powi(*step as i32);
                let c2 = 1.0 - beta2.powi(*step as i32);
                for (li, (l, g)) in net.layers.iter_mut().zip(&grad.layers).enumerate() {
                    let params = l.weights.iter_mut().chain(l.biases.iter_mut());
                    let grads = g.weights.iter().chain(&g.biases);
                    for (((p, &d), mi), vi) in params.zip(grads).zip(&mut m[li]).zip(&mut v[li]) {
                        *mi = *beta1 * *mi + (1.0 - *beta1) * d;
                        *vi = *beta2 * *vi + (1.0 - *beta2) * d * d;
                        let mhat = *mi / c1;
                        let vhat = *vi / c2;
                        *p -= *lr * mhat / (vhat.sqrt() + *eps);
                    }
                }
            }
        }
    }
}
