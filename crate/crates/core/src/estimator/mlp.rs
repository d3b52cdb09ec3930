//! Small fully-connected regression network trained with Adam.
//!
//! Hidden layers use ReLU, the output layer is linear and has two units
//! (real and imaginary part of the coefficient). Weights are stored
//! row-major, `weights[o * inputs + i]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const OUTPUT_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.inputs).zip(&self.bias).map(|(row, b)| {
            b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        }));
    }
}

/// Uniform Xavier initialization on `±sqrt(6 / (fan_in + fan_out))`, zero bias.
pub fn xavier_init<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Dense {
    let bound = xavier_bound(fan_in, fan_out);
    let mut layer = Dense::zeros(fan_in, fan_out);
    for w in &mut layer.weights {
        *w = rng.random_range(-bound..=bound);
    }
    layer
}

pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Adam first/second moments for one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub m_w: Vec<f64>,
    pub v_w: Vec<f64>,
    pub m_b: Vec<f64>,
    pub v_b: Vec<f64>,
}

impl Moments {
    fn zeros_like(layer: &Dense) -> Self {
        Moments {
            m_w: vec![0.0; layer.weights.len()],
            v_w: vec![0.0; layer.weights.len()],
            m_b: vec![0.0; layer.bias.len()],
            v_b: vec![0.0; layer.bias.len()],
        }
    }
}

/// Gradients with the same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|g| *g *= s);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub adam: AdamConfig,
    pub moments: Vec<Moments>,
    pub step: u64,
}

/// Per-layer activations kept for the backward pass.
struct Trace {
    /// Input to each layer (post-activation of the previous one).
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of each layer.
    pre: Vec<Vec<f64>>,
}

impl Mlp {
    /// Network `input_dim -> hidden[0] -> ... -> 2`, Xavier-initialized.
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden: &[usize], adam: AdamConfig, rng: &mut R) -> Result<Self> {
        if input_dim == 0 || hidden.contains(&0) {
            return Err(Error::param("hidden", "layer widths must be positive"));
        }
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(OUTPUT_DIM);
        let layers: Vec<Dense> = sizes.windows(2).map(|w| xavier_init(w[0], w[1], rng)).collect();
        let moments = layers.iter().map(Moments::zeros_like).collect();
        Ok(Mlp {
            layers,
            adam,
            moments,
            step: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Shape {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for p in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *p = it.next().unwrap_or_default();
            }
        }
        Ok(())
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }

    fn run(&self, input: &[f64]) -> Trace {
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        let mut x = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.apply(&x, &mut z);
            let next = if i + 1 < n {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                z.clone()
            };
            inputs.push(std::mem::replace(&mut x, next));
            pre.push(z);
        }
        inputs.push(x);
        Trace { inputs, pre }
    }

    pub fn forward(&self, input: &[f64]) -> Result<[f64; OUTPUT_DIM]> {
        self.check_input(input)?;
        let trace = self.run(input);
        let out = trace.inputs.last().expect("output layer");
        Ok([out[0], out[1]])
    }

    /// Signs of every hidden pre-activation; used to detect ReLU kinks.
    pub fn activation_pattern(&self, input: &[f64]) -> Result<Vec<bool>> {
        self.check_input(input)?;
        let trace = self.run(input);
        let hidden = &trace.pre[..trace.pre.len() - 1];
        Ok(hidden.iter().flatten().map(|&z| z > 0.0).collect())
    }

    /// Mean over the batch of the squared error summed over both outputs,
    /// and its gradient.
    pub fn loss_and_grad(&self, batch: &[(&[f64], [f64; OUTPUT_DIM])]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::Shape { expected: 1, got: 0 });
        }
        let mut grads = Gradients {
            layers: self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
        };
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for (input, target) in batch {
            self.check_input(input)?;
            let trace = self.run(input);
            let out = trace.inputs.last().expect("output layer");
            let mut delta: Vec<f64> = out.iter().zip(target).map(|(o, t)| o - t).collect();
            loss += delta.iter().map(|d| d * d).sum::<f64>();
            delta.iter_mut().for_each(|d| *d *= 2.0 * scale);

            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let x = &trace.inputs[li];
                let g = &mut grads.layers[li];
                for (o, d) in delta.iter().enumerate() {
                    g.bias[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    row.iter_mut().zip(x).for_each(|(gw, xi)| *gw += d * xi);
                }
                if li == 0 {
                    break;
                }
                let prev_pre = &trace.pre[li - 1];
                let mut next = vec![0.0; layer.inputs];
                for (o, d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    next.iter_mut().zip(row).for_each(|(n, w)| *n += d * w);
                }
                next.iter_mut().zip(prev_pre).for_each(|(n, z)| {
                    if *z <= 0.0 {
                        *n = 0.0
                    }
                });
                delta = next;
            }
        }
        Ok((loss * scale, grads))
    }

    pub fn loss(&self, batch: &[(&[f64], [f64; OUTPUT_DIM])]) -> Result<f64> {
        let mut total = 0.0;
        for (input, target) in batch {
            let out = self.forward(input)?;
            total += out.iter().zip(target).map(|(o, t)| (o - t).powi(2)).sum::<f64>();
        }
        Ok(total / batch.len() as f64)
    }

    /// One bias-corrected Adam update.
    pub fn adam_step(&mut self, grads: &Gradients) -> Result<()> {
        if grads.layers.len() != self.layers.len() {
            return Err(Error::Shape {
                expected: self.layers.len(),
                got: grads.layers.len(),
            });
        }
        for (l, g) in self.layers.iter().zip(&grads.layers) {
            if l.weights.len() != g.weights.len() || l.bias.len() != g.bias.len() {
                return Err(Error::Shape {
                    expected: l.weights.len() + l.bias.len(),
                    got: g.weights.len() + g.bias.len(),
                });
            }
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.adam;
        let c1 = 1.0 - beta1.powf(self.step as f64);
        let c2 = 1.0 - beta2.powf(self.step as f64);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= learning_rate * (*m / c1) / ((*v / c2).sqrt() + epsilon);
        };
        for ((layer, mom), g) in self.layers.iter_mut().zip(&mut self.moments).zip(&grads.layers) {
            for (i, &gw) in g.weights.iter().enumerate() {
                update(&mut layer.weights[i], &mut mom.m_w[i], &mut mom.v_w[i], gw);
            }
            for (i, &gb) in g.bias.iter().enumerate() {
                update(&mut layer.bias[i], &mut mom.m_b[i], &mut mom.v_b[i], gb);
            }
        }
        Ok(())
    }

    /// Checks layer chaining, output width and Adam state shapes.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::param("layers", reason));
        if self.layers.is_empty() {
            return bad("network has no layers".into());
        }
        if self.moments.len() != self.layers.len() {
            return bad("adam moments do not match layers".into());
        }
        for (i, (l, m)) in self.layers.iter().zip(&self.moments).enumerate() {
            if l.inputs == 0 || l.outputs == 0 {
                return bad(format!("layer {i} has a zero dimension"));
            }
            let expected = l.inputs.checked_mul(l.outputs);
            if expected != Some(l.weights.len()) || l.bias.len() != l.outputs {
                return bad(format!("layer {i} parameter shape mismatch"));
            }
            if m.m_w.len() != l.weights.len()
                || m.v_w.len() != l.weights.len()
                || m.m_b.len() != l.outputs
                || m.v_b.len() != l.outputs
            {
                return bad(format!("layer {i} adam state shape mismatch"));
            }
            if i > 0 && self.layers[i - 1].outputs != l.inputs {
                return bad(format!("layer {i} input does not chain"));
            }
            let all_finite = l.weights.iter().chain(&l.bias).all(|v| v.is_finite());
            if !all_finite {
                return bad(format!("layer {i} has non-finite parameters"));
            }
        }
        if self.layers.last().map(|l| l.outputs) != Some(OUTPUT_DIM) {
            return bad(format!("output width must be {OUTPUT_DIM}"));
        }
        let a = self.adam;
        let adam_ok = a.learning_rate > 0.0
            && (0.0..1.0).contains(&a.beta1)
            && (0.0..1.0).contains(&a.beta2)
            && a.epsilon > 0.0;
        if !adam_ok {
            return Err(Error::param("adam", "hyper-parameters out of range"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: Mlp = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }
}
