//! Small dense network with a dueling Q head, hand-written backprop, Adam
//! and a checksummed binary checkpoint.

mod adam;
mod checkpoint;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{load_checkpoint, load_checkpoint_for, save_checkpoint, CheckpointHeader, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lidar::STATE_DIM;
use crate::world::N_ACTIONS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected layer; `weights` is `out x in`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    /// Weights uniform in `+-1/sqrt(in_dim)`, zero bias.
    pub fn init(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        Self {
            in_dim,
            out_dim,
            weights: (0..in_dim * out_dim).map(|_| rng.gen_range(-bound..bound)).collect(),
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Pre-activation `W x + b`.
    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    /// Accumulate parameter gradients into `g` (weights then bias) and
    /// return the gradient with respect to the input.
    fn backward(&self, x: &[f64], z: &[f64], upstream: &[f64], g: &mut [f64]) -> Vec<f64> {
        let (gw, gb) = g.split_at_mut(self.weights.len());
        let mut dx = vec![0.0; self.in_dim];
        for o in 0..self.out_dim {
            let dz = upstream[o] * self.activation.derivative(z[o]);
            if dz == 0.0 {
                continue;
            }
            gb[o] += dz;
            let row = o * self.in_dim;
            for i in 0..self.in_dim {
                gw[row + i] += dz * x[i];
                dx[i] += dz * self.weights[row + i];
            }
        }
        dx
    }

    fn validate(&self) -> Result<()> {
        if self.weights.len() != self.in_dim * self.out_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim * self.out_dim,
                got: self.weights.len(),
            });
        }
        if self.bias.len() != self.out_dim {
            return Err(Error::DimensionMismatch {
                expected: self.out_dim,
                got: self.bias.len(),
            });
        }
        if self.weights.iter().chain(&self.bias).any(|v| !v.is_finite()) {
            return Err(Error::config("layer", "non-finite parameter"));
        }
        Ok(())
    }
}

/// Layer sizes of a dueling network. Hidden layers use ReLU; the last layer
/// of each head is linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub input: usize,
    pub trunk: Vec<usize>,
    pub value_hidden: Vec<usize>,
    pub advantage_hidden: Vec<usize>,
    pub actions: usize,
}

impl Default for Topology {
    fn default() -> Self {
        Self {
            input: STATE_DIM,
            trunk: vec![64, 64],
            value_hidden: vec![32],
            advantage_hidden: vec![32],
            actions: N_ACTIONS,
        }
    }
}

impl Topology {
    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.actions == 0 {
            return Err(Error::config("topology", "input and action dimensions must be positive"));
        }
        if self.trunk.iter().chain(&self.value_hidden).chain(&self.advantage_hidden).any(|&n| n == 0) {
            return Err(Error::config("topology", "hidden layers must be non-empty"));
        }
        Ok(())
    }
}

fn build_stack(input: usize, hidden: &[usize], last: Option<usize>, rng: &mut impl Rng) -> Vec<DenseLayer> {
    let mut layers = Vec::new();
    let mut d = input;
    for &h in hidden {
        layers.push(DenseLayer::init(d, h, Activation::Relu, rng));
        d = h;
    }
    if let Some(out) = last {
        layers.push(DenseLayer::init(d, out, Activation::Identity, rng));
    }
    layers
}

/// Dueling Q network: `Q(s, a) = k * (V(s) + A(s, a) - mean A(s, .))` on
/// the input `s * input_scale`. `input_scale` and the output gain `k` are
/// fixed, not trained; they only bring world-unit states and rewards in the
/// thousands to a range the layers handle well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuelingNet {
    pub topology: Topology,
    pub input_scale: Vec<f64>,
    pub output_scale: f64,
    pub trunk: Vec<DenseLayer>,
    pub value_head: Vec<DenseLayer>,
    pub advantage_head: Vec<DenseLayer>,
}

/// Intermediate values of one forward pass, enough to backpropagate.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Inputs to every layer (trunk, value head, advantage head order).
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of every layer in the same order.
    pre: Vec<Vec<f64>>,
}

/// Forward passes recorded for a later backward call.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    traces: Vec<Trace>,
}

impl Tape {
    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn clear(&mut self) {
        self.traces.clear();
    }
}

/// Flat parameter gradient in [`DuelingNet::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

impl DuelingNet {
    pub fn new(topology: Topology, seed: u64) -> Result<Self> {
        topology.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trunk = build_stack(topology.input, &topology.trunk, None, &mut rng);
        let feat = *topology.trunk.last().unwrap_or(&topology.input);
        let value_head = build_stack(feat, &topology.value_hidden, Some(1), &mut rng);
        let advantage_head = build_stack(feat, &topology.advantage_hidden, Some(topology.actions), &mut rng);
        Ok(Self {
            input_scale: vec![1.0; topology.input],
            output_scale: 1.0,
            topology,
            trunk,
            value_head,
            advantage_head,
        })
    }

    pub fn with_scaling(mut self, input_scale: Vec<f64>, output_scale: f64) -> Result<Self> {
        if input_scale.len() != self.topology.input {
            return Err(Error::DimensionMismatch {
                expected: self.topology.input,
                got: input_scale.len(),
            });
        }
        if !output_scale.is_finite() || output_scale == 0.0 || input_scale.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("scaling", "must be finite and non-zero"));
        }
        self.input_scale = input_scale;
        self.output_scale = output_scale;
        Ok(self)
    }

    pub fn n_actions(&self) -> usize {
        self.topology.actions
    }

    fn layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.trunk.iter().chain(&self.value_head).chain(&self.advantage_head)
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut DenseLayer> {
        self.trunk
            .iter_mut()
            .chain(self.value_head.iter_mut())
            .chain(self.advantage_head.iter_mut())
    }

    pub fn n_params(&self) -> usize {
        self.layers().map(DenseLayer::n_params).sum()
    }

    /// All parameters, layer by layer, weights before bias.
    pub fn params(&self) -> Vec<f64> {
        self.layers()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                got: flat.len(),
            });
        }
        let mut it = flat.iter().copied();
        for l in self.layers_mut() {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|p| *p = it.next().expect("length checked"));
        }
        Ok(())
    }

    /// Apply `f(index, param)` to every parameter in flat order.
    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        let mut k = 0;
        for l in self.layers_mut() {
            for p in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                f(k, p);
                k += 1;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        let t = &self.topology;
        let check = |layers: &[DenseLayer], input: usize, dims: Vec<usize>| -> Result<()> {
            if layers.len() != dims.len() {
                return Err(Error::DimensionMismatch {
                    expected: dims.len(),
                    got: layers.len(),
                });
            }
            let mut d = input;
            for (l, &out) in layers.iter().zip(&dims) {
                if l.in_dim != d || l.out_dim != out {
                    return Err(Error::DimensionMismatch { expected: out, got: l.out_dim });
                }
                l.validate()?;
                d = out;
            }
            Ok(())
        };
        check(&self.trunk, t.input, t.trunk.clone())?;
        let feat = *t.trunk.last().unwrap_or(&t.input);
        let mut v = t.value_hidden.clone();
        v.push(1);
        check(&self.value_head, feat, v)?;
        let mut a = t.advantage_hidden.clone();
        a.push(t.actions);
        check(&self.advantage_head, feat, a)?;
        if self.input_scale.len() != t.input {
            return Err(Error::DimensionMismatch {
                expected: t.input,
                got: self.input_scale.len(),
            });
        }
        Ok(())
    }

    fn run(&self, state: &[f64]) -> Result<(Vec<f64>, Trace)> {
        if state.len() != self.topology.input {
            return Err(Error::DimensionMismatch {
                expected: self.topology.input,
                got: state.len(),
            });
        }
        let mut trace = Trace {
            inputs: Vec::new(),
            pre: Vec::new(),
        };
        let stack = |layers: &[DenseLayer], mut x: Vec<f64>, trace: &mut Trace| {
            for l in layers {
                let z = l.affine(&x);
                let y = z.iter().map(|&v| l.activation.apply(v)).collect();
                trace.inputs.push(x);
                trace.pre.push(z);
                x = y;
            }
            x
        };
        let x: Vec<f64> = state.iter().zip(&self.input_scale).map(|(s, k)| s * k).collect();
        let feat = stack(&self.trunk, x, &mut trace);
        let v = stack(&self.value_head, feat.clone(), &mut trace)[0];
        let a = stack(&self.advantage_head, feat, &mut trace);
        Ok((dueling_combine(v, &a, self.output_scale), trace))
    }

    /// Q values for one state. Read-only, so it can run concurrently on a
    /// shared network.
    pub fn forward(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.run(state).map(|(q, _)| q)
    }

    /// Forward pass that also records what backward needs.
    pub fn forward_recorded(&self, state: &[f64], tape: &mut Tape) -> Result<Vec<f64>> {
        let (q, trace) = self.run(state)?;
        tape.traces.push(trace);
        Ok(q)
    }

    /// Backpropagate `d_loss/d_q` for each recorded pass (in recording
    /// order) and sum the parameter gradients. Consumes the tape.
    pub fn backward(&self, tape: &mut Tape, upstream: &[Vec<f64>]) -> Result<Gradients> {
        if tape.is_empty() {
            return Err(Error::NoForwardRecorded);
        }
        if upstream.len() != tape.len() {
            return Err(Error::DimensionMismatch {
                expected: tape.len(),
                got: upstream.len(),
            });
        }
        let mut grad = vec![0.0; self.n_params()];
        let offsets: Vec<usize> = self
            .layers()
            .scan(0, |acc, l| {
                let o = *acc;
                *acc += l.n_params();
                Some(o)
            })
            .collect();
        let (nt, nv) = (self.trunk.len(), self.value_head.len());
        for (trace, dq) in tape.traces.iter().zip(upstream) {
            if dq.len() != self.topology.actions {
                return Err(Error::DimensionMismatch {
                    expected: self.topology.actions,
                    got: dq.len(),
                });
            }
            let (dv, da) = dueling_backward(dq, self.output_scale);
            let back = |layers: &[DenseLayer], first: usize, mut d: Vec<f64>, grad: &mut [f64]| {
                for (k, l) in layers.iter().enumerate().rev() {
                    let idx = first + k;
                    let g = &mut grad[offsets[idx]..offsets[idx] + l.n_params()];
                    d = l.backward(&trace.inputs[idx], &trace.pre[idx], &d, g);
                }
                d
            };
            let d_feat_v = back(&self.value_head, nt, vec![dv], &mut grad);
            let d_feat_a = back(&self.advantage_head, nt + nv, da, &mut grad);
            let d_feat: Vec<f64> = d_feat_v.iter().zip(&d_feat_a).map(|(a, b)| a + b).collect();
            back(&self.trunk, 0, d_feat, &mut grad);
        }
        tape.clear();
        Ok(Gradients(grad))
    }
}

/// `k * (v + a - mean(a))`.
pub fn dueling_combine(v: f64, a: &[f64], k: f64) -> Vec<f64> {
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    a.iter().map(|x| k * (v + x - mean)).collect()
}

/// Gradients of the dueling combination with respect to `v` and `a`.
fn dueling_backward(dq: &[f64], k: f64) -> (f64, Vec<f64>) {
    let total: f64 = dq.iter().sum();
    let mean = total / dq.len() as f64;
    (k * total, dq.iter().map(|d| k * (d - mean)).collect())
}

pub fn argmax(q: &[f64]) -> usize {
    q.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}
