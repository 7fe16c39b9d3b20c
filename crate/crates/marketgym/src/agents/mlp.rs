//! Fully-connected network with exact reverse-mode gradients.
//!
//! All weights and biases live in one flat parameter vector; layer `l` stores
//! its `out x in` weight matrix row-major followed by its `out` biases. Flat
//! storage keeps optimizers, Polyak averaging, serialization and finite
//! difference checks trivial.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AgentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    hidden_activation: Activation,
    output_activation: Activation,
    params: Vec<f64>,
}

/// Layer outputs recorded by [`Mlp::forward_tape`] for backpropagation.
#[derive(Debug, Clone)]
pub struct Tape {
    /// `activations[0]` is the input, `activations[l + 1]` the output of layer `l`.
    activations: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("tape has the input at least")
    }

    /// Which units are strictly positive, over every layer after the input.
    /// Two tapes with equal patterns lie on the same linear piece of a ReLU net.
    pub(crate) fn sign_pattern(&self) -> Vec<bool> {
        self.activations[1..].iter().flatten().map(|v| *v > 0.0).collect()
    }
}

pub fn param_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// Uniform `±1/sqrt(fan_in)` initialization for weights and biases.
    pub fn new<R: Rng + ?Sized>(
        layer_sizes: &[usize],
        hidden_activation: Activation,
        output_activation: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(layer_sizes.len() >= 2, "an MLP needs input and output widths");
        assert!(layer_sizes.iter().all(|w| *w > 0), "layer widths must be positive");
        let mut params = Vec::with_capacity(param_count(layer_sizes));
        for w in layer_sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..w[0] * w[1] + w[1] {
                params.push(rng.random_range(-bound..bound));
            }
        }
        Self { layer_sizes: layer_sizes.to_vec(), hidden_activation, output_activation, params }
    }

    pub fn zeros(layer_sizes: &[usize], hidden_activation: Activation, output_activation: Activation) -> Self {
        Self {
            layer_sizes: layer_sizes.to_vec(),
            hidden_activation,
            output_activation,
            params: vec![0.0; param_count(layer_sizes)],
        }
    }

    pub fn from_params(
        layer_sizes: Vec<usize>,
        hidden_activation: Activation,
        output_activation: Activation,
        params: Vec<f64>,
    ) -> Result<Self, AgentError> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(AgentError::ShapeMismatch("layer sizes must list at least two positive widths".into()));
        }
        let expected = param_count(&layer_sizes);
        if params.len() != expected {
            return Err(AgentError::ShapeMismatch(format!(
                "expected {expected} parameters, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(AgentError::ShapeMismatch("parameters must be finite".into()));
        }
        Ok(Self { layer_sizes, hidden_activation, output_activation, params })
    }

    /// Multiplies the final layer's weights and biases by `factor`; small
    /// output layers start policies near the center of the action range.
    pub fn scale_output_layer(&mut self, factor: f64) {
        let n = self.layer_sizes.len();
        let last = self.layer_sizes[n - 2] * self.layer_sizes[n - 1] + self.layer_sizes[n - 1];
        let len = self.params.len();
        for p in &mut self.params[len - last..] {
            *p *= factor;
        }
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_len(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.layer_sizes.last().expect("non-empty")
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn activation_for(&self, layer: usize) -> Activation {
        if layer + 2 == self.layer_sizes.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    fn check_input(&self, input: &[f64]) -> Result<(), AgentError> {
        if input.len() != self.input_len() {
            return Err(AgentError::ShapeMismatch(format!(
                "network expects {} inputs, got {}",
                self.input_len(),
                input.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, AgentError> {
        self.check_input(input)?;
        let mut current = input.to_vec();
        let mut offset = 0;
        for (l, w) in self.layer_sizes.windows(2).enumerate() {
            current = self.layer(l, offset, w[0], w[1], &current);
            offset += w[0] * w[1] + w[1];
        }
        Ok(current)
    }

    pub fn forward_tape(&self, input: &[f64]) -> Result<Tape, AgentError> {
        self.check_input(input)?;
        let mut activations = Vec::with_capacity(self.layer_sizes.len());
        activations.push(input.to_vec());
        let mut offset = 0;
        for (l, w) in self.layer_sizes.windows(2).enumerate() {
            let next = self.layer(l, offset, w[0], w[1], activations.last().expect("input pushed"));
            activations.push(next);
            offset += w[0] * w[1] + w[1];
        }
        Ok(Tape { activations })
    }

    #[inline]
    fn layer(&self, l: usize, offset: usize, fan_in: usize, fan_out: usize, x: &[f64]) -> Vec<f64> {
        let weights = &self.params[offset..offset + fan_in * fan_out];
        let biases = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
        let act = self.activation_for(l);
        weights
            .chunks_exact(fan_in)
            .zip(biases)
            .map(|(row, b)| act.apply(row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b))
            .collect()
    }

    /// Accumulates `d(upstream . output)/d(params)` into `grads` and returns the
    /// gradient with respect to the input.
    pub fn backward(&self, tape: &Tape, upstream: &[f64], grads: &mut [f64]) -> Result<Vec<f64>, AgentError> {
        if upstream.len() != self.output_len() {
            return Err(AgentError::ShapeMismatch(format!(
                "upstream has {} entries, network outputs {}",
                upstream.len(),
                self.output_len()
            )));
        }
        if grads.len() != self.params.len() {
            return Err(AgentError::ShapeMismatch("gradient buffer length differs from parameter count".into()));
        }
        let mut delta: Vec<f64> = upstream.to_vec();
        let mut offset = self.params.len();
        let n_layers = self.layer_sizes.len() - 1;
        for l in (0..n_layers).rev() {
            let fan_in = self.layer_sizes[l];
            let fan_out = self.layer_sizes[l + 1];
            offset -= fan_in * fan_out + fan_out;
            let act = self.activation_for(l);
            let out = &tape.activations[l + 1];
            for (d, y) in delta.iter_mut().zip(out) {
                *d *= act.derivative_from_output(*y);
            }
            let x = &tape.activations[l];
            let (w_grad, b_grad) = grads[offset..offset + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
            for (j, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                b_grad[j] += d;
                for (g, v) in w_grad[j * fan_in..(j + 1) * fan_in].iter_mut().zip(x) {
                    *g += d * v;
                }
            }
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let mut prev = vec![0.0; fan_in];
            for (j, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                for (p, w) in prev.iter_mut().zip(&weights[j * fan_in..(j + 1) * fan_in]) {
                    *p += d * w;
                }
            }
            delta = prev;
        }
        Ok(delta)
    }

    /// Polyak update `self <- tau * online + (1 - tau) * self`.
    pub fn soft_update_from(&mut self, online: &Mlp, tau: f64) {
        debug_assert_eq!(self.params.len(), online.params.len());
        for (t, o) in self.params.iter_mut().zip(&online.params) {
            *t = tau * o + (1.0 - tau) * *t;
        }
    }
}
