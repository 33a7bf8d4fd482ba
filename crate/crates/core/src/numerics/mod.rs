//! Dense networks with hand-written gradients, Adam, and stable softmax.
//!
//! An [`Mlp`] keeps all of its parameters in one flat `Vec<f64>`: for each
//! layer the row-major weight block of shape `(out, in)` followed by the bias
//! block of length `out`. Gradients use the same layout, so an optimizer only
//! ever sees two equal-length slices.

mod adam;
pub mod checkpoint;

pub use adam::{adam_step, AdamConfig, AdamState};

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major matrix of 64-bit reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor2 {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "tensor data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("tensor entry {bad}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Tanh => 0,
            Activation::Relu => 1,
            Activation::Identity => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Tanh),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// Fully connected network: affine layers with `hidden_activation` between
/// them and `output_activation` after the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
    offsets: Vec<usize>,
    hidden_activation: Activation,
    output_activation: Activation,
}

fn layer_offsets(sizes: &[usize]) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(sizes.len().saturating_sub(1));
    let mut total = 0;
    for pair in sizes.windows(2) {
        offsets.push(total);
        total += pair[1] * pair[0] + pair[1];
    }
    (offsets, total)
}

fn validate_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::Config(
            "an mlp needs at least an input and an output size".into(),
        ));
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::Config(format!("zero-width layer in {sizes:?}")));
    }
    Ok(())
}

impl Mlp {
    /// All-zero network.
    pub fn zeros(
        layer_sizes: &[usize],
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let (offsets, total) = layer_offsets(layer_sizes);
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            params: vec![0.0; total],
            offsets,
            hidden_activation,
            output_activation,
        })
    }

    /// Xavier-uniform weights, zero biases, identity output.
    pub fn xavier<R: Rng + ?Sized>(
        layer_sizes: &[usize],
        hidden_activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes, hidden_activation, Activation::Identity)?;
        for layer in 0..net.num_layers() {
            let (fan_in, fan_out) = (net.layer_sizes[layer], net.layer_sizes[layer + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite xavier bound");
            for w in net.weights_mut(layer) {
                *w = dist.sample(rng);
            }
        }
        Ok(net)
    }

    /// Builds a network from explicit weight matrices and bias vectors.
    pub fn from_parts(
        weights: Vec<Tensor2>,
        biases: Vec<Vec<f64>>,
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::Config(format!(
                "{} weight matrices but {} bias vectors",
                weights.len(),
                biases.len()
            )));
        }
        let mut sizes = vec![weights[0].cols()];
        for (k, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.cols() != *sizes.last().unwrap() {
                return Err(Error::Dimension(format!(
                    "layer {k} expects {} inputs, previous layer gives {}",
                    w.cols(),
                    sizes.last().unwrap()
                )));
            }
            if b.len() != w.rows() {
                return Err(Error::Dimension(format!(
                    "layer {k} has {} rows but {} biases",
                    w.rows(),
                    b.len()
                )));
            }
            sizes.push(w.rows());
        }
        let mut net = Self::zeros(&sizes, hidden_activation, output_activation)?;
        for (k, (w, b)) in weights.iter().zip(&biases).enumerate() {
            net.weights_mut(k).copy_from_slice(w.data());
            net.biases_mut(k).copy_from_slice(b);
        }
        net.check_finite()?;
        Ok(net)
    }

    /// Rebuilds a network from a flat parameter vector in this crate's layout.
    pub fn from_flat(
        layer_sizes: &[usize],
        params: Vec<f64>,
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes, hidden_activation, output_activation)?;
        if params.len() != net.params.len() {
            return Err(Error::Dimension(format!(
                "{} parameters for shape {layer_sizes:?}, expected {}",
                params.len(),
                net.params.len()
            )));
        }
        net.params = params;
        net.check_finite()?;
        Ok(net)
    }

    fn check_finite(&self) -> Result<()> {
        match self.params.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NonFinite(format!("parameter {i}"))),
            None => Ok(()),
        }
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn weight_range(&self, layer: usize) -> std::ops::Range<usize> {
        let start = self.offsets[layer];
        start..start + self.layer_sizes[layer + 1] * self.layer_sizes[layer]
    }

    fn bias_range(&self, layer: usize) -> std::ops::Range<usize> {
        let end = self.weight_range(layer).end;
        end..end + self.layer_sizes[layer + 1]
    }

    /// Row-major `(out, in)` weights of `layer`.
    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.params[self.weight_range(layer)]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        let range = self.weight_range(layer);
        &mut self.params[range]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.params[self.bias_range(layer)]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [f64] {
        let range = self.bias_range(layer);
        &mut self.params[range]
    }

    pub fn weight_matrix(&self, layer: usize) -> Tensor2 {
        Tensor2 {
            rows: self.layer_sizes[layer + 1],
            cols: self.layer_sizes[layer],
            data: self.weights(layer).to_vec(),
        }
    }

    /// Flat index of weight `(row, col)` of `layer`.
    pub fn weight_index(&self, layer: usize, row: usize, col: usize) -> usize {
        self.offsets[layer] + row * self.layer_sizes[layer] + col
    }

    pub fn bias_index(&self, layer: usize, row: usize) -> usize {
        self.bias_range(layer).start + row
    }

    /// Multiplies the last layer's weights and biases by `factor`.
    pub fn scale_output_layer(&mut self, factor: f64) {
        let last = self.num_layers() - 1;
        let range = self.weight_range(last).start..self.bias_range(last).end;
        for p in &mut self.params[range] {
            *p *= factor;
        }
    }

    /// FNV-1a over the parameter bit patterns.
    pub fn checksum(&self) -> u64 {
        let mut hash = 0xcbf2_9ce4_8422_2325u64;
        for p in &self.params {
            for byte in p.to_bits().to_le_bytes() {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(0x0100_0000_01b3);
            }
        }
        hash
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            activations: self.layer_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            deltas: self.layer_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            nonzero: Vec::with_capacity(self.layer_sizes[0]),
        }
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "network input has {} entries, expected {}",
                input.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Forward pass keeping every layer's activations in `ws` for a later
    /// [`Mlp::backward_into`]. Returns the output slice.
    pub fn forward_into<'w>(&self, input: &[f64], ws: &'w mut Workspace) -> Result<&'w [f64]> {
        self.check_input(input)?;
        ws.activations[0].copy_from_slice(input);
        ws.nonzero.clear();
        ws.nonzero.extend(input.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i));
        let sparse_input = ws.nonzero.len() * 4 <= input.len();
        let last = self.num_layers() - 1;
        for layer in 0..self.num_layers() {
            let act = if layer == last {
                self.output_activation
            } else {
                self.hidden_activation
            };
            let (before, after) = ws.activations.split_at_mut(layer + 1);
            let x = &before[layer];
            let y = &mut after[0];
            let w = self.weights(layer);
            let b = self.biases(layer);
            let cols = x.len();
            if layer == 0 && sparse_input {
                for (o, out) in y.iter_mut().enumerate() {
                    let row = &w[o * cols..(o + 1) * cols];
                    let z: f64 = ws.nonzero.iter().map(|&i| row[i] * x[i]).sum();
                    *out = act.apply(z + b[o]);
                }
            } else {
                for (o, out) in y.iter_mut().enumerate() {
                    *out = act.apply(dot(&w[o * cols..(o + 1) * cols], x) + b[o]);
                }
            }
        }
        Ok(&ws.activations[self.num_layers()])
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut ws = self.workspace();
        Ok(self.forward_into(input, &mut ws)?.to_vec())
    }

    /// Backpropagates `output_grad` through the activations stored by the last
    /// [`Mlp::forward_into`] on `ws`. Parameter gradients are *accumulated*
    /// into `param_grads`; when `input_grad` is given it is overwritten with
    /// the gradient with respect to the network input.
    pub fn backward_into(
        &self,
        ws: &mut Workspace,
        output_grad: &[f64],
        param_grads: &mut [f64],
        input_grad: Option<&mut [f64]>,
    ) -> Result<()> {
        if output_grad.len() != self.output_dim() {
            return Err(Error::Dimension(format!(
                "output gradient has {} entries, expected {}",
                output_grad.len(),
                self.output_dim()
            )));
        }
        if param_grads.len() != self.params.len() {
            return Err(Error::Dimension(format!(
                "gradient buffer has {} entries, expected {}",
                param_grads.len(),
                self.params.len()
            )));
        }
        let layers = self.num_layers();
        {
            let out = &ws.activations[layers];
            let delta = &mut ws.deltas[layers];
            for ((d, &g), &y) in delta.iter_mut().zip(output_grad).zip(out) {
                *d = g * self.output_activation.derivative_from_output(y);
            }
        }
        let want_input = input_grad.is_some();
        for layer in (0..layers).rev() {
            let cols = self.layer_sizes[layer];
            let w_range = self.weight_range(layer);
            let b_range = self.bias_range(layer);
            let (lower, upper) = ws.deltas.split_at_mut(layer + 1);
            let delta = &upper[0];
            let x = &ws.activations[layer];
            {
                let gw = &mut param_grads[w_range.clone()];
                let sparse = layer == 0 && ws.nonzero.len() * 4 <= cols;
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut gw[o * cols..(o + 1) * cols];
                    if sparse {
                        for &i in &ws.nonzero {
                            row[i] += d * x[i];
                        }
                    } else {
                        axpy(d, x, row);
                    }
                }
            }
            for (gb, &d) in param_grads[b_range].iter_mut().zip(delta) {
                *gb += d;
            }
            if layer > 0 || want_input {
                let prev = &mut lower[layer];
                prev.iter_mut().for_each(|v| *v = 0.0);
                let w = &self.params[w_range];
                for (o, &d) in delta.iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, &w[o * cols..(o + 1) * cols], prev);
                    }
                }
                if layer > 0 {
                    for (p, &y) in prev.iter_mut().zip(x) {
                        *p *= self.hidden_activation.derivative_from_output(y);
                    }
                }
            }
        }
        if let Some(out) = input_grad {
            out.copy_from_slice(&ws.deltas[0]);
        }
        Ok(())
    }

    /// Gradients of `output_grad · f(input)` with respect to the parameters
    /// (flat layout) and the input.
    pub fn backward(&self, input: &[f64], output_grad: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut ws = self.workspace();
        self.forward_into(input, &mut ws)?;
        let mut grads = vec![0.0; self.params.len()];
        let mut input_grad = vec![0.0; self.input_dim()];
        self.backward_into(&mut ws, output_grad, &mut grads, Some(&mut input_grad))?;
        Ok((grads, input_grad))
    }
}

/// Per-layer scratch space for forward/backward passes.
#[derive(Debug, Clone)]
pub struct Workspace {
    activations: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
    /// Indices of non-zero inputs of the last forward pass.
    nonzero: Vec<usize>,
}

impl Workspace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().unwrap()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        sum += x * y;
    }
    sum
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::Dimension("softmax of an empty vector".into()));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("softmax logits {logits:?}")));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    Ok(out)
}

/// `log softmax`, same stabilisation as [`softmax`].
pub fn log_softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::Dimension("log-softmax of an empty vector".into()));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("log-softmax logits {logits:?}")));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln() + max;
    Ok(logits.iter().map(|&z| z - log_sum).collect())
}
