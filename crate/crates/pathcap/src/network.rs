//! Dense fully-connected ReLU network: construction, forward pass (layer-wise
//! and path-wise), backpropagation, and checkpoint IO.
//!
//! The architecture is fixed: input dimension `d`, `L - 1` hidden layers of
//! equal width `H` with ReLU activation, and a linear output layer of
//! dimension `K`. There are no bias terms; callers wanting bias behavior can
//! append a constant-1 feature to their inputs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on exhaustive path enumeration.
pub const DEFAULT_PATH_CAP: u128 = 1_000_000;

/// Layer dimensions of a ReLU MLP: `L` weight matrices, input dimension `d`,
/// all hidden layers of width `H`, output dimension `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    #[serde(rename = "L")]
    pub depth: usize,
    #[serde(rename = "d")]
    pub input_dim: usize,
    #[serde(rename = "H")]
    pub hidden_width: usize,
    #[serde(rename = "K")]
    pub output_dim: usize,
}

impl NetworkSpec {
    pub fn new(depth: usize, input_dim: usize, hidden_width: usize, output_dim: usize) -> Result<Self> {
        let spec = NetworkSpec { depth, input_dim, hidden_width, output_dim };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth < 2 {
            return Err(Error::InvalidSpec(format!("depth L must be >= 2, got {}", self.depth)));
        }
        if self.input_dim == 0 || self.hidden_width == 0 || self.output_dim == 0 {
            return Err(Error::InvalidSpec("dimensions d, H, K must all be >= 1".into()));
        }
        Ok(())
    }

    /// Node count of layer `l`, for `l` in `0..=L`.
    pub fn layer_size(&self, l: usize) -> usize {
        if l == 0 {
            self.input_dim
        } else if l == self.depth {
            self.output_dim
        } else {
            self.hidden_width
        }
    }

    /// Shape of weight matrix `l` (connecting layer `l` to layer `l + 1`),
    /// for `l` in `0..L`.
    pub fn weight_shape(&self, l: usize) -> (usize, usize) {
        (self.layer_size(l), self.layer_size(l + 1))
    }

    /// Total number of input-to-output paths, `M = d * H^(L-1) * K`.
    pub fn total_paths(&self) -> u128 {
        let mut m = self.input_dim as u128;
        for _ in 0..self.depth - 1 {
            m = m.saturating_mul(self.hidden_width as u128);
        }
        m.saturating_mul(self.output_dim as u128)
    }

    /// Total number of weights across all layers.
    pub fn total_weights(&self) -> usize {
        (0..self.depth)
            .map(|l| {
                let (r, c) = self.weight_shape(l);
                r * c
            })
            .sum()
    }
}

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidSpec(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

/// A ReLU MLP: spec plus one weight matrix per layer, matrix `l` of shape
/// `h_{l-1} x h_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    weights: Vec<Matrix>,
}

impl Network {
    pub fn new(spec: NetworkSpec, weights: Vec<Matrix>) -> Result<Self> {
        spec.validate()?;
        if weights.len() != spec.depth {
            return Err(Error::InvalidSpec(format!(
                "expected {} weight matrices, got {}",
                spec.depth,
                weights.len()
            )));
        }
        for (l, w) in weights.iter().enumerate() {
            let (r, c) = spec.weight_shape(l);
            if w.rows != r || w.cols != c {
                return Err(Error::InvalidSpec(format!(
                    "weight matrix {} has shape {}x{}, expected {}x{}",
                    l, w.rows, w.cols, r, c
                )));
            }
            if w.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!("non-finite entry in weight matrix {}", l)));
            }
        }
        Ok(Network { spec, weights })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn weight(&self, l: usize) -> &Matrix {
        &self.weights[l]
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    /// Positive node rescaling: multiply all incoming weights of hidden node
    /// `node` in hidden layer `layer` (1-based hidden layer index, i.e.
    /// `1..=L-1`) by `c > 0` and divide its outgoing weights by `c`.
    ///
    /// Leaves the network function unchanged for every input.
    pub fn rescale_node(&mut self, layer: usize, node: usize, c: f64) -> Result<()> {
        if layer == 0 || layer >= self.spec.depth {
            return Err(Error::Domain(format!("hidden layer index {} out of range", layer)));
        }
        if node >= self.spec.hidden_width {
            return Err(Error::Domain(format!("node index {} out of range", node)));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("rescaling constant must be positive finite, got {}", c)));
        }
        let incoming = &mut self.weights[layer - 1];
        for i in 0..incoming.rows {
            let v = incoming.get(i, node);
            incoming.set(i, node, v * c);
        }
        let outgoing = &mut self.weights[layer];
        for j in 0..outgoing.cols {
            let v = outgoing.get(node, j);
            outgoing.set(node, j, v / c);
        }
        Ok(())
    }
}

/// Per-layer activations of one forward pass, including the hidden-unit
/// activation pattern (indicator of strictly positive preactivation).
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `activations[l]` is `o^l`, for `l` in `0..=L`; `o^0` is the input and
    /// `o^L` the linear output.
    pub activations: Vec<Vec<f64>>,
    /// `preactivations[l]` is `w_{l+1}^T o^l` before ReLU, for the `L` layers.
    pub preactivations: Vec<Vec<f64>>,
    /// `active[l][i]` for hidden layers `l` in `0..L-1`: preactivation > 0.
    pub active: Vec<Vec<bool>>,
}

impl ForwardTrace {
    /// Activation indicator of hidden node `i` in hidden layer `l`
    /// (`l` in `1..=L-1`).
    pub fn is_active(&self, l: usize, i: usize) -> bool {
        self.active[l - 1][i]
    }
}

/// Layer-wise forward pass: `o^l = relu(w_l^T o^{l-1})` on hidden layers, the
/// output layer stays linear.
pub fn forward(net: &Network, x: &[f64]) -> Result<(Vec<f64>, ForwardTrace)> {
    let spec = net.spec();
    if x.len() != spec.input_dim {
        return Err(Error::InputShape { expected: spec.input_dim, got: x.len() });
    }
    let mut activations = Vec::with_capacity(spec.depth + 1);
    let mut preactivations = Vec::with_capacity(spec.depth);
    let mut active = Vec::with_capacity(spec.depth - 1);
    activations.push(x.to_vec());

    for l in 0..spec.depth {
        let w = net.weight(l);
        let prev = &activations[l];
        let mut pre = vec![0.0; w.cols];
        for i in 0..w.rows {
            let oi = prev[i];
            if oi != 0.0 {
                for j in 0..w.cols {
                    pre[j] += oi * w.get(i, j);
                }
            }
        }
        let out = if l + 1 < spec.depth {
            active.push(pre.iter().map(|&v| v > 0.0).collect());
            pre.iter().map(|&v| v.max(0.0)).collect()
        } else {
            pre.clone()
        };
        preactivations.push(pre);
        activations.push(out);
    }

    let output = activations[spec.depth].clone();
    Ok((output, ForwardTrace { activations, preactivations, active }))
}

/// Path-form forward pass: sums, over every input-to-output path, the product
/// of the weights along the path times the hidden activation indicators from
/// a standard forward trace, times the input coordinate.
///
/// Exhaustive; refuses when the path count exceeds `cap` (pass `None` for the
/// default cap of 10^6).
pub fn forward_by_paths(net: &Network, x: &[f64], cap: Option<u128>) -> Result<Vec<f64>> {
    let spec = net.spec();
    if x.len() != spec.input_dim {
        return Err(Error::InputShape { expected: spec.input_dim, got: x.len() });
    }
    let cap = cap.unwrap_or(DEFAULT_PATH_CAP);
    let count = spec.total_paths();
    if count > cap {
        return Err(Error::EnumerationTooLarge { count, cap });
    }
    let (_, trace) = forward(net, x)?;

    let mut output = vec![0.0; spec.output_dim];
    let mut nodes = vec![0usize; spec.depth + 1];
    for first in 0..spec.input_dim {
        nodes[0] = first;
        path_sum_recurse(net, &trace, &mut nodes, 0, x[first], &mut output);
    }
    Ok(output)
}

fn path_sum_recurse(
    net: &Network,
    trace: &ForwardTrace,
    nodes: &mut Vec<usize>,
    layer: usize,
    product: f64,
    output: &mut [f64],
) {
    let spec = net.spec();
    if layer == spec.depth {
        output[nodes[layer]] += product;
        return;
    }
    for next in 0..spec.layer_size(layer + 1) {
        // hidden activation indicator applies to layers 1..L-1 only
        let indicator = if layer + 1 < spec.depth {
            if trace.is_active(layer + 1, next) {
                1.0
            } else {
                0.0
            }
        } else {
            1.0
        };
        nodes[layer + 1] = next;
        let w = net.weight(layer).get(nodes[layer], next);
        path_sum_recurse(net, trace, nodes, layer + 1, product * w * indicator, output);
    }
}

/// Reverse-mode gradient of a scalar loss through the network, given the
/// gradient of the loss with respect to the linear outputs.
///
/// ReLU subgradient at exactly-zero preactivation is 0.
pub fn backward(net: &Network, trace: &ForwardTrace, grad_out: &[f64]) -> Result<Vec<Matrix>> {
    let spec = net.spec();
    if grad_out.len() != spec.output_dim {
        return Err(Error::InputShape { expected: spec.output_dim, got: grad_out.len() });
    }
    let mut grads: Vec<Matrix> = (0..spec.depth)
        .map(|l| {
            let (r, c) = spec.weight_shape(l);
            Matrix::zeros(r, c)
        })
        .collect();

    let mut delta = grad_out.to_vec();
    for l in (0..spec.depth).rev() {
        let w = net.weight(l);
        let prev = &trace.activations[l];
        let g = &mut grads[l];
        for i in 0..w.rows {
            let oi = prev[i];
            if oi != 0.0 {
                for j in 0..w.cols {
                    let v = g.get(i, j);
                    g.set(i, j, v + oi * delta[j]);
                }
            }
        }
        if l > 0 {
            let mut prev_delta = vec![0.0; w.rows];
            for i in 0..w.rows {
                // indicator(pre > 0); subgradient 0 at 0
                if trace.preactivations[l - 1][i] > 0.0 {
                    let mut acc = 0.0;
                    for j in 0..w.cols {
                        acc += w.get(i, j) * delta[j];
                    }
                    prev_delta[i] = acc;
                }
            }
            delta = prev_delta;
        }
    }
    Ok(grads)
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    spec: NetworkSpec,
    weights: Vec<Vec<f64>>,
}

/// Write a network checkpoint as JSON; the decimal serialization round-trips
/// bit-exactly.
pub fn save_checkpoint<P: AsRef<Path>>(net: &Network, path: P) -> Result<()> {
    let file = CheckpointFile {
        spec: *net.spec(),
        weights: net.weights().iter().map(|w| w.as_slice().to_vec()).collect(),
    };
    let json = serde_json::to_string(&file).map_err(|e| Error::CheckpointParse {
        context: path.as_ref().display().to_string(),
        message: e.to_string(),
    })?;
    fs::write(path, json)?;
    Ok(())
}

/// Load a network checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint<P: AsRef<Path>>(path: P) -> Result<Network> {
    let ctx = path.as_ref().display().to_string();
    let text = fs::read_to_string(&path)?;
    let file: CheckpointFile = serde_json::from_str(&text).map_err(|e| Error::CheckpointParse {
        context: format!("{}:{}:{}", ctx, e.line(), e.column()),
        message: e.to_string(),
    })?;
    file.spec.validate().map_err(|e| Error::CheckpointParse {
        context: format!("{}: spec", ctx),
        message: e.to_string(),
    })?;
    let mut weights = Vec::with_capacity(file.spec.depth);
    if file.weights.len() != file.spec.depth {
        return Err(Error::CheckpointParse {
            context: format!("{}: weights", ctx),
            message: format!("expected {} layers, got {}", file.spec.depth, file.weights.len()),
        });
    }
    for (l, data) in file.weights.into_iter().enumerate() {
        let (r, c) = file.spec.weight_shape(l);
        let m = Matrix::from_vec(r, c, data).map_err(|e| Error::CheckpointParse {
            context: format!("{}: weights[{}]", ctx, l),
            message: e.to_string(),
        })?;
        weights.push(m);
    }
    Network::new(file.spec, weights)
}
