// SPDX-License-Identifier: Apache-2.0

//! Fully connected feedforward network: sigmoid hidden layers, identity
//! output layer, analytic backpropagation and plain SGD.
//!
//! Layer `ℓ` maps `a_{ℓ-1}` to `a_ℓ = φ(W_ℓ a_{ℓ-1} + b_ℓ)`, with `W_ℓ`
//! stored row-major as `units_ℓ × units_{ℓ-1}`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::{RngStream, STREAM_INIT};

pub const DEFAULT_HIDDEN_LAYERS: usize = 5;
pub const DEFAULT_HIDDEN_UNITS: usize = 5;

const FLAT_MAGIC: &str = "deepfilt-mlp 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MlpArch {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub output_dim: usize,
}

impl MlpArch {
    pub fn new(
        input_dim: usize,
        hidden_layers: usize,
        hidden_units: usize,
        output_dim: usize,
    ) -> Result<Self> {
        let a = Self {
            input_dim,
            hidden_layers,
            hidden_units,
            output_dim,
        };
        a.validate()?;
        Ok(a)
    }

    /// `input_dim → 5 × 5 sigmoid → 1`.
    pub fn standard(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_layers: DEFAULT_HIDDEN_LAYERS,
            hidden_units: DEFAULT_HIDDEN_UNITS,
            output_dim: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0
            || self.hidden_layers == 0
            || self.hidden_units == 0
            || self.output_dim == 0
        {
            return Err(Error::validation(format!(
                "all network dimensions must be >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Widths `[input, hidden.., output]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden_layers + 2);
        w.push(self.input_dim);
        w.extend(std::iter::repeat_n(self.hidden_units, self.hidden_layers));
        w.push(self.output_dim);
        w
    }

    pub fn n_params(&self) -> usize {
        self.widths().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// One affine layer; also used as the gradient of one.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Row-major `fan_out × fan_in`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            fan_in,
            fan_out,
            weights: vec![0.0; fan_in * fan_out],
            biases: vec![0.0; fan_out],
        }
    }

    fn affine_into(&self, input: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.weights[j * self.fan_in..(j + 1) * self.fan_in];
            *o = row
                .iter()
                .zip(input)
                .fold(self.biases[j], |acc, (w, x)| acc + w * x);
        }
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.biases)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.biases.iter_mut())
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    arch: MlpArch,
    layers: Vec<Layer>,
}

/// Gradient of the loss with respect to every parameter of an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<Layer>,
}

/// Per-layer outputs cached by a forward pass: `[input, hidden.., output]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    pub layers: Vec<Vec<f64>>,
}

impl Activations {
    pub fn for_arch(arch: &MlpArch) -> Self {
        Self {
            layers: arch.widths().into_iter().map(|w| vec![0.0; w]).collect(),
        }
    }

    pub fn output(&self) -> &[f64] {
        self.layers.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl Gradient {
    pub fn zeros(arch: &MlpArch) -> Self {
        Self {
            layers: arch
                .widths()
                .windows(2)
                .map(|w| Layer::zeros(w[0], w[1]))
                .collect(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(Layer::params)
            .copied()
            .collect()
    }

    /// Elementwise sum. Panics if the shapes differ.
    pub fn add(&self, other: &Gradient) -> Gradient {
        let mut out = self.clone();
        for (a, b) in out.layers.iter_mut().zip(&other.layers) {
            assert_eq!(
                (a.fan_in, a.fan_out),
                (b.fan_in, b.fan_out),
                "gradient shape mismatch"
            );
            for (x, y) in a.params_mut().zip(b.params()) {
                *x += y;
            }
        }
        out
    }

    fn shape_matches(&self, net: &Mlp) -> bool {
        self.layers.len() == net.layers.len()
            && self
                .layers
                .iter()
                .zip(&net.layers)
                .all(|(g, l)| g.fan_in == l.fan_in && g.fan_out == l.fan_out)
    }
}

impl Mlp {
    /// Glorot-uniform weights on `±√(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(arch: MlpArch, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = RngStream::new(seed, STREAM_INIT).rng();
        let layers = arch
            .widths()
            .windows(2)
            .map(|w| {
                let mut layer = Layer::zeros(w[0], w[1]);
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                for v in &mut layer.weights {
                    *v = limit * (2.0 * rng.uniform() - 1.0);
                }
                layer
            })
            .collect();
        Ok(Self { arch, layers })
    }

    /// All parameters zero.
    pub fn zeros(arch: MlpArch) -> Result<Self> {
        arch.validate()?;
        Ok(Self {
            arch,
            layers: Gradient::zeros(&arch).layers,
        })
    }

    pub fn arch(&self) -> &MlpArch {
        &self.arch
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Parameters in serialization order: per layer, weights row-major then biases.
    pub fn params_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(Layer::params)
            .copied()
            .collect()
    }

    pub fn set_params_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.n_params() {
            return Err(Error::validation(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                values.len()
            )));
        }
        for (p, v) in self
            .layers
            .iter_mut()
            .flat_map(Layer::params_mut)
            .zip(values)
        {
            *p = *v;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .flat_map(Layer::params)
            .all(|v| v.is_finite())
    }

    /// Forward pass returning the output and the cached activations.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, Activations)> {
        let mut acts = Activations::for_arch(&self.arch);
        self.forward_into(input, &mut acts)?;
        Ok((acts.output().to_vec(), acts))
    }

    /// Forward pass into preallocated activations.
    pub fn forward_into(&self, input: &[f64], acts: &mut Activations) -> Result<()> {
        if input.len() != self.arch.input_dim {
            return Err(Error::validation(format!(
                "input has length {}, network expects {}",
                input.len(),
                self.arch.input_dim
            )));
        }
        if acts.layers.len() != self.layers.len() + 1 {
            *acts = Activations::for_arch(&self.arch);
        }
        acts.layers[0].copy_from_slice(input);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (prev, next) = acts.layers.split_at_mut(l + 1);
            let out = &mut next[0];
            layer.affine_into(&prev[l], out);
            if l < last {
                for v in out.iter_mut() {
                    *v = sigmoid(*v);
                }
            }
        }
        Ok(())
    }

    /// Scalar output for a single-output network. Allocation-free.
    pub fn predict_scalar(&self, input: &[f64], acts: &mut Activations) -> Result<f64> {
        self.forward_into(input, acts)?;
        Ok(acts.output()[0])
    }

    /// Gradient of `½|ξ − target|²`, where `output_error = ξ − target` and
    /// `acts` come from the forward pass that produced `ξ`.
    pub fn backward(&self, acts: &Activations, output_error: &[f64]) -> Result<Gradient> {
        let mut grad = Gradient::zeros(&self.arch);
        let mut scratch = BackwardScratch::new(&self.arch);
        self.backward_into(acts, output_error, &mut grad, &mut scratch)?;
        Ok(grad)
    }

    pub fn backward_into(
        &self,
        acts: &Activations,
        output_error: &[f64],
        grad: &mut Gradient,
        scratch: &mut BackwardScratch,
    ) -> Result<()> {
        if output_error.len() != self.arch.output_dim {
            return Err(Error::validation(format!(
                "output error has length {}, network has {} outputs",
                output_error.len(),
                self.arch.output_dim
            )));
        }
        let widths = self.arch.widths();
        if acts.layers.len() != widths.len()
            || acts.layers.iter().zip(&widths).any(|(a, &w)| a.len() != w)
        {
            return Err(Error::validation(
                "activations do not match the network shape",
            ));
        }
        if !grad.shape_matches(self) {
            return Err(Error::validation(
                "gradient buffer does not match the network shape",
            ));
        }

        let BackwardScratch { delta, next_delta } = scratch;
        delta.clear();
        delta.extend_from_slice(output_error);
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let g = &mut grad.layers[l];
            let a_prev = &acts.layers[l];
            for (j, &d) in delta.iter().enumerate() {
                let row = &mut g.weights[j * layer.fan_in..(j + 1) * layer.fan_in];
                for (w, &a) in row.iter_mut().zip(a_prev) {
                    *w = d * a;
                }
                g.biases[j] = d;
            }
            if l == 0 {
                break;
            }
            // δ_{ℓ-1} = (W_ℓ' δ_ℓ) ⊙ σ'(z_{ℓ-1}), σ' = a(1 − a)
            next_delta.clear();
            next_delta.resize(layer.fan_in, 0.0);
            for (j, &d) in delta.iter().enumerate() {
                let row = &layer.weights[j * layer.fan_in..(j + 1) * layer.fan_in];
                for (nd, &w) in next_delta.iter_mut().zip(row) {
                    *nd += w * d;
                }
            }
            for (nd, &a) in next_delta.iter_mut().zip(a_prev) {
                *nd *= a * (1.0 - a);
            }
            std::mem::swap(delta, next_delta);
        }
        Ok(())
    }

    /// `θ ← θ − γ ∇`, with `0 < γ < 1`.
    pub fn sgd_step(&mut self, grad: &Gradient, gamma: f64) -> Result<()> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::validation(format!(
                "learning rate must lie in (0, 1), got {gamma}"
            )));
        }
        if !grad.shape_matches(self) {
            return Err(Error::validation(
                "gradient does not match the network shape",
            ));
        }
        for (layer, g) in self.layers.iter_mut().zip(&grad.layers) {
            for (p, d) in layer.params_mut().zip(g.params()) {
                *p -= gamma * d;
            }
        }
        Ok(())
    }

    /// Text header with the architecture followed by one parameter per line
    /// at 17 significant digits.
    pub fn to_flat_string(&self) -> String {
        let a = &self.arch;
        let mut s = String::new();
        let _ = writeln!(s, "{FLAT_MAGIC}");
        let _ = writeln!(
            s,
            "arch {} {} {} {}",
            a.input_dim, a.hidden_layers, a.hidden_units, a.output_dim
        );
        let _ = writeln!(s, "params {}", self.n_params());
        for v in self.params_flat() {
            let _ = writeln!(s, "{v:.16e}");
        }
        s
    }

    pub fn from_flat_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let bad = |m: &str| Error::validation(format!("malformed network file: {m}"));
        if lines.next() != Some(FLAT_MAGIC) {
            return Err(bad("missing header"));
        }
        let arch_line = lines.next().ok_or_else(|| bad("missing arch line"))?;
        let dims: Vec<usize> = arch_line
            .strip_prefix("arch ")
            .ok_or_else(|| bad("expected `arch`"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad arch dimension")))
            .collect::<Result<_>>()?;
        if dims.len() != 4 {
            return Err(bad("arch needs 4 dimensions"));
        }
        let arch = MlpArch::new(dims[0], dims[1], dims[2], dims[3])?;
        let count: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("params "))
            .ok_or_else(|| bad("expected `params`"))?
            .trim()
            .parse()
            .map_err(|_| bad("bad parameter count"))?;
        if count != arch.n_params() {
            return Err(bad("parameter count does not match arch"));
        }
        let values: Vec<f64> = lines
            .map(|l| l.parse().map_err(|_| bad(&format!("bad value `{l}`"))))
            .collect::<Result<_>>()?;
        if values.len() != count {
            return Err(bad(&format!(
                "expected {count} values, found {}",
                values.len()
            )));
        }
        let mut net = Mlp::zeros(arch)?;
        net.set_params_flat(&values)?;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_flat_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_flat_str(&text)
    }
}

/// Reusable buffers for [`Mlp::backward_into`].
#[derive(Debug, Clone, Default)]
pub struct BackwardScratch {
    delta: Vec<f64>,
    next_delta: Vec<f64>,
}

impl BackwardScratch {
    pub fn new(arch: &MlpArch) -> Self {
        let w = arch.input_dim.max(arch.hidden_units).max(arch.output_dim);
        Self {
            delta: Vec::with_capacity(w),
            next_delta: Vec::with_capacity(w),
        }
    }
}

/// `½ |output − target|²`.
pub fn loss(output: &[f64], target: &[f64]) -> Result<f64> {
    if output.len() != target.len() {
        return Err(Error::validation(format!(
            "loss: output length {} != target length {}",
            output.len(),
            target.len()
        )));
    }
    Ok(0.5
        * output
            .iter()
            .zip(target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>())
}
