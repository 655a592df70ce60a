use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dense::DenseMatrix;
use super::optim::Parameters;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation `z`.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Affine map `y = x W + b` with `W` stored as `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn zeros(input_dim: usize, output_dim: usize) -> Self {
        Self { weight: DenseMatrix::zeros(input_dim, output_dim), bias: vec![0.0; output_dim] }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(input_dim: usize, output_dim: usize, rng: &mut R) -> Self {
        let s = (6.0 / (input_dim + output_dim) as f64).sqrt();
        let data = (0..input_dim * output_dim).map(|_| rng.random_range(-s..=s)).collect();
        Self {
            weight: DenseMatrix::from_vec(input_dim, output_dim, data).expect("sized by construction"),
            bias: vec![0.0; output_dim],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.n_rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.n_cols()
    }

    /// Batched affine map over the rows of `x`.
    pub fn forward(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let mut z = x.matmul(&self.weight)?;
        z.add_row_vector(&self.bias)?;
        Ok(z)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.output_dim())
    }

    fn check(&self) -> Result<()> {
        if self.bias.len() != self.output_dim() {
            return Err(Error::DimensionMismatch(format!(
                "bias length {} for output dim {}",
                self.bias.len(),
                self.output_dim()
            )));
        }
        Ok(())
    }
}

impl Parameters for Linear {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![self.weight.data(), &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.weight.data_mut(), &mut self.bias]
    }
}

/// Multilayer perceptron: a chain of affine layers, each followed by its activation.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Linear>,
    pub activations: Vec<Activation>,
}

/// Intermediate values of a batched forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    /// Input of every layer; `inputs[0]` is the batch itself.
    pub inputs: Vec<DenseMatrix>,
    pub pre_activations: Vec<DenseMatrix>,
    pub output: DenseMatrix,
}

impl MlpParams {
    pub fn new(layers: Vec<Linear>, activations: Vec<Activation>) -> Result<Self> {
        let mlp = Self { layers, activations };
        mlp.validate()?;
        Ok(mlp)
    }

    /// Randomly initialised network with layer widths `dims` (input first).
    pub fn init<R: Rng + ?Sized>(dims: &[usize], activations: Vec<Activation>, rng: &mut R) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidParams("an MLP needs at least an input and an output width".into()));
        }
        let layers = dims.windows(2).map(|w| Linear::glorot(w[0], w[1], rng)).collect();
        Self::new(layers, activations)
    }

    pub fn zeros(dims: &[usize], activations: Vec<Activation>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidParams("an MLP needs at least an input and an output width".into()));
        }
        let layers = dims.windows(2).map(|w| Linear::zeros(w[0], w[1])).collect();
        Self::new(layers, activations)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidParams("MLP has no layers".into()));
        }
        if self.layers.len() != self.activations.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} layers but {} activations",
                self.layers.len(),
                self.activations.len()
            )));
        }
        for layer in &self.layers {
            layer.check()?;
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "layer {} outputs {} but layer {} expects {}",
                    i,
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim()).chain(self.layers.iter().map(Linear::output_dim)).collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "input of length {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut h = x.to_vec();
        for (layer, act) in self.layers.iter().zip(&self.activations) {
            let mut next = layer.bias.clone();
            for (k, &a) in h.iter().enumerate() {
                if a != 0.0 {
                    for (o, &w) in next.iter_mut().zip(layer.weight.row(k)) {
                        *o += a * w;
                    }
                }
            }
            next.iter_mut().for_each(|v| *v = act.apply(*v));
            h = next;
        }
        Ok(h)
    }

    pub fn forward_batch(&self, x: &DenseMatrix) -> Result<MlpTrace> {
        if x.n_cols() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "batch has {} columns, network expects {}",
                x.n_cols(),
                self.input_dim()
            )));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (layer, &act) in self.layers.iter().zip(&self.activations) {
            let z = layer.forward(&h)?;
            let next = z.map(|v| act.apply(v));
            inputs.push(h);
            pre_activations.push(z);
            h = next;
        }
        Ok(MlpTrace { inputs, pre_activations, output: h })
    }

    /// Backpropagates `d_output` (gradient w.r.t. the network output) through
    /// a recorded trace. Returns parameter gradients and the gradient w.r.t. the input batch.
    pub fn backward(&self, trace: &MlpTrace, d_output: &DenseMatrix) -> Result<(MlpParams, DenseMatrix)> {
        if d_output.shape() != trace.output.shape() {
            return Err(Error::ShapeMismatch(format!(
                "output gradient {:?} vs output {:?}",
                d_output.shape(),
                trace.output.shape()
            )));
        }
        let mut grads: Vec<Linear> = Vec::with_capacity(self.layers.len());
        let mut delta = d_output.clone();
        for l in (0..self.layers.len()).rev() {
            let act = self.activations[l];
            let z = &trace.pre_activations[l];
            for (d, &zv) in delta.data_mut().iter_mut().zip(z.data()) {
                *d *= act.derivative(zv);
            }
            let d_weight = trace.inputs[l].t_matmul(&delta)?;
            let d_bias = delta.column_sums();
            let d_input = delta.matmul_t(&self.layers[l].weight)?;
            grads.push(Linear { weight: d_weight, bias: d_bias });
            delta = d_input;
        }
        grads.reverse();
        Ok((MlpParams { layers: grads, activations: self.activations.clone() }, delta))
    }

    pub fn zeros_like(&self) -> Self {
        Self { layers: self.layers.iter().map(Linear::zeros_like).collect(), activations: self.activations.clone() }
    }
}

impl Parameters for MlpParams {
    fn tensors(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(Linear::tensors).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(Linear::tensors_mut).collect()
    }
}

/// Evaluates the network on a single input vector.
pub fn mlp_forward(params: &MlpParams, x: &[f64]) -> Result<Vec<f64>> {
    params.forward(x)
}
