use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{glorot_uniform, Activation, Matrix, ParamSet};
use crate::error::{config, Result};

/// Fully connected layer computing `activation(W·x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out × in`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Self {
            weights: Matrix::zeros(output, input),
            bias: vec![0.0; output],
            activation,
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(input: usize, output: usize, activation: Activation, rng: &mut R) -> Self {
        Self {
            weights: glorot_uniform(output, input, rng),
            bias: vec![0.0; output],
            activation,
        }
    }

    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if weights.rows() != bias.len() {
            return Err(config(format!(
                "dense bias has {} entries but weights have {} rows",
                bias.len(),
                weights.rows()
            )));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(config(format!(
                "dense layer expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim()];
        self.weights.affine_into(x, &self.bias, &mut out);
        for v in &mut out {
            *v = self.activation.apply(*v);
        }
        out
    }

    /// Backpropagate `dy` through the layer given the cached input `x` and
    /// output `y`. Accumulates into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &[f64], y: &[f64], dy: &[f64], grad: &mut DenseLayer) -> Vec<f64> {
        let dz: Vec<f64> = dy
            .iter()
            .zip(y)
            .map(|(&d, &yv)| d * self.activation.derivative_from_output(yv))
            .collect();
        grad.weights.add_outer(&dz, x);
        for (b, d) in grad.bias.iter_mut().zip(&dz) {
            *b += d;
        }
        let mut dx = vec![0.0; self.input_dim()];
        self.weights.transpose_matvec_acc(&dz, &mut dx);
        dx
    }
}

/// Free-function form of [`DenseLayer::forward`].
pub fn dense_forward(layer: &DenseLayer, x: &[f64]) -> Result<Vec<f64>> {
    layer.forward(x)
}

impl ParamSet for DenseLayer {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![self.weights.as_slice(), &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.weights.as_mut_slice(), &mut self.bias]
    }
}
