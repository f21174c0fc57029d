use serde::{Deserialize, Serialize};

use super::matrix::{gemm, Matrix, View};
use crate::{Error, Result};

/// Negative-side slope of the leaky ReLU.
pub const LEAKY_RELU_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu,
    Tanh,
    /// Row-wise softmax, stabilised by subtracting the row maximum and
    /// floored at the smallest normal `f64` so no probability underflows
    /// to exactly zero.
    Softmax,
    Identity,
}

impl Activation {
    /// Applies the activation to one row of pre-activations in place.
    pub fn apply(self, row: &mut [f64]) {
        match self {
            Activation::LeakyRelu => row.iter_mut().for_each(|v| {
                if *v < 0.0 {
                    *v *= LEAKY_RELU_SLOPE
                }
            }),
            Activation::Tanh => row.iter_mut().for_each(|v| *v = v.tanh()),
            Activation::Softmax => {
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in row.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                row.iter_mut().for_each(|v| *v = (*v / sum).max(f64::MIN_POSITIVE));
            }
            Activation::Identity => {}
        }
    }

    /// Maps `d loss / d output` to `d loss / d pre-activation` for one row,
    /// given the pre-activations `z` and outputs `y` of that row.
    fn backprop(self, z: &[f64], y: &[f64], grad: &mut [f64]) {
        match self {
            Activation::LeakyRelu => {
                for (g, &z) in grad.iter_mut().zip(z) {
                    if z < 0.0 {
                        *g *= LEAKY_RELU_SLOPE;
                    }
                }
            }
            Activation::Tanh => {
                for (g, &y) in grad.iter_mut().zip(y) {
                    *g *= 1.0 - y * y;
                }
            }
            Activation::Softmax => {
                let dot: f64 = grad.iter().zip(y).map(|(g, y)| g * y).sum();
                for (g, &y) in grad.iter_mut().zip(y) {
                    *g = y * (*g - dot);
                }
            }
            Activation::Identity => {}
        }
    }
}

/// Fully connected layer `y = act(W x + b)` with `W` stored row-major as
/// `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: Vec<f64>,
    biases: Vec<f64>,
    input_dim: usize,
    activation: Activation,
}

/// Gradients of one layer's parameters, shaped like the layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn new(
        input_dim: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        let out = biases.len();
        if input_dim == 0 || out == 0 {
            return Err(Error::param("layers need positive input and output sizes"));
        }
        if weights.len() != out * input_dim {
            return Err(Error::param(format!(
                "{} weights do not form a {out}x{input_dim} matrix",
                weights.len()
            )));
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::param("layer parameters must be finite"));
        }
        if activation == Activation::Softmax && out < 2 {
            return Err(Error::param("softmax needs at least two outputs"));
        }
        Ok(Self {
            weights,
            biases,
            input_dim,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.biases.len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Row-major `out x in`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub(crate) fn parameters_mut(&mut self) -> [&mut [f64]; 2] {
        [&mut self.weights, &mut self.biases]
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    /// Pre-activations `Z = X W^T + b` for a batch.
    pub(crate) fn linear(&self, x: &Matrix) -> Matrix {
        let (n, out) = (x.rows(), self.output_dim());
        let mut z = Matrix::zeros(n, out);
        for i in 0..n {
            z.row_mut(i).copy_from_slice(&self.biases);
        }
        gemm(
            View::row_major(x.as_slice(), n, self.input_dim),
            View::transposed(&self.weights, self.input_dim, out),
            1.0,
            z.as_mut_slice(),
        );
        z
    }

    pub(crate) fn activate(&self, z: &Matrix) -> Matrix {
        let mut y = z.clone();
        for i in 0..y.rows() {
            self.activation.apply(y.row_mut(i));
        }
        y
    }

    /// Given the layer input `x`, pre-activations `z`, outputs `y` and
    /// `d loss / d y`, returns the parameter gradients and `d loss / d x`.
    pub(crate) fn backward(
        &self,
        x: &Matrix,
        z: &Matrix,
        y: &Matrix,
        mut grad: Matrix,
    ) -> (LayerGradients, Matrix) {
        let (n, out, inp) = (x.rows(), self.output_dim(), self.input_dim);
        for i in 0..n {
            self.activation.backprop(z.row(i), y.row(i), grad.row_mut(i));
        }
        let mut weights = vec![0.0; out * inp];
        gemm(
            View::transposed(grad.as_slice(), out, n),
            View::row_major(x.as_slice(), n, inp),
            0.0,
            &mut weights,
        );
        let mut biases = vec![0.0; out];
        for row in grad.row_iter() {
            for (b, g) in biases.iter_mut().zip(row) {
                *b += g;
            }
        }
        let mut input = Matrix::zeros(n, inp);
        gemm(
            View::row_major(grad.as_slice(), n, out),
            View::row_major(&self.weights, out, inp),
            0.0,
            input.as_mut_slice(),
        );
        (LayerGradients { weights, biases }, input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaky_relu_of_minus_one() {
        let mut v = [-1.0, 0.0, 2.5];
        Activation::LeakyRelu.apply(&mut v);
        assert_eq!(v, [-0.2, 0.0, 2.5]);
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let mut v = [0.0, 0.0];
        Activation::Softmax.apply(&mut v);
        assert_eq!(v, [0.5, 0.5]);
    }

    #[test]
    fn softmax_is_stable_for_large_logits() {
        let mut v = [1000.0, -1000.0, 999.0];
        Activation::Softmax.apply(&mut v);
        assert!(v.iter().all(|x| x.is_finite() && *x > 0.0));
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tanh_is_bounded() {
        let mut v = [-30.0, 0.1, 30.0];
        Activation::Tanh.apply(&mut v);
        assert!(v.iter().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn construction_is_validated() {
        assert!(DenseLayer::new(2, vec![0.0; 5], vec![0.0; 3], Activation::Identity).is_err());
        assert!(DenseLayer::new(1, vec![f64::NAN], vec![0.0], Activation::Identity).is_err());
        assert!(DenseLayer::new(1, vec![0.0], vec![0.0], Activation::Softmax).is_err());
        assert!(DenseLayer::new(2, vec![0.0; 6], vec![0.0; 3], Activation::Tanh).is_ok());
    }
}
