use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layer::{Activation, DenseLayer, LayerGradients};
use super::matrix::Matrix;
use crate::{Error, Result};

static NEXT_NETWORK_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_NETWORK_ID.fetch_add(1, Ordering::Relaxed)
}

/// A stack of dense layers.
///
/// Every network carries an identity and a revision that changes whenever
/// its parameters are mutated, so a [`ForwardCache`] taken before an update
/// cannot be fed to [`MlpNetwork::backward`] afterwards.
#[derive(Debug)]
pub struct MlpNetwork {
    layers: Vec<DenseLayer>,
    id: u64,
    revision: u64,
}

impl Clone for MlpNetwork {
    fn clone(&self) -> Self {
        Self {
            layers: self.layers.clone(),
            id: fresh_id(),
            revision: 0,
        }
    }
}

impl PartialEq for MlpNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

/// Per-layer inputs, pre-activations and outputs of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    network_id: u64,
    revision: u64,
    inputs: Vec<Matrix>,
    pre_activations: Vec<Matrix>,
    output: Matrix,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        &self.output
    }
}

/// Parameter gradients of every layer plus the input gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradients>,
    pub input: Matrix,
}

impl Gradients {
    /// Sum of squares of every parameter gradient.
    pub fn squared_norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases))
            .map(|g| g * g)
            .sum()
    }
}

/// Xavier-uniform weights (`|w| <= sqrt(6 / (fan_in + fan_out))`) and zero
/// biases; `dims` lists the input size followed by every layer's output
/// size. Deterministic in `seed`.
pub fn init_network(dims: &[usize], activations: &[Activation], seed: u64) -> Result<MlpNetwork> {
    if dims.len() < 2 {
        return Err(Error::param("a network needs an input size and at least one layer"));
    }
    if activations.len() != dims.len() - 1 {
        return Err(Error::param(format!(
            "{} layers need {} activations, got {}",
            dims.len() - 1,
            dims.len() - 1,
            activations.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = dims
        .windows(2)
        .zip(activations)
        .map(|(w, &act)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            DenseLayer::new(fan_in, weights, vec![0.0; fan_out], act)
        })
        .collect::<Result<Vec<_>>>()?;
    MlpNetwork::from_layers(layers)
}

impl MlpNetwork {
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::param("a network needs at least one layer"));
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].output_dim() != w[1].input_dim() {
                return Err(Error::param(format!(
                    "layer {} outputs {} values but layer {} expects {}",
                    i,
                    w[0].output_dim(),
                    i + 1,
                    w[1].input_dim()
                )));
            }
        }
        Ok(Self {
            layers,
            id: fresh_id(),
            revision: 0,
        })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// Input size followed by every layer's output size.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(DenseLayer::output_dim))
            .collect()
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(DenseLayer::activation).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::parameter_count).sum()
    }

    /// Mutable access to every parameter tensor: weights then biases, layer
    /// by layer. Invalidates outstanding forward caches.
    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        self.revision += 1;
        self.layers
            .iter_mut()
            .flat_map(DenseLayer::parameters_mut)
            .collect()
    }

    /// Rounds every parameter to the nearest float32, the on-disk precision.
    pub fn quantize_f32(&mut self) {
        for p in self.parameters_mut() {
            p.iter_mut().for_each(|v| *v = f64::from(*v as f32));
        }
    }

    /// Forward pass for a batch (one row per item).
    pub fn forward_batch(&self, input: &Matrix) -> Result<ForwardCache> {
        if input.cols() != self.input_dim() {
            return Err(Error::param(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.cols()
            )));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for layer in &self.layers {
            let z = layer.linear(&x);
            let y = layer.activate(&z);
            inputs.push(x);
            pre_activations.push(z);
            x = y;
        }
        Ok(ForwardCache {
            network_id: self.id,
            revision: self.revision,
            inputs,
            pre_activations,
            output: x,
        })
    }

    /// Output for a batch without keeping intermediates.
    pub fn predict(&self, input: &Matrix) -> Result<Matrix> {
        if input.cols() != self.input_dim() {
            return Err(Error::param(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.cols()
            )));
        }
        let mut x = input.clone();
        for layer in &self.layers {
            x = layer.activate(&layer.linear(&x));
        }
        Ok(x)
    }

    /// Forward pass for a single input vector.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        let cache = self.forward_batch(&Matrix::from_rows(&[input])?)?;
        Ok((cache.output.row(0).to_vec(), cache))
    }

    /// Exact reverse-mode gradients of `sum(output_gradient * output)`,
    /// summed over the batch.
    pub fn backward(&self, cache: &ForwardCache, output_gradient: &Matrix) -> Result<Gradients> {
        if cache.network_id != self.id || cache.revision != self.revision {
            return Err(Error::Usage(
                "forward cache belongs to another network or predates a parameter update"
                    .into(),
            ));
        }
        if output_gradient.rows() != cache.output.rows()
            || output_gradient.cols() != cache.output.cols()
        {
            return Err(Error::param(format!(
                "output gradient is {}x{}, output is {}x{}",
                output_gradient.rows(),
                output_gradient.cols(),
                cache.output.rows(),
                cache.output.cols()
            )));
        }
        let mut grad = output_gradient.clone();
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let y = cache.inputs.get(i + 1).unwrap_or(&cache.output);
            let (g, input_grad) =
                layer.backward(&cache.inputs[i], &cache.pre_activations[i], y, grad);
            layers.push(g);
            grad = input_grad;
        }
        layers.reverse();
        Ok(Gradients {
            layers,
            input: grad,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_network(&[5, 3], &[Activation::Identity], 9).unwrap();
        let b = init_network(&[5, 3], &[Activation::Identity], 9).unwrap();
        assert_eq!(a, b);
        let big = init_network(&[100, 50], &[Activation::Tanh], 1).unwrap();
        let bound = (6.0f64 / 150.0).sqrt();
        assert!(big.layers()[0].weights().iter().all(|w| w.abs() <= bound));
        assert!(big.layers()[0].biases().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn activation_count_must_match() {
        assert!(init_network(&[4, 3, 2], &[Activation::Tanh], 0).is_err());
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let eye = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let layer = DenseLayer::new(3, eye, vec![0.0; 3], Activation::Identity).unwrap();
        let net = MlpNetwork::from_layers(vec![layer]).unwrap();
        let (y, _) = net.forward(&[0.5, -2.0, 7.0]).unwrap();
        assert_eq!(y, vec![0.5, -2.0, 7.0]);
    }

    #[test]
    fn wrong_input_size_is_rejected() {
        let net = init_network(&[3, 2], &[Activation::Tanh], 0).unwrap();
        assert!(net.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let net = init_network(
            &[6, 8, 3],
            &[Activation::LeakyRelu, Activation::Softmax],
            4,
        )
        .unwrap();
        let x = Matrix::from_vec(4, 6, (0..24).map(|i| (i as f64 - 12.0) * 80.0).collect())
            .unwrap();
        let y = net.predict(&x).unwrap();
        for row in y.row_iter() {
            assert!(row.iter().all(|&p| p > 0.0 && p.is_finite()));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let net = init_network(&[4, 5, 2], &[Activation::LeakyRelu, Activation::Tanh], 2).unwrap();
        let (_, cache) = net.forward(&[0.1, -0.4, 0.9, 0.3]).unwrap();
        let g = net.backward(&cache, &Matrix::zeros(1, 2)).unwrap();
        assert_eq!(g.squared_norm(), 0.0);
        assert!(g.input.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_layer_weight_gradient_is_outer_product() {
        // loss = c . y with y = W x + b  =>  dW = c x^T, db = c
        let net = init_network(&[3, 2], &[Activation::Identity], 5).unwrap();
        let x = [0.3, -1.2, 2.0];
        let c = [0.7, -0.4];
        let (_, cache) = net.forward(&x).unwrap();
        let g = net.backward(&cache, &Matrix::from_rows(&[c]).unwrap()).unwrap();
        for o in 0..2 {
            for i in 0..3 {
                assert!((g.layers[0].weights[o * 3 + i] - c[o] * x[i]).abs() < 1e-15);
            }
        }
        assert_eq!(g.layers[0].biases, c.to_vec());
    }

    #[test]
    fn stale_cache_is_a_usage_error() {
        let mut net = init_network(&[2, 2], &[Activation::Tanh], 0).unwrap();
        let (_, cache) = net.forward(&[1.0, 2.0]).unwrap();
        net.parameters_mut()[0][0] += 0.1;
        assert!(matches!(
            net.backward(&cache, &Matrix::zeros(1, 2)),
            Err(Error::Usage(_))
        ));
        let other = init_network(&[2, 2], &[Activation::Tanh], 0).unwrap();
        let (_, cache) = other.forward(&[1.0, 2.0]).unwrap();
        assert!(matches!(
            net.backward(&cache, &Matrix::zeros(1, 2)),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn batch_forward_matches_single_forward_bitwise() {
        let net = init_network(&[3, 4, 2], &[Activation::LeakyRelu, Activation::Softmax], 8)
            .unwrap();
        let rows = [[0.1, 0.2, 0.3], [-1.0, 0.5, 2.0]];
        let batch = net.predict(&Matrix::from_rows(&rows).unwrap()).unwrap();
        for (i, r) in rows.iter().enumerate() {
            let (y, _) = net.forward(r).unwrap();
            let a: Vec<u64> = y.iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = batch.row(i).iter().map(|v| v.to_bits()).collect();
            // dgemm may block differently for one row; allow last-bit noise
            if a != b {
                for (p, q) in y.iter().zip(batch.row(i)) {
                    assert!((p - q).abs() < 1e-14);
                }
            }
        }
    }
}
