use super::matrix::Matrix;
use super::network::{Gradients, MlpNetwork};
use crate::{Error, Result};

/// A differentiable scalar loss of a network output.
pub trait Loss {
    fn value(&self, output: &[f64]) -> f64;
    fn gradient(&self, output: &[f64]) -> Vec<f64>;
}

/// `loss = c . y`.
#[derive(Debug, Clone)]
pub struct LinearLoss(pub Vec<f64>);

impl Loss for LinearLoss {
    fn value(&self, output: &[f64]) -> f64 {
        output.iter().zip(&self.0).map(|(y, c)| y * c).sum()
    }

    fn gradient(&self, _output: &[f64]) -> Vec<f64> {
        self.0.clone()
    }
}

/// `loss = 0.5 |y - target|^2`.
#[derive(Debug, Clone)]
pub struct SquaredError(pub Vec<f64>);

impl Loss for SquaredError {
    fn value(&self, output: &[f64]) -> f64 {
        0.5 * output
            .iter()
            .zip(&self.0)
            .map(|(y, t)| (y - t).powi(2))
            .sum::<f64>()
    }

    fn gradient(&self, output: &[f64]) -> Vec<f64> {
        output.iter().zip(&self.0).map(|(y, t)| y - t).collect()
    }
}

/// Networks larger than this are too slow to check by brute force.
pub const MAX_CHECKED_PARAMETERS: usize = 10_000;

/// Worst relative error between backpropagated and central-difference
/// gradients over every parameter and input coordinate.
pub fn grad_check(net: &MlpNetwork, loss: &dyn Loss, input: &[f64], eps: f64) -> Result<f64> {
    grad_check_with(net, loss, input, eps, |_| {})
}

/// [`grad_check`] with a hook that may alter the analytic gradients before
/// comparison, so tests can prove that a broken backward pass is caught.
pub fn grad_check_with(
    net: &MlpNetwork,
    loss: &dyn Loss,
    input: &[f64],
    eps: f64,
    mutate: impl FnOnce(&mut Gradients),
) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::param(format!("finite-difference step must be positive, got {eps}")));
    }
    if net.parameter_count() > MAX_CHECKED_PARAMETERS {
        return Err(Error::param(format!(
            "{} parameters exceed the brute-force limit of {MAX_CHECKED_PARAMETERS}",
            net.parameter_count()
        )));
    }
    let (output, cache) = net.forward(input)?;
    let seed = Matrix::from_rows(&[loss.gradient(&output)])?;
    let mut analytic = net.backward(&cache, &seed)?;
    mutate(&mut analytic);

    let eval = |n: &MlpNetwork, x: &[f64]| -> Result<f64> { Ok(loss.value(&n.forward(x)?.0)) };
    let mut worst = 0.0f64;
    let mut compare = |a: f64, numeric: f64| {
        let scale = a.abs().max(numeric.abs()).max(1e-7);
        worst = worst.max((a - numeric).abs() / scale);
    };

    let mut probe = net.clone();
    let analytic_params: Vec<Vec<f64>> = analytic
        .layers
        .iter()
        .flat_map(|l| [l.weights.clone(), l.biases.clone()])
        .collect();
    for (t, grads) in analytic_params.iter().enumerate() {
        for (i, &a) in grads.iter().enumerate() {
            let orig = probe.parameters_mut()[t][i];
            probe.parameters_mut()[t][i] = orig + eps;
            let plus = eval(&probe, input)?;
            probe.parameters_mut()[t][i] = orig - eps;
            let minus = eval(&probe, input)?;
            probe.parameters_mut()[t][i] = orig;
            compare(a, (plus - minus) / (2.0 * eps));
        }
    }
    let mut x = input.to_vec();
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + eps;
        let plus = eval(net, &x)?;
        x[i] = orig - eps;
        let minus = eval(net, &x)?;
        x[i] = orig;
        compare(analytic.input.row(0)[i], (plus - minus) / (2.0 * eps));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_network, Activation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ACTS: [Activation; 3] = [Activation::LeakyRelu, Activation::Tanh, Activation::Identity];

    fn random_case(seed: u64) -> (MlpNetwork, Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let depth = rng.random_range(1..=3);
        let mut dims = vec![rng.random_range(1..=8)];
        let mut acts = Vec::new();
        for l in 0..depth {
            let last = l + 1 == depth;
            dims.push(rng.random_range(if last { 2 } else { 1 }..=8));
            acts.push(if last && rng.random_bool(0.5) {
                Activation::Softmax
            } else {
                ACTS[rng.random_range(0..ACTS.len())]
            });
        }
        let net = init_network(&dims, &acts, seed).unwrap();
        let x = (0..dims[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
        let t = (0..*dims.last().unwrap()).map(|_| rng.random_range(-1.0..1.0)).collect();
        (net, x, t)
    }

    #[test]
    fn backward_matches_finite_differences_on_random_architectures() {
        for seed in 0..20 {
            let (net, x, t) = random_case(seed);
            let err = grad_check(&net, &SquaredError(t), &x, 1e-5).unwrap();
            assert!(err < 1e-4, "seed {seed}, dims {:?}: {err}", net.dims());
        }
    }

    #[test]
    fn sign_flip_in_one_layer_is_detected() {
        let net = init_network(&[4, 6, 3], &[Activation::Tanh, Activation::Softmax], 12).unwrap();
        let loss = SquaredError(vec![1.0, 0.0, 0.0]);
        let x = [0.3, -0.8, 0.5, 1.1];
        let err = grad_check_with(&net, &loss, &x, 1e-5, |g| {
            g.layers[0].weights.iter_mut().for_each(|w| *w = -*w)
        })
        .unwrap();
        assert!(err > 1e-1, "{err}");
    }

    #[test]
    fn zero_step_is_rejected() {
        let net = init_network(&[2, 2], &[Activation::Tanh], 0).unwrap();
        assert!(grad_check(&net, &LinearLoss(vec![1.0, 1.0]), &[0.0, 0.0], 0.0).is_err());
    }
}
