use serde::{Deserialize, Serialize};

use super::network::{Gradients, MlpNetwork};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            learning_rate: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamHyper {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if !ok {
            return Err(Error::param(format!("invalid Adam hyperparameters {self:?}")));
        }
        Ok(())
    }
}

/// Moment accumulators shaped like a network's parameter tensors (weights
/// then biases, layer by layer).
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub hyper: AdamHyper,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(net: &MlpNetwork, hyper: AdamHyper) -> Result<Self> {
        hyper.validate()?;
        let shapes: Vec<usize> = net
            .layers()
            .iter()
            .flat_map(|l| [l.weights().len(), l.biases().len()])
            .collect();
        Ok(Self {
            hyper,
            step: 0,
            first: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        })
    }
}

/// One bias-corrected Adam update of `net` (gradient descent on the loss
/// whose gradients are `grads`).
pub fn adam_step(net: &mut MlpNetwork, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    let grad_tensors: Vec<&[f64]> = grads
        .layers
        .iter()
        .flat_map(|g| [g.weights.as_slice(), g.biases.as_slice()])
        .collect();
    let shapes_match = grad_tensors.len() == state.first.len()
        && grad_tensors
            .iter()
            .zip(&state.first)
            .all(|(g, m)| g.len() == m.len());
    let params = net.parameters_mut();
    if !shapes_match
        || params.len() != grad_tensors.len()
        || params.iter().zip(&grad_tensors).any(|(p, g)| p.len() != g.len())
    {
        return Err(Error::param("gradient, optimizer and network shapes differ"));
    }

    let AdamHyper {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.hyper;
    state.step += 1;
    let t = state.step as i32;
    let correction1 = 1.0 - beta1.powi(t);
    let correction2 = 1.0 - beta2.powi(t);
    for (((p, g), m), v) in params
        .into_iter()
        .zip(grad_tensors)
        .zip(&mut state.first)
        .zip(&mut state.second)
    {
        for i in 0..p.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            p[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}
