use serde::{Deserialize, Serialize};

use super::normalize_condition;
use crate::nn::AdamHyper;
use crate::stats::Condition;
use crate::signal::PROCESSED_LEN;
use crate::{Error, Result};

/// Size of the condition vector appended to noise and to envelopes.
pub const CONDITION_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanConfig {
    pub noise_dim: usize,
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub output_dim: usize,
    pub batch_size: usize,
    /// Full shuffled passes over the training set.
    pub epochs: usize,
    pub seed: u64,
    pub generator_adam: AdamHyper,
    pub discriminator_adam: AdamHyper,
    /// Factor applied to the normalised condition vector where it is
    /// concatenated onto the network inputs. A single condition input next
    /// to hundreds of envelope samples otherwise carries too little weight
    /// for the networks to learn condition-dependent behaviour.
    pub condition_gain: f64,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            noise_dim: 100,
            generator_hidden: vec![256, 512, 512, 1024],
            discriminator_hidden: vec![512, 256, 128],
            output_dim: PROCESSED_LEN,
            batch_size: 64,
            epochs: 100,
            seed: 0,
            // a generator moving as fast as the discriminator keeps it at
            // chance; slower generator steps leave it informative
            generator_adam: AdamHyper {
                learning_rate: 3e-5,
                ..AdamHyper::default()
            },
            discriminator_adam: AdamHyper::default(),
            condition_gain: 10.0,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.noise_dim == 0 || self.output_dim == 0 || self.batch_size == 0 {
            return Err(Error::param(
                "noise_dim, output_dim and batch_size must be positive",
            ));
        }
        if self
            .generator_hidden
            .iter()
            .chain(&self.discriminator_hidden)
            .any(|&d| d == 0)
        {
            return Err(Error::param("hidden layer widths must be positive"));
        }
        if !(self.condition_gain > 0.0) || !self.condition_gain.is_finite() {
            return Err(Error::param(format!(
                "condition_gain must be finite and positive, got {}",
                self.condition_gain
            )));
        }
        self.generator_adam.validate()?;
        self.discriminator_adam.validate()
    }

    /// Condition vector as the networks see it.
    pub fn network_condition(&self, cond: &Condition) -> Result<[f64; CONDITION_DIM]> {
        Ok(normalize_condition(cond)?
            .to_array()
            .map(|v| v * self.condition_gain))
    }

    /// Generator layer sizes: noise + condition, hidden widths, output.
    pub fn generator_dims(&self) -> Vec<usize> {
        std::iter::once(self.noise_dim + CONDITION_DIM)
            .chain(self.generator_hidden.iter().copied())
            .chain(std::iter::once(self.output_dim))
            .collect()
    }

    /// Discriminator layer sizes: envelope + condition, hidden widths, two
    /// classes.
    pub fn discriminator_dims(&self) -> Vec<usize> {
        std::iter::once(self.output_dim + CONDITION_DIM)
            .chain(self.discriminator_hidden.iter().copied())
            .chain(std::iter::once(2))
            .collect()
    }
}
