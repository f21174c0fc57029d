use crate::nn::{init_network, Activation, MlpNetwork};
use crate::corpus::splitmix64;
use crate::Result;

use super::GanConfig;

/// Probabilities are kept this far from 0 and 1 when losses are evaluated.
pub const PROBABILITY_CLAMP: f64 = 1e-7;

/// Index of the "real" class in the discriminator's softmax output; the
/// other class is "generated".
pub const REAL_CLASS: usize = 0;

pub(crate) fn derived_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

/// Noise + condition in; leaky-ReLU hidden layers; `tanh` envelope out.
pub fn build_generator(cfg: &GanConfig) -> Result<MlpNetwork> {
    cfg.validate()?;
    let dims = cfg.generator_dims();
    let mut acts = vec![Activation::LeakyRelu; dims.len() - 2];
    acts.push(Activation::Tanh);
    init_network(&dims, &acts, derived_seed(cfg.seed, 1))
}

/// Envelope + condition in; leaky-ReLU hidden layers; two-class softmax out
/// (`[real, generated]`).
pub fn build_discriminator(cfg: &GanConfig) -> Result<MlpNetwork> {
    cfg.validate()?;
    let dims = cfg.discriminator_dims();
    let mut acts = vec![Activation::LeakyRelu; dims.len() - 2];
    acts.push(Activation::Softmax);
    init_network(&dims, &acts, derived_seed(cfg.seed, 2))
}

/// Discriminator and (non-saturating) generator losses for the
/// discriminator's "real" probabilities on a real and a generated sample:
/// `d_loss = -(ln d_real + ln(1 - d_fake))`, `g_loss = -ln d_fake`.
pub fn gan_losses(d_real: f64, d_fake: f64) -> (f64, f64) {
    let clamp = |p: f64| p.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP);
    let (r, f) = (clamp(d_real), clamp(d_fake));
    (-(r.ln() + (1.0 - f).ln()), -f.ln())
}
