use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::train::noise;
use super::Checkpoint;
use crate::nn::Matrix;
use crate::signal::{ProcessedSignal, PROCESSED_SAMPLE_RATE_HZ};
use crate::stats::Condition;
use crate::Result;

/// Rows per generator call; bounds memory for large counts.
const SAMPLE_CHUNK: usize = 256;

/// Draws `count` envelopes for `cond`: standard-normal noise through the
/// generator, `(y + 1) / 2 * amplitude_scale`, negatives clamped to 0.
/// Deterministic in `seed`.
pub fn sample(
    ckpt: &Checkpoint,
    cond: &Condition,
    count: usize,
    seed: u64,
) -> Result<Vec<ProcessedSignal>> {
    ckpt.validate()?;
    let c = ckpt.config.network_condition(cond)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut remaining = count;
    while remaining > 0 {
        let n = remaining.min(SAMPLE_CHUNK);
        remaining -= n;
        let z = noise(&mut rng, n, ckpt.config.noise_dim);
        let conds = Matrix::from_rows(&vec![c; n])?;
        let y = ckpt.generator.predict(&z.hstack(&conds)?)?;
        out.extend(y.row_iter().map(|row| {
            ProcessedSignal::new(
                row.iter()
                    .map(|&v| ((v + 1.0) / 2.0 * ckpt.amplitude_scale).max(0.0))
                    .collect(),
                PROCESSED_SAMPLE_RATE_HZ,
            )
        }));
    }
    Ok(out)
}
