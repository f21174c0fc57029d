//! Conditional GAN over processed envelopes: architecture, training,
//! sampling and checkpoints.
//!
//! The generator maps 100-d standard-normal noise plus a 3-d condition
//! vector to a 583-sample envelope in `tanh` units; the discriminator maps
//! an envelope plus the same condition vector to `[real, generated]`
//! probabilities.

mod checkpoint;
mod condition;
mod config;
mod model;
mod sample;
mod train;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, ConditionHull, TrainingMetadata,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use condition::{denormalize_condition, normalize_condition, NormalizedCondition};
pub use config::{GanConfig, CONDITION_DIM};
pub use model::{build_discriminator, build_generator, gan_losses, PROBABILITY_CLAMP, REAL_CLASS};
pub use sample::sample;
pub use train::{
    train, train_with_progress, write_loss_log, write_loss_log_file, EpochLoss, TrainOutcome,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::ProcessedSignal;
    use crate::stats::{Condition, Ground, LabeledSignal};
    use crate::Error;

    fn tiny_cfg() -> GanConfig {
        GanConfig {
            noise_dim: 4,
            generator_hidden: vec![8, 8, 8, 8],
            discriminator_hidden: vec![8, 8, 8],
            output_dim: 12,
            batch_size: 5,
            epochs: 3,
            seed: 17,
            ..GanConfig::default()
        }
    }

    fn tiny_data(n: usize) -> Vec<LabeledSignal> {
        (0..n)
            .map(|i| LabeledSignal {
                condition: Condition::new(
                    if i % 2 == 0 { 0.36 } else { 0.6 },
                    0.0,
                    if i % 3 == 0 { Ground::Gravel } else { Ground::Asphalt },
                ),
                signal: ProcessedSignal::new(
                    (0..12).map(|j| ((i * 7 + j) % 5) as f64 * 0.1 + 0.05).collect(),
                    20_000.0,
                ),
            })
            .collect()
    }

    #[test]
    fn update_count_is_epochs_times_batches() {
        let out = train(&tiny_data(23), &tiny_cfg()).unwrap();
        // ceil(23 / 5) = 5 batches per epoch
        assert_eq!(out.discriminator_updates, 15);
        assert_eq!(out.checkpoint.metadata.discriminator_updates, 15);
        assert_eq!(out.log.len(), 3);
        assert_eq!(out.log[2].epoch, 3);
        assert!(out.log.iter().all(|e| e.d_loss.is_finite() && e.g_loss > 0.0));
    }

    #[test]
    fn training_is_deterministic_to_the_byte() {
        let a = train(&tiny_data(12), &tiny_cfg()).unwrap();
        let b = train(&tiny_data(12), &tiny_cfg()).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.checkpoint.to_bytes().unwrap(), b.checkpoint.to_bytes().unwrap());
    }

    #[test]
    fn wrong_record_length_fails_before_training() {
        let mut data = tiny_data(6);
        data[4].signal.samples.pop();
        assert!(matches!(train(&data, &tiny_cfg()), Err(Error::Parameter(_))));
        assert!(matches!(train(&[], &tiny_cfg()), Err(Error::Parameter(_))));
    }

    #[test]
    fn hull_covers_the_training_conditions() {
        let ckpt = train(&tiny_data(6), &tiny_cfg()).unwrap().checkpoint;
        let hull = &ckpt.metadata.training_hull;
        assert_eq!((hull.height_min_m, hull.height_max_m), (0.36, 0.6));
        assert_eq!(hull.grounds, vec![Ground::Gravel, Ground::Asphalt]);
        assert!(hull.ensure_contains(&Condition::new(0.7, 0.0, Ground::Gravel)).is_err());
        assert!(hull.contains(&Condition::new(0.5, 0.0, Ground::Asphalt)));
    }

    #[test]
    fn samples_have_shape_sign_and_determinism() {
        let ckpt = train(&tiny_data(10), &tiny_cfg()).unwrap().checkpoint;
        let cond = Condition::new(0.4, 0.0, Ground::Gravel);
        let s = sample(&ckpt, &cond, 300, 5).unwrap();
        assert_eq!(s.len(), 300);
        assert!(s.iter().all(|x| x.len() == 12 && x.samples.iter().all(|&v| v >= 0.0)));
        assert_eq!(s, sample(&ckpt, &cond, 300, 5).unwrap());
        assert!(sample(&ckpt, &cond, 0, 5).unwrap().is_empty());
        assert!(sample(&ckpt, &Condition::new(0.2, 0.0, Ground::Gravel), 1, 5).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let ckpt = train(&tiny_data(10), &tiny_cfg()).unwrap().checkpoint;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ulsg");
        save_checkpoint(&ckpt, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, ckpt);
        let cond = Condition::new(0.5, 1.0, Ground::Asphalt);
        assert_eq!(sample(&back, &cond, 4, 9).unwrap(), sample(&ckpt, &cond, 4, 9).unwrap());
    }

    #[test]
    fn damaged_checkpoints_are_classified() {
        let ckpt = train(&tiny_data(10), &tiny_cfg()).unwrap().checkpoint;
        let bytes = ckpt.to_bytes().unwrap();

        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&magic), Err(Error::Format(_))));

        let mut version = bytes.clone();
        version[4] = 9;
        assert!(matches!(Checkpoint::from_bytes(&version), Err(Error::Format(_))));

        let truncated = &bytes[..bytes.len() - 10];
        assert!(matches!(
            Checkpoint::from_bytes(truncated),
            Err(Error::Corruption { .. })
        ));
        assert!(matches!(
            Checkpoint::from_bytes(&bytes[..12]),
            Err(Error::Corruption { .. })
        ));

        let mut flipped = bytes.clone();
        let last = flipped.len() - 1;
        flipped[last] ^= 1;
        assert!(matches!(Checkpoint::from_bytes(&flipped), Err(Error::Integrity(_))));
    }

    #[test]
    fn header_declaring_extra_layers_is_corruption() {
        let ckpt = train(&tiny_data(10), &tiny_cfg()).unwrap().checkpoint;
        let mut bigger = ckpt.clone();
        bigger.config.generator_hidden.push(8);
        bigger.generator = build_generator(&bigger.config).unwrap();
        // header from the bigger model, blob from the original
        let big = bigger.to_bytes().unwrap();
        let small = ckpt.to_bytes().unwrap();
        let hlen = |b: &[u8]| u64::from_le_bytes(b[8..16].try_into().unwrap()) as usize;
        let mut forged = big[..16 + hlen(&big)].to_vec();
        forged.extend_from_slice(&small[16 + hlen(&small)..]);
        assert!(matches!(
            Checkpoint::from_bytes(&forged),
            Err(Error::Corruption { .. })
        ));
    }

    #[test]
    fn bad_amplitude_scale_is_an_integrity_error() {
        let mut ckpt = train(&tiny_data(10), &tiny_cfg()).unwrap().checkpoint;
        ckpt.amplitude_scale = 0.0;
        let cond = Condition::new(0.5, 1.0, Ground::Asphalt);
        assert!(matches!(sample(&ckpt, &cond, 1, 0), Err(Error::Integrity(_))));
    }

    #[test]
    fn loss_log_has_one_header_and_one_row_per_epoch() {
        let out = train(&tiny_data(10), &tiny_cfg()).unwrap();
        let mut buf = Vec::new();
        write_loss_log(&out.log, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + out.log.len());
        assert_eq!(lines[0], "epoch,d_loss,g_loss,d_real,d_fake");
        assert!(lines[1].starts_with("1,"));
    }
}
