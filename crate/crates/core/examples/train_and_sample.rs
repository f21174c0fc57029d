//! Train a reduced cGAN for a few epochs, write the checkpoint, reload it
//! and draw condition-controlled envelopes.
//!
//!     cargo run --release --example train_and_sample [epochs]

use ulsgan::cgan::{load_checkpoint, sample, save_checkpoint, train_with_progress, GanConfig};
use ulsgan::corpus::{synth_processed_corpus, CorpusParams, MeasurementGrid};
use ulsgan::signal::PipelineConfig;
use ulsgan::stats::{Condition, Ground};

fn main() -> ulsgan::Result<()> {
    let epochs = std::env::args()
        .nth(1)
        .map(|a| a.parse().expect("epochs must be an integer"))
        .unwrap_or(5);
    let grid = MeasurementGrid {
        heights_m: vec![0.40, 0.55],
        betas_deg: vec![0.0],
        rotations: 8,
        repetitions: 8,
        grounds: Ground::ALL.to_vec(),
    };
    let data = synth_processed_corpus(&grid, &CorpusParams::default(), &PipelineConfig::default(), 1)?
        .labeled()?;

    // narrower than the default networks so the example finishes quickly
    let cfg = GanConfig {
        generator_hidden: vec![64, 128, 128, 256],
        discriminator_hidden: vec![128, 64, 32],
        epochs,
        seed: 3,
        ..GanConfig::default()
    };
    let outcome = train_with_progress(&data, &cfg, |e| {
        println!(
            "epoch {:>3}: d_loss {:.4}, g_loss {:.4}, D(real) {:.3}, D(fake) {:.3}",
            e.epoch, e.d_loss, e.g_loss, e.d_real, e.d_fake
        )
    })?;
    println!(
        "{} discriminator updates; amplitude scale {}",
        outcome.discriminator_updates, outcome.checkpoint.amplitude_scale
    );

    let path = std::env::temp_dir().join("ulsgan-example.ulsg");
    save_checkpoint(&outcome.checkpoint, &path)?;
    let ckpt = load_checkpoint(&path)?;
    println!(
        "checkpoint {} ({} bytes), trained on {:?}",
        path.display(),
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        ckpt.metadata.training_hull
    );

    for ground in Ground::ALL {
        let cond = Condition::new(0.45, 0.0, ground);
        let signals = sample(&ckpt, &cond, 50, 9)?;
        let mean = signals.iter().flat_map(|s| &s.samples).sum::<f64>()
            / (signals.len() * signals[0].len()) as f64;
        println!("{cond}: {} envelopes, mean amplitude {mean:.4}", signals.len());
    }

    let outside = Condition::new(0.60, 0.0, Ground::Gravel);
    match ckpt.metadata.training_hull.ensure_contains(&outside) {
        Ok(()) => println!("{outside} is inside the training hull"),
        Err(e) => println!("refused: {e}"),
    }
    Ok(())
}
