//! Desk-scale end-to-end run: synthesise a small corpus, train the cGAN for
//! the default 100 epochs and compare generated against reference
//! statistics on each condition's dominant clutter bin, then flip the ground
//! flag and check which reference the flipped output resembles.
//!
//!     cargo run --release --example desk_scale [epochs]

use std::time::Instant;

use ulsgan::cgan::{sample, train_with_progress, GanConfig};
use ulsgan::corpus::{synth_processed_corpus, CorpusParams, MeasurementGrid};
use ulsgan::signal::PipelineConfig;
use ulsgan::stats::{AnalysisConfig, Condition, Ground, LabeledSignal};
use ulsgan::validation::{compare_populations, CellComparison, Tolerances};

const SAMPLES_PER_CONDITION: usize = 200;

fn main() -> ulsgan::Result<()> {
    let epochs = std::env::args()
        .nth(1)
        .map(|a| a.parse().expect("epochs must be an integer"))
        .unwrap_or(100);
    let grid = MeasurementGrid {
        heights_m: vec![0.36, 0.48, 0.60],
        betas_deg: vec![0.0],
        rotations: 20,
        repetitions: 10,
        grounds: Ground::ALL.to_vec(),
    };
    let params = CorpusParams::default();
    let t0 = Instant::now();
    let reference = synth_processed_corpus(&grid, &params, &PipelineConfig::default(), 2024)?
        .labeled()?;
    println!("corpus: {} records in {:.1?}", reference.len(), t0.elapsed());

    let cfg = GanConfig {
        epochs,
        seed: 7,
        ..GanConfig::default()
    };
    let t1 = Instant::now();
    let outcome = train_with_progress(&reference, &cfg, |e| {
        if e.epoch % 10 == 0 {
            println!(
                "epoch {:3}  d_loss {:.4}  g_loss {:.4}  D(real) {:.3}  D(fake) {:.3}  [{:.0?}]",
                e.epoch,
                e.d_loss,
                e.g_loss,
                e.d_real,
                e.d_fake,
                t1.elapsed()
            )
        }
    })?;
    println!("training: {:.1?}", t1.elapsed());

    let mut conditions: Vec<Condition> = Vec::new();
    for r in &reference {
        if !conditions.contains(&r.condition) {
            conditions.push(r.condition);
        }
    }
    let of = |pop: &[LabeledSignal], c: &Condition| -> Vec<LabeledSignal> {
        pop.iter().filter(|s| s.condition == *c).cloned().collect()
    };
    let mut generated = Vec::new();
    for c in &conditions {
        for signal in sample(&outcome.checkpoint, c, SAMPLES_PER_CONDITION, 99)? {
            generated.push(LabeledSignal { condition: *c, signal });
        }
    }
    // `generated` relabelled as `c`, compared with the reference of `c`
    let compare = |c: &Condition, gen_of: &Condition| -> ulsgan::Result<CellComparison> {
        let gens: Vec<LabeledSignal> = of(&generated, gen_of)
            .into_iter()
            .map(|g| LabeledSignal { condition: *c, ..g })
            .collect();
        let report = compare_populations(
            &of(&reference, c),
            &gens,
            &[params.dominant_bin(c)],
            Tolerances::default(),
            &AnalysisConfig::default(),
        )?;
        Ok(report.cells[0].clone())
    };

    println!("\ngenerated vs reference, dominant bin:");
    for c in &conditions {
        let cell = compare(c, c)?;
        println!(
            "  {c} bin {}: ref k={:.3} theta={:.4}  gen k={:.3} theta={:.4}  err k={:.3} theta={:.3}",
            cell.bin.index,
            cell.reference.k,
            cell.reference.theta,
            cell.generated.k,
            cell.generated.theta,
            cell.rel_err_k,
            cell.rel_err_theta
        );
    }

    println!("\nground flag flipped:");
    for c in &conditions {
        let flipped = Condition::new(c.height_m, c.beta_deg, c.ground.flipped());
        let distance = |cell: CellComparison| cell.rel_err_k + cell.rel_err_theta;
        let to_flipped = distance(compare(&flipped, &flipped)?);
        let to_original = distance(compare(c, &flipped)?);
        println!(
            "  {c} -> {}: distance to {} reference {to_flipped:.3}, to {} reference {to_original:.3}",
            flipped.ground,
            flipped.ground,
            c.ground
        );
    }
    Ok(())
}
