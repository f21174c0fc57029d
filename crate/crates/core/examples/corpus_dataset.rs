//! Reference corpus on disk: stream a small measurement grid to a dataset
//! directory, read it back, verify it, and convert it to envelopes.
//!
//!     cargo run --release --example corpus_dataset [out-dir]

use std::path::PathBuf;

use ulsgan::corpus::{read_dataset, write_corpus, write_dataset, CorpusParams, MeasurementGrid};
use ulsgan::signal::PipelineConfig;
use ulsgan::stats::Ground;

fn main() -> ulsgan::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ulsgan-corpus-example"));
    let grid = MeasurementGrid {
        heights_m: vec![0.36, 0.48, 0.60],
        betas_deg: vec![-4.0, 0.0],
        rotations: 3,
        repetitions: 2,
        grounds: Ground::ALL.to_vec(),
    };
    println!(
        "the default grid has {} records; this one has {}",
        MeasurementGrid::default().record_count(),
        grid.record_count()
    );

    let raw_dir = out.join("raw");
    let manifest = write_corpus(&grid, &CorpusParams::default(), 2024, &raw_dir)?;
    println!("wrote {}", manifest.display());

    // every record's checksum is verified on the way back in
    let raw = read_dataset(&raw_dir)?;
    let first = &raw.manifest.records[0];
    println!(
        "{} {} records of {} samples at {} Hz; first: {} {} (rotation {}, repetition {}, seed {:#x})",
        raw.len(),
        raw.manifest.kind.as_str(),
        raw.manifest.record_length,
        raw.manifest.sample_rate_hz,
        first.file,
        first.condition,
        first.rotation,
        first.repetition,
        first.seed
    );

    let processed = raw.process(&PipelineConfig::default())?;
    let proc_dir = out.join("processed");
    write_dataset(&processed, &proc_dir)?;
    println!(
        "processed into {} records of {} samples at {} Hz under {}",
        processed.len(),
        processed.manifest.record_length,
        processed.manifest.sample_rate_hz,
        proc_dir.display()
    );
    Ok(())
}
