//! Synthetic reference corpus: a parameterised ground-clutter model standing
//! in for a measurement campaign, the campaign grid, and dataset persistence.

mod dataset;
mod grid;
mod params;
mod synth;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use dataset::{
    read_dataset, write_dataset, Dataset, DatasetKind, DatasetManifest, RecordEntry, RecordLabel,
    FORMAT_VERSION, MANIFEST_FILE, RECORDS_DIR,
};
pub use grid::{record_seed, splitmix64, MeasurementGrid, RecordSpec};
pub use params::{CorpusParams, GroundTrend, HeightTrend, PeakMap};
pub use synth::{synth_raw_signal, ConditionModel};

use crate::signal::{Pipeline, PipelineConfig, RAW_SAMPLE_RATE_HZ};
use crate::{Error, Result};

impl RecordSpec {
    pub fn label(&self) -> RecordLabel {
        RecordLabel {
            condition: self.condition,
            rotation: self.rotation,
            repetition: self.repetition,
            seed: self.seed,
        }
    }
}

/// Records grouped per (ground, height, angle) cell, in grid order.
fn cells(grid: &MeasurementGrid, master_seed: u64) -> Vec<Vec<RecordSpec>> {
    let per_cell = grid.rotations as usize * grid.repetitions as usize;
    let specs: Vec<RecordSpec> = grid.records(master_seed).collect();
    specs.chunks(per_cell).map(<[_]>::to_vec).collect()
}

/// Synthesises one cell, optionally running the envelope chain on each
/// record. Samples come back in spec order.
fn synth_cell(
    specs: &[RecordSpec],
    params: &CorpusParams,
    pipeline: Option<&Pipeline>,
) -> Result<Vec<Vec<f64>>> {
    let model = ConditionModel::new(&specs[0].condition, params)?;
    specs
        .par_iter()
        .map(|s| {
            let raw = model.synthesize(s.seed);
            match pipeline {
                Some(p) => p.process(&raw).map(|e| e.samples),
                None => Ok(raw.samples),
            }
        })
        .collect()
}

fn synth_in_memory(
    grid: &MeasurementGrid,
    params: &CorpusParams,
    master_seed: u64,
    pipeline: Option<&Pipeline>,
) -> Result<Vec<(RecordLabel, Vec<f64>)>> {
    grid.validate()?;
    params.validate()?;
    let mut out = Vec::with_capacity(grid.record_count());
    for cell in cells(grid, master_seed) {
        let samples = synth_cell(&cell, params, pipeline)?;
        out.extend(cell.iter().map(RecordSpec::label).zip(samples));
    }
    Ok(out)
}

/// Synthesises the whole grid in memory as a raw dataset.
///
/// Every record's seed comes from [`record_seed`], so a record's content
/// depends only on `master_seed` and its grid coordinates.
pub fn synth_corpus(
    grid: &MeasurementGrid,
    params: &CorpusParams,
    master_seed: u64,
) -> Result<Dataset> {
    let records = synth_in_memory(grid, params, master_seed, None)?;
    Dataset::from_records(DatasetKind::Raw, RAW_SAMPLE_RATE_HZ, records)
}

/// Synthesises the grid and processes every record straight away, without
/// keeping raw captures around. Equal to
/// `synth_corpus(..)?.process(pipeline_cfg)` up to the float32 rounding of
/// the raw samples.
pub fn synth_processed_corpus(
    grid: &MeasurementGrid,
    params: &CorpusParams,
    pipeline_cfg: &PipelineConfig,
    master_seed: u64,
) -> Result<Dataset> {
    pipeline_cfg.validate(crate::signal::RAW_LEN, RAW_SAMPLE_RATE_HZ)?;
    let pipeline = Pipeline::new(pipeline_cfg, RAW_SAMPLE_RATE_HZ)?;
    let records = synth_in_memory(grid, params, master_seed, Some(&pipeline))?;
    Dataset::from_records(DatasetKind::Processed, pipeline_cfg.output_rate_hz, records)
}

/// Synthesises the grid straight to disk one cell at a time, so memory use
/// stays bounded for the full campaign; the manifest is written last.
/// Produces the same files as `write_dataset(&synth_corpus(..)?, dir)`.
pub fn write_corpus(
    grid: &MeasurementGrid,
    params: &CorpusParams,
    master_seed: u64,
    dir: &Path,
) -> Result<PathBuf> {
    grid.validate()?;
    params.validate()?;
    let records_dir = dir.join(RECORDS_DIR);
    fs::create_dir_all(&records_dir).map_err(|e| Error::io(&records_dir, e))?;

    let mut entries = Vec::with_capacity(grid.record_count());
    let mut record_length = crate::signal::RAW_LEN;
    for cell in cells(grid, master_seed) {
        let samples = synth_cell(&cell, params, None)?;
        let chunk = Dataset::from_records(
            DatasetKind::Raw,
            RAW_SAMPLE_RATE_HZ,
            cell.iter().map(RecordSpec::label).zip(samples),
        )?;
        record_length = chunk.manifest.record_length;
        let first = cell[0].index;
        let written: Vec<RecordEntry> = chunk
            .manifest
            .records
            .into_par_iter()
            .zip(chunk.records.par_iter())
            .enumerate()
            .map(|(i, (mut entry, data))| {
                entry.file = dataset::record_file_name(first + i);
                dataset::write_record(dir, &entry, data)?;
                Ok(entry)
            })
            .collect::<Result<_>>()?;
        entries.extend(written);
    }
    dataset::write_manifest(
        dir,
        &DatasetManifest {
            format_version: FORMAT_VERSION,
            kind: DatasetKind::Raw,
            sample_rate_hz: RAW_SAMPLE_RATE_HZ,
            record_length,
            records: entries,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Ground;

    fn small_grid() -> MeasurementGrid {
        MeasurementGrid {
            heights_m: vec![0.40, 0.55],
            betas_deg: vec![0.0],
            rotations: 2,
            repetitions: 2,
            grounds: vec![Ground::Asphalt],
        }
    }

    #[test]
    fn synth_corpus_has_one_record_per_grid_point() {
        let d = synth_corpus(&small_grid(), &CorpusParams::default(), 7).unwrap();
        assert_eq!(d.len(), 8);
        assert_eq!(d.manifest.record_length, 9_900);
        assert_eq!(d.manifest.records[5].condition.height_m, 0.55);
        assert_eq!(d.manifest.records[5].rotation, 0);
        assert_eq!(d.manifest.records[5].repetition, 1);
    }

    #[test]
    fn streaming_write_matches_in_memory_write() {
        let grid = small_grid();
        let params = CorpusParams::default();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        write_dataset(&synth_corpus(&grid, &params, 3).unwrap(), a.path()).unwrap();
        write_corpus(&grid, &params, 3, b.path()).unwrap();
        let ma = fs::read(a.path().join(MANIFEST_FILE)).unwrap();
        let mb = fs::read(b.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(read_dataset(a.path()).unwrap(), read_dataset(b.path()).unwrap());
    }

    #[test]
    fn processed_shortcut_agrees_with_processing_the_raw_dataset() {
        let grid = small_grid();
        let params = CorpusParams::default();
        let cfg = PipelineConfig::default();
        let direct = synth_processed_corpus(&grid, &params, &cfg, 11).unwrap();
        let via_raw = synth_corpus(&grid, &params, 11).unwrap().process(&cfg).unwrap();
        assert_eq!(direct.manifest.records.len(), via_raw.manifest.records.len());
        for (x, y) in direct.records.iter().zip(&via_raw.records) {
            for (p, q) in x.iter().zip(y) {
                // raw samples are rounded to float32 on the raw path
                assert!((p - q).abs() < 1e-5, "{p} vs {q}");
            }
        }
    }

    #[test]
    fn processing_an_empty_raw_dataset_is_structural() {
        let empty = Dataset::from_records(DatasetKind::Raw, RAW_SAMPLE_RATE_HZ, []).unwrap();
        assert!(matches!(
            empty.process(&PipelineConfig::default()),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn invalid_grid_is_rejected_before_synthesis() {
        let mut grid = small_grid();
        grid.heights_m = vec![0.2];
        assert!(synth_corpus(&grid, &CorpusParams::default(), 1).is_err());
    }
}
