use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::signal::{Pipeline, PipelineConfig, ProcessedSignal, RawSignal};
use crate::stats::{Condition, LabeledSignal};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECORDS_DIR: &str = "records";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Raw,
    Processed,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Raw => "raw",
            DatasetKind::Processed => "processed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    /// Path relative to the dataset directory.
    pub file: String,
    #[serde(flatten)]
    pub condition: Condition,
    pub rotation: u32,
    pub repetition: u32,
    pub seed: u64,
    /// CRC-32 of the record's little-endian float32 bytes.
    pub crc32: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub kind: DatasetKind,
    pub sample_rate_hz: f64,
    pub record_length: usize,
    pub records: Vec<RecordEntry>,
}

/// A labelled set of equally shaped records, stored as float32.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub records: Vec<Vec<f32>>,
}

/// Label of a record before it has data (and hence a checksum).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordLabel {
    pub condition: Condition,
    pub rotation: u32,
    pub repetition: u32,
    pub seed: u64,
}

pub(crate) fn record_file_name(index: usize) -> String {
    format!("{RECORDS_DIR}/rec_{index:06}.f32")
}

pub(crate) fn f32_bytes(samples: &[f32]) -> Vec<u8> {
    samples.iter().flat_map(|v| v.to_le_bytes()).collect()
}

impl Dataset {
    /// Builds a dataset, converting samples to float32.
    pub fn from_records<I>(kind: DatasetKind, sample_rate_hz: f64, records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (RecordLabel, Vec<f64>)>,
    {
        let mut entries = Vec::new();
        let mut data = Vec::new();
        let mut record_length = None;
        for (i, (label, samples)) in records.into_iter().enumerate() {
            let len = *record_length.get_or_insert(samples.len());
            if samples.len() != len {
                return Err(Error::param(format!(
                    "record {i} has {} samples, expected {len}",
                    samples.len()
                )));
            }
            let samples: Vec<f32> = samples.iter().map(|&v| v as f32).collect();
            entries.push(RecordEntry {
                file: record_file_name(i),
                condition: label.condition,
                rotation: label.rotation,
                repetition: label.repetition,
                seed: label.seed,
                crc32: crc32fast::hash(&f32_bytes(&samples)),
            });
            data.push(samples);
        }
        Ok(Self {
            manifest: DatasetManifest {
                format_version: FORMAT_VERSION,
                kind,
                sample_rate_hz,
                record_length: record_length.unwrap_or(0),
                records: entries,
            },
            records: data,
        })
    }

    pub fn kind(&self) -> DatasetKind {
        self.manifest.kind
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn expect_kind(&self, kind: DatasetKind) -> Result<()> {
        if self.kind() != kind {
            return Err(Error::KindMismatch {
                expected: kind.as_str().into(),
                found: self.kind().as_str().into(),
            });
        }
        Ok(())
    }

    fn label(&self, i: usize) -> RecordLabel {
        let e = &self.manifest.records[i];
        RecordLabel {
            condition: e.condition,
            rotation: e.rotation,
            repetition: e.repetition,
            seed: e.seed,
        }
    }

    pub fn raw_signal(&self, i: usize) -> RawSignal {
        RawSignal::new(
            self.records[i].iter().map(|&v| f64::from(v)).collect(),
            self.manifest.sample_rate_hz,
        )
    }

    /// Processed records with their conditions.
    pub fn labeled(&self) -> Result<Vec<LabeledSignal>> {
        self.expect_kind(DatasetKind::Processed)?;
        Ok(self
            .records
            .iter()
            .zip(&self.manifest.records)
            .map(|(r, e)| LabeledSignal {
                condition: e.condition,
                signal: ProcessedSignal::new(
                    r.iter().map(|&v| f64::from(v)).collect(),
                    self.manifest.sample_rate_hz,
                ),
            })
            .collect())
    }

    /// Runs the envelope chain over every raw record.
    pub fn process(&self, cfg: &PipelineConfig) -> Result<Dataset> {
        self.expect_kind(DatasetKind::Raw)?;
        if self.is_empty() {
            return Err(Error::Structural("raw dataset has no records".into()));
        }
        cfg.validate(self.manifest.record_length, self.manifest.sample_rate_hz)?;
        let pipeline = Pipeline::new(cfg, self.manifest.sample_rate_hz)?;
        use rayon::prelude::*;
        let processed: Vec<Vec<f64>> = (0..self.len())
            .into_par_iter()
            .map(|i| pipeline.process(&self.raw_signal(i)).map(|p| p.samples))
            .collect::<Result<_>>()?;
        Dataset::from_records(
            DatasetKind::Processed,
            cfg.output_rate_hz,
            processed
                .into_iter()
                .enumerate()
                .map(|(i, s)| (self.label(i), s)),
        )
    }
}

/// Writes `records/*.f32` and then `manifest.json` into `dir`; returns the
/// manifest path.
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<PathBuf> {
    let m = &dataset.manifest;
    if m.records.len() != dataset.records.len() {
        return Err(Error::Structural(format!(
            "manifest lists {} records, dataset holds {}",
            m.records.len(),
            dataset.records.len()
        )));
    }
    if let Some((i, _)) = dataset
        .records
        .iter()
        .enumerate()
        .find(|(_, r)| r.len() != m.record_length)
    {
        return Err(Error::Structural(format!(
            "record {i} length differs from record_length {}",
            m.record_length
        )));
    }
    let records_dir = dir.join(RECORDS_DIR);
    fs::create_dir_all(&records_dir).map_err(|e| Error::io(&records_dir, e))?;
    for (entry, samples) in m.records.iter().zip(&dataset.records) {
        write_record(dir, entry, samples)?;
    }
    write_manifest(dir, m)
}

pub(crate) fn write_record(dir: &Path, entry: &RecordEntry, samples: &[f32]) -> Result<()> {
    let path = dir.join(&entry.file);
    fs::write(&path, f32_bytes(samples)).map_err(|e| Error::io(&path, e))
}

pub(crate) fn write_manifest(dir: &Path, manifest: &DatasetManifest) -> Result<PathBuf> {
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Format(format!("manifest serialisation: {e}")))?;
    text.push('\n');
    let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads and verifies a dataset directory.
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::corrupt(path.display().to_string(), e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::corrupt(path.display().to_string(), "missing format_version"))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(Error::Version {
            found: version.min(u64::from(u32::MAX)) as u32,
            supported: FORMAT_VERSION,
        });
    }
    let manifest: DatasetManifest = serde_json::from_value(value)
        .map_err(|e| Error::corrupt(path.display().to_string(), e.to_string()))?;

    let expected_bytes = manifest.record_length * 4;
    let mut records = Vec::with_capacity(manifest.records.len());
    for entry in &manifest.records {
        let file = dir.join(&entry.file);
        let bytes = fs::read(&file).map_err(|e| Error::io(&file, e))?;
        if bytes.len() != expected_bytes {
            return Err(Error::corrupt(
                entry.file.clone(),
                format!("{} bytes, expected {expected_bytes}", bytes.len()),
            ));
        }
        if crc32fast::hash(&bytes) != entry.crc32 {
            return Err(Error::corrupt(entry.file.clone(), "checksum mismatch"));
        }
        records.push(
            bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        );
    }
    Ok(Dataset { manifest, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Ground;

    fn tiny() -> Dataset {
        let label = |i: u32| RecordLabel {
            condition: Condition::new(0.36 + 0.01 * f64::from(i), -1.0, Ground::Asphalt),
            rotation: i,
            repetition: 0,
            seed: 1000 + u64::from(i),
        };
        Dataset::from_records(
            DatasetKind::Processed,
            20_000.0,
            (0..3).map(|i| (label(i), (0..16).map(|j| (i * 16 + j) as f64 * 0.1).collect())),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let d = tiny();
        write_dataset(&d, dir.path()).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn truncated_record_is_corruption_naming_it() {
        let dir = tempfile::tempdir().unwrap();
        let d = tiny();
        write_dataset(&d, dir.path()).unwrap();
        let victim = dir.path().join(&d.manifest.records[1].file);
        let bytes = fs::read(&victim).unwrap();
        fs::write(&victim, &bytes[..bytes.len() - 4]).unwrap();
        match read_dataset(dir.path()) {
            Err(Error::Corruption { location, .. }) => {
                assert_eq!(location, d.manifest.records[1].file)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn flipped_byte_fails_the_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let d = tiny();
        write_dataset(&d, dir.path()).unwrap();
        let victim = dir.path().join(&d.manifest.records[2].file);
        let mut bytes = fs::read(&victim).unwrap();
        bytes[7] ^= 0x40;
        fs::write(&victim, bytes).unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::Corruption { .. })));
    }

    #[test]
    fn unknown_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut d = tiny();
        d.manifest.format_version = 999;
        write_dataset(&d, dir.path()).unwrap();
        assert!(matches!(
            read_dataset(dir.path()),
            Err(Error::Version { found: 999, .. })
        ));
    }

    #[test]
    fn kind_is_checked() {
        let d = tiny();
        assert!(matches!(
            d.process(&PipelineConfig::default()),
            Err(Error::KindMismatch { .. })
        ));
        assert!(d.labeled().is_ok());
    }

    #[test]
    fn manifest_json_has_the_documented_fields() {
        let text = serde_json::to_string(&tiny().manifest).unwrap();
        for key in [
            "\"format_version\":1",
            "\"kind\":\"processed\"",
            "\"record_length\":16",
            "\"file\":\"records/rec_000000.f32\"",
            "\"height_m\":0.36",
            "\"ground\":\"asphalt\"",
            "\"rotation\":0",
            "\"repetition\":0",
            "\"seed\":1000",
            "\"crc32\":",
        ] {
            assert!(text.contains(key), "{key} missing from {text}");
        }
    }
}
