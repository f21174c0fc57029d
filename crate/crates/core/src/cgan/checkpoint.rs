use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GanConfig;
use crate::nn::{Activation, DenseLayer, MlpNetwork};
use crate::stats::{Condition, Ground};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"ULSG";
pub const CHECKPOINT_VERSION: u32 = 1;
const PREFIX_LEN: usize = 4 + 4 + 8;

/// Bounding box of the conditions a model was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionHull {
    pub height_min_m: f64,
    pub height_max_m: f64,
    pub beta_min_deg: f64,
    pub beta_max_deg: f64,
    pub grounds: Vec<Ground>,
}

impl ConditionHull {
    pub fn of<'a>(conditions: impl IntoIterator<Item = &'a Condition>) -> Self {
        let mut hull = ConditionHull {
            height_min_m: f64::INFINITY,
            height_max_m: f64::NEG_INFINITY,
            beta_min_deg: f64::INFINITY,
            beta_max_deg: f64::NEG_INFINITY,
            grounds: Vec::new(),
        };
        for c in conditions {
            hull.height_min_m = hull.height_min_m.min(c.height_m);
            hull.height_max_m = hull.height_max_m.max(c.height_m);
            hull.beta_min_deg = hull.beta_min_deg.min(c.beta_deg);
            hull.beta_max_deg = hull.beta_max_deg.max(c.beta_deg);
            if !hull.grounds.contains(&c.ground) {
                hull.grounds.push(c.ground);
            }
        }
        hull.grounds.sort();
        hull
    }

    pub fn contains(&self, c: &Condition) -> bool {
        (self.height_min_m..=self.height_max_m).contains(&c.height_m)
            && (self.beta_min_deg..=self.beta_max_deg).contains(&c.beta_deg)
            && self.grounds.contains(&c.ground)
    }

    /// Errors unless `c` lies inside the hull.
    pub fn ensure_contains(&self, c: &Condition) -> Result<()> {
        if self.contains(c) {
            return Ok(());
        }
        Err(Error::param(format!(
            "condition {c} is outside the training hull: height [{}, {}] m, beta [{}, {}] deg, \
             grounds {:?}",
            self.height_min_m, self.height_max_m, self.beta_min_deg, self.beta_max_deg, self.grounds
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub epochs_completed: usize,
    pub discriminator_updates: usize,
    pub final_d_loss: Option<f64>,
    pub final_g_loss: Option<f64>,
    pub seed: u64,
    pub training_hull: ConditionHull,
}

/// Trained networks plus everything needed to turn generator output back
/// into envelopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: GanConfig,
    pub generator: MlpNetwork,
    pub discriminator: MlpNetwork,
    /// Global maximum of the training envelopes.
    pub amplitude_scale: f64,
    pub metadata: TrainingMetadata,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkShape {
    dims: Vec<usize>,
    activations: Vec<Activation>,
}

impl NetworkShape {
    fn of(net: &MlpNetwork) -> Self {
        Self {
            dims: net.dims(),
            activations: net.activations(),
        }
    }

    fn parameter_count(&self) -> Result<usize> {
        if self.dims.len() < 2 || self.activations.len() != self.dims.len() - 1 {
            return Err(Error::corrupt(
                "checkpoint header",
                "layer dims and activations are inconsistent",
            ));
        }
        self.dims
            .windows(2)
            .try_fold(0usize, |acc, w| {
                w[0].checked_mul(w[1])
                    .and_then(|p| p.checked_add(w[1]))
                    .and_then(|p| p.checked_add(acc))
            })
            .ok_or_else(|| Error::corrupt("checkpoint header", "layer dims overflow"))
    }

    fn build(&self, blob: &mut impl Iterator<Item = f64>) -> Result<MlpNetwork> {
        let layers = self
            .dims
            .windows(2)
            .zip(&self.activations)
            .map(|(w, &act)| {
                let weights: Vec<f64> = blob.by_ref().take(w[0] * w[1]).collect();
                let biases: Vec<f64> = blob.by_ref().take(w[1]).collect();
                DenseLayer::new(w[0], weights, biases, act)
                    .map_err(|e| Error::corrupt("checkpoint weights", e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        MlpNetwork::from_layers(layers).map_err(|e| Error::corrupt("checkpoint header", e.to_string()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: GanConfig,
    generator: NetworkShape,
    discriminator: NetworkShape,
    amplitude_scale: f64,
    metadata: TrainingMetadata,
    /// CRC-32 of the weight blob.
    blob_crc32: u32,
}

impl Checkpoint {
    /// Checks the internal consistency `sample` relies on.
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude_scale > 0.0) || !self.amplitude_scale.is_finite() {
            return Err(Error::Integrity(format!(
                "amplitude normalisation constant {} is not positive",
                self.amplitude_scale
            )));
        }
        if self.generator.dims() != self.config.generator_dims() {
            return Err(Error::Integrity(format!(
                "generator dims {:?} disagree with the configuration {:?}",
                self.generator.dims(),
                self.config.generator_dims()
            )));
        }
        if self.discriminator.dims() != self.config.discriminator_dims() {
            return Err(Error::Integrity(format!(
                "discriminator dims {:?} disagree with the configuration {:?}",
                self.discriminator.dims(),
                self.config.discriminator_dims()
            )));
        }
        Ok(())
    }

    /// Serialises to the on-disk layout: `ULSG`, u32 LE version, u64 LE
    /// header length, JSON header, then every weight as f32 LE (generator
    /// then discriminator; per layer the row-major weights, then biases).
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut blob = Vec::with_capacity(
            4 * (self.generator.parameter_count() + self.discriminator.parameter_count()),
        );
        for net in [&self.generator, &self.discriminator] {
            for layer in net.layers() {
                for &v in layer.weights().iter().chain(layer.biases()) {
                    blob.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
        }
        let header = Header {
            config: self.config.clone(),
            generator: NetworkShape::of(&self.generator),
            discriminator: NetworkShape::of(&self.discriminator),
            amplitude_scale: self.amplitude_scale,
            metadata: self.metadata.clone(),
            blob_crc32: crc32fast::hash(&blob),
        };
        let json = serde_json::to_vec(&header)
            .map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
        let mut out = Vec::with_capacity(PREFIX_LEN + json.len() + blob.len());
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&blob);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || bytes[..4] != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic bytes)".into()));
        }
        if bytes.len() < PREFIX_LEN {
            return Err(Error::corrupt("checkpoint", "truncated before the header"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "checkpoint version {version} is not supported (expected {CHECKPOINT_VERSION})"
            )));
        }
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        let header_end = usize::try_from(header_len)
            .ok()
            .and_then(|l| l.checked_add(PREFIX_LEN))
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| Error::corrupt("checkpoint", "truncated inside the header"))?;
        let header: Header = serde_json::from_slice(&bytes[PREFIX_LEN..header_end])
            .map_err(|e| Error::corrupt("checkpoint header", e.to_string()))?;

        let expected =
            header.generator.parameter_count()? + header.discriminator.parameter_count()?;
        let blob = &bytes[header_end..];
        if blob.len() != expected * 4 {
            return Err(Error::corrupt(
                "checkpoint weights",
                format!(
                    "header declares {expected} parameters, blob holds {} bytes",
                    blob.len()
                ),
            ));
        }
        if crc32fast::hash(blob) != header.blob_crc32 {
            return Err(Error::Integrity("weight blob checksum mismatch".into()));
        }
        let mut values = blob
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))));
        let generator = header.generator.build(&mut values)?;
        let discriminator = header.discriminator.build(&mut values)?;
        let ckpt = Checkpoint {
            config: header.config,
            generator,
            discriminator,
            amplitude_scale: header.amplitude_scale,
            metadata: header.metadata,
        };
        ckpt.validate()?;
        Ok(ckpt)
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let bytes = ckpt.to_bytes()?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}
