use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cgan::GanConfig;
use crate::corpus::{CorpusParams, MeasurementGrid};
use crate::signal::PipelineConfig;
use crate::stats::AnalysisConfig;
use crate::validation::{Tolerances, DEFAULT_POST_LOWPASS_HZ};
use crate::{Error, Result};

/// Environment variable naming the config file used when `--config` is
/// absent.
pub const CONFIG_ENV: &str = "ULSGAN_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub params: CorpusParams,
    pub grid: MeasurementGrid,
}

impl Default for CorpusSection {
    fn default() -> Self {
        Self {
            params: CorpusParams::default(),
            grid: MeasurementGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSection {
    pub tolerances: Tolerances,
    pub post_lowpass_hz: f64,
}

impl Default for ValidationSection {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            post_lowpass_hz: DEFAULT_POST_LOWPASS_HZ,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    /// Master seed of corpus synthesis.
    pub corpus: u64,
    /// Noise seed of `generate`.
    pub sampling: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            corpus: 2024,
            sampling: 1,
        }
    }
}

/// Every tunable of the toolkit. All fields default, and the defaults give
/// the 9,900 @ 330 kHz -> 583 @ 20 kHz chain, the 129,360-record grid and
/// 100 training epochs. The training seed is `gan.seed`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub pipeline: PipelineConfig,
    pub corpus: CorpusSection,
    pub gan: GanConfig,
    pub statistics: AnalysisConfig,
    pub validation: ValidationSection,
    pub seeds: Seeds,
}

impl ToolConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::param(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Format(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parameter(msg) => Error::Parameter(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// `--config` if given, else `$ULSGAN_CONFIG` if set, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        let from_env = std::env::var_os(CONFIG_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from);
        match explicit.map(Path::to_path_buf).or(from_env) {
            Some(path) => Self::load(&path),
            None => Ok(Self::default()),
        }
    }
}
