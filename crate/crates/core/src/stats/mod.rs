//! Distance-binned amplitude statistics: per-bin Gamma fits, chi-square
//! goodness of fit, and (height, angle, ground) trend tables.

mod bins;
mod condition;
mod gamma;
mod gof;
mod trend;

use serde::{Deserialize, Serialize};

pub use bins::{
    bin_sample_range, collect_bin_amplitudes, BinAmplitudes, DistanceBin, BIN_WIDTH_M,
    DEFAULT_SPEED_OF_SOUND_MPS,
};
pub use condition::{
    Condition, ConditionKey, Ground, BETA_MAX_DEG, BETA_MIN_DEG, HEIGHT_MAX_M, HEIGHT_MIN_M,
};
pub use gamma::{fit_gamma, FitMethod, GammaFit, GammaParams, MIN_FIT_SAMPLES};
pub use gof::{chi_square_gof, chi_square_gof_at, GofResult, DEFAULT_CELLS, DEFAULT_SIGNIFICANCE};
pub(crate) use trend::fit_cell;
pub use trend::{
    build_trend_table, dominant_bin, interpolate_params, write_trend_csv, GroundGrid, TrendEntry,
    TrendTable,
};

use crate::signal::ProcessedSignal;

/// An envelope together with the setup it was measured (or generated) in.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSignal {
    pub condition: Condition,
    pub signal: ProcessedSignal,
}

/// Settings shared by every binned-statistics computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub speed_of_sound_mps: f64,
    /// Bin indices to analyse.
    pub bins: Vec<usize>,
    pub chi2_cells: usize,
    pub significance: f64,
    /// Fewest positive in-bin amplitudes a (condition, bin) cell needs.
    pub min_samples: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            speed_of_sound_mps: DEFAULT_SPEED_OF_SOUND_MPS,
            bins: (1..=8).collect(),
            chi2_cells: DEFAULT_CELLS,
            significance: DEFAULT_SIGNIFICANCE,
            min_samples: MIN_FIT_SAMPLES,
        }
    }
}

impl AnalysisConfig {
    pub fn distance_bins(&self) -> Vec<DistanceBin> {
        self.bins.iter().copied().map(DistanceBin::new).collect()
    }
}

/// Chi-square test with as many of the configured cells as the sample count
/// supports (at least five expected per cell).
pub(crate) fn adaptive_gof(
    amplitudes: &[f64],
    params: GammaParams,
    cfg: &AnalysisConfig,
) -> crate::Result<GofResult> {
    let cells = cfg.chi2_cells.min(amplitudes.len() / 5).max(5);
    chi_square_gof_at(amplitudes, params, cells, cfg.significance)
}
