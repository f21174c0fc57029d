use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::signal::ProcessedSignal;
use crate::{Error, Result};

/// Width of one distance bin.
pub const BIN_WIDTH_M: f64 = 0.25;
/// Speed of sound in 20 degC air.
pub const DEFAULT_SPEED_OF_SOUND_MPS: f64 = 343.0;

/// Range interval `[0.25 i, 0.25 (i + 1))` metres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DistanceBin {
    pub index: usize,
}

impl DistanceBin {
    pub const fn new(index: usize) -> Self {
        Self { index }
    }

    pub fn lo_m(&self) -> f64 {
        BIN_WIDTH_M * self.index as f64
    }

    pub fn hi_m(&self) -> f64 {
        BIN_WIDTH_M * (self.index + 1) as f64
    }

    pub fn centre_m(&self) -> f64 {
        BIN_WIDTH_M * (self.index as f64 + 0.5)
    }

    /// Bins 1..=8, 0.25 m to 2.25 m.
    pub fn default_set() -> Vec<DistanceBin> {
        (1..=8).map(DistanceBin::new).collect()
    }
}

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Envelope sample indices `[start, end)` covering `bin`, assuming two-way
/// travel: distance `d` is seen at delay `2 d / c`.
pub fn bin_sample_range(
    bin: DistanceBin,
    sample_rate_hz: f64,
    speed_of_sound_mps: f64,
) -> Result<Range<usize>> {
    if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
        return Err(Error::param(format!("invalid sample rate {sample_rate_hz}")));
    }
    if !(speed_of_sound_mps > 0.0) || !speed_of_sound_mps.is_finite() {
        return Err(Error::param(format!(
            "invalid speed of sound {speed_of_sound_mps}"
        )));
    }
    let to_index = |d: f64| round_half_up(2.0 * d / speed_of_sound_mps * sample_rate_hz);
    let start = to_index(bin.lo_m());
    let end = to_index(bin.hi_m());
    if end <= start {
        return Err(Error::param(format!(
            "bin [{}, {}) m is narrower than one sample at {sample_rate_hz} Hz",
            bin.lo_m(),
            bin.hi_m()
        )));
    }
    Ok(start as usize..end as usize)
}

/// Pooled in-bin amplitudes of a signal population.
#[derive(Debug, Clone, PartialEq)]
pub struct BinAmplitudes {
    /// Strictly positive samples, in signal order.
    pub values: Vec<f64>,
    /// Number of in-bin samples dropped for being `<= 0`.
    pub excluded: usize,
}

/// Concatenates the in-bin samples of every signal. Non-positive samples are
/// dropped (the Gamma density lives on `(0, inf)`) and counted.
pub fn collect_bin_amplitudes<'a, I>(
    signals: I,
    bin: DistanceBin,
    speed_of_sound_mps: f64,
) -> Result<BinAmplitudes>
where
    I: IntoIterator<Item = &'a ProcessedSignal>,
{
    let mut iter = signals.into_iter().peekable();
    let first = iter
        .peek()
        .ok_or_else(|| Error::param("no signals to collect amplitudes from"))?;
    let (rate, len) = (first.sample_rate_hz, first.len());
    let range = bin_sample_range(bin, rate, speed_of_sound_mps)?;
    let range = range.start.min(len)..range.end.min(len);

    let mut out = BinAmplitudes {
        values: Vec::new(),
        excluded: 0,
    };
    for s in iter {
        if s.sample_rate_hz != rate || s.len() != len {
            return Err(Error::param(format!(
                "signals differ in shape: {} samples @ {} Hz vs {len} @ {rate} Hz",
                s.len(),
                s.sample_rate_hz
            )));
        }
        for &v in &s.samples[range.clone()] {
            if v > 0.0 {
                out.values.push(v);
            } else {
                out.excluded += 1;
            }
        }
    }
    Ok(out)
}
