//! Raw-to-envelope processing chain.
//!
//! A raw capture is bandpass filtered around the carrier, mixed down to
//! complex baseband, lowpass filtered, resampled to 20 kHz, trimmed and
//! reduced to the modulus of the complex envelope.

mod fir;
mod mix;
mod pipeline;
mod resample;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use fir::{convolve_slice, design_fir, Convolve, FilterKind, FirFilter};
pub use mix::{envelope_abs, mix_to_baseband};
pub use pipeline::{process_raw, Pipeline, PipelineConfig, BASEBAND_GAIN};
pub use resample::{rational_ratio, resample, resample_slice};

/// Sample rate of corpus-conformant raw captures.
pub const RAW_SAMPLE_RATE_HZ: f64 = 330_000.0;
/// Length of a corpus-conformant raw capture.
pub const RAW_LEN: usize = 9_900;
/// Carrier (centre) frequency of the transmit pulse.
pub const CARRIER_HZ: f64 = 51_200.0;
/// Sample rate of processed envelopes.
pub const PROCESSED_SAMPLE_RATE_HZ: f64 = 20_000.0;
/// Length of a pipeline-conformant envelope.
pub const PROCESSED_LEN: usize = 583;

/// One monostatic capture: real ADC samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSignal {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
}

impl RawSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// 9,900 samples at 330 kHz.
    pub fn is_conformant(&self) -> bool {
        self.samples.len() == RAW_LEN && self.sample_rate_hz == RAW_SAMPLE_RATE_HZ
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Envelope magnitude, non-negative by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedSignal {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
}

impl ProcessedSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Index into a signal of length `len` extended by half-sample symmetric
/// reflection (`x[-1] = x[0]`, `x[len] = x[len-1]`), periodic in `2 len`.
pub(crate) fn reflect_index(i: isize, len: usize) -> usize {
    debug_assert!(len > 0);
    let period = 2 * len as isize;
    let m = i.rem_euclid(period);
    if m < len as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_is_half_sample_symmetric() {
        let idx: Vec<usize> = (-4..8).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(idx, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(reflect_index(-1, 1), 0);
        assert_eq!(reflect_index(5, 1), 0);
    }
}
