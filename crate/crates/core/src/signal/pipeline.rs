use serde::{Deserialize, Serialize};

use super::{
    design_fir, envelope_abs, mix_to_baseband, resample_slice, rational_ratio, Convolve,
    FilterKind, FirFilter, ProcessedSignal, RawSignal, CARRIER_HZ, PROCESSED_LEN,
    PROCESSED_SAMPLE_RATE_HZ,
};
use crate::{Error, Result};

/// Mixing halves the in-band amplitude; the chain multiplies the baseband
/// signal by this factor so a unit carrier burst has a unit envelope.
pub const BASEBAND_GAIN: f64 = 2.0;

/// Parameters of the raw-to-envelope chain.
///
/// The defaults reproduce the 9,900 @ 330 kHz -> 583 @ 20 kHz setup. After
/// resampling there are 600 samples; the first `transient_trim_samples`
/// (17, about 0.85 ms) are dropped, so output sample `n` corresponds to raw
/// time `(n + 17) / 20 kHz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub carrier_hz: f64,
    pub bandpass_half_width_hz: f64,
    pub bandpass_taps: usize,
    pub lowpass_cutoff_hz: f64,
    pub lowpass_taps: usize,
    pub output_rate_hz: f64,
    pub output_len: usize,
    pub transient_trim_samples: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            carrier_hz: CARRIER_HZ,
            bandpass_half_width_hz: 5_000.0,
            bandpass_taps: 255,
            lowpass_cutoff_hz: 5_000.0,
            lowpass_taps: 127,
            output_rate_hz: PROCESSED_SAMPLE_RATE_HZ,
            output_len: PROCESSED_LEN,
            transient_trim_samples: 17,
        }
    }
}

impl PipelineConfig {
    /// Raw-time offset of output sample 0.
    pub fn head_trim_seconds(&self) -> f64 {
        self.transient_trim_samples as f64 / self.output_rate_hz
    }

    /// Checks the config against a raw input shape.
    pub fn validate(&self, raw_len: usize, raw_rate_hz: f64) -> Result<()> {
        if !(raw_rate_hz > 0.0) {
            return Err(Error::param(format!("invalid raw sample rate {raw_rate_hz}")));
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz < raw_rate_hz / 2.0) {
            return Err(Error::param(format!(
                "carrier {} Hz must lie below the raw Nyquist frequency",
                self.carrier_hz
            )));
        }
        if self.output_len == 0 {
            return Err(Error::param("output_len must be positive"));
        }
        let needed = (self.output_len + self.transient_trim_samples) as f64
            * (raw_rate_hz / self.output_rate_hz);
        if needed > raw_len as f64 + 1e-9 {
            return Err(Error::param(format!(
                "{} output samples plus {} trimmed need {needed:.0} raw samples, input has {raw_len}",
                self.output_len, self.transient_trim_samples
            )));
        }
        Ok(())
    }
}

/// A configured chain with its filters designed once, for bulk processing.
#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: PipelineConfig,
    raw_rate_hz: f64,
    bandpass: FirFilter,
    lowpass: FirFilter,
    ratio: (usize, usize),
}

impl Pipeline {
    pub fn new(cfg: &PipelineConfig, raw_rate_hz: f64) -> Result<Self> {
        if !(raw_rate_hz > 0.0) {
            return Err(Error::param(format!("invalid raw sample rate {raw_rate_hz}")));
        }
        let bandpass = design_fir(
            FilterKind::Bandpass,
            cfg.carrier_hz,
            Some(cfg.bandpass_half_width_hz),
            cfg.bandpass_taps,
            raw_rate_hz,
        )?;
        let lowpass = design_fir(
            FilterKind::Lowpass,
            cfg.lowpass_cutoff_hz,
            None,
            cfg.lowpass_taps,
            raw_rate_hz,
        )?;
        let ratio = rational_ratio(raw_rate_hz, cfg.output_rate_hz)?;
        Ok(Self {
            cfg: cfg.clone(),
            raw_rate_hz,
            bandpass,
            lowpass,
            ratio,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn process(&self, raw: &RawSignal) -> Result<ProcessedSignal> {
        if raw.is_empty() {
            return Err(Error::param("empty raw signal"));
        }
        if raw.sample_rate_hz != self.raw_rate_hz {
            return Err(Error::param(format!(
                "raw rate {} Hz does not match the pipeline's {} Hz",
                raw.sample_rate_hz, self.raw_rate_hz
            )));
        }
        let filtered = raw.convolve(&self.bandpass)?;
        let mut baseband = mix_to_baseband(&filtered, self.cfg.carrier_hz)?;
        for s in &mut baseband.samples {
            *s *= BASEBAND_GAIN;
        }
        let baseband = baseband.convolve(&self.lowpass)?;
        let mut resampled = resample_slice(&baseband.samples, self.ratio.0, self.ratio.1);

        let trim = self.cfg.transient_trim_samples;
        let available = resampled.len().saturating_sub(trim);
        if available < self.cfg.output_len {
            return Err(Error::Pipeline(format!(
                "only {available} samples remain after trimming {trim}, need {}",
                self.cfg.output_len
            )));
        }
        resampled.drain(..trim);
        resampled.truncate(self.cfg.output_len);
        let out = super::ComplexSignal::new(resampled, self.cfg.output_rate_hz);
        Ok(envelope_abs(&out))
    }
}

/// Bandpass -> mix (x2 gain) -> lowpass -> resample -> head trim ->
/// truncate -> modulus.
pub fn process_raw(raw: &RawSignal, cfg: &PipelineConfig) -> Result<ProcessedSignal> {
    Pipeline::new(cfg, raw.sample_rate_hz)?.process(raw)
}
