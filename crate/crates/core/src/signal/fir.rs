use std::f64::consts::PI;
use std::ops::{AddAssign, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ComplexSignal, RawSignal};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Bandpass,
    Lowpass,
}

/// Linear-phase FIR filter: odd tap count, coefficients symmetric about the
/// centre tap.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    coefficients: Vec<f64>,
    kind: FilterKind,
}

impl FirFilter {
    /// Wraps externally designed taps. They must already be odd in number and
    /// exactly symmetric.
    pub fn from_coefficients(coefficients: Vec<f64>, kind: FilterKind) -> Result<Self> {
        let n = coefficients.len();
        if n < 3 || n % 2 == 0 {
            return Err(Error::param(format!("tap count must be odd and >= 3, got {n}")));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("non-finite filter coefficient"));
        }
        if (0..n / 2).any(|i| coefficients[i] != coefficients[n - 1 - i]) {
            return Err(Error::param("coefficients are not symmetric"));
        }
        Ok(Self { coefficients, kind })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Group delay in samples; `convolve` already compensates it.
    pub fn group_delay(&self) -> usize {
        (self.coefficients.len() - 1) / 2
    }

    /// Magnitude of the frequency response at `freq_hz`.
    pub fn gain_at(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / sample_rate_hz;
        let m = self.group_delay() as f64;
        let h: Complex64 = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(n, &c)| Complex64::from_polar(c, -w * (n as f64 - m)))
            .sum();
        h.norm()
    }
}

fn hamming(n: usize, len: usize) -> f64 {
    0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos()
}

/// Designs a Hamming-windowed sinc filter.
///
/// `center_or_cutoff_hz` is the cutoff for a lowpass and the centre for a
/// bandpass; `half_width_hz` is required for (and only used by) the
/// bandpass, whose passband is `center ± half_width`. Lowpass taps are
/// normalised to unit DC gain, bandpass taps to unit gain at the centre.
pub fn design_fir(
    kind: FilterKind,
    center_or_cutoff_hz: f64,
    half_width_hz: Option<f64>,
    taps: usize,
    sample_rate_hz: f64,
) -> Result<FirFilter> {
    if taps < 3 || taps % 2 == 0 {
        return Err(Error::param(format!("tap count must be odd and >= 3, got {taps}")));
    }
    if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
        return Err(Error::param(format!("invalid sample rate {sample_rate_hz}")));
    }
    let nyquist = sample_rate_hz / 2.0;
    let (cutoff, shift) = match kind {
        FilterKind::Lowpass => {
            if !(center_or_cutoff_hz > 0.0 && center_or_cutoff_hz < nyquist) {
                return Err(Error::param(format!(
                    "lowpass cutoff {center_or_cutoff_hz} Hz outside (0, {nyquist}) Hz"
                )));
            }
            (center_or_cutoff_hz, 0.0)
        }
        FilterKind::Bandpass => {
            let hw = half_width_hz
                .ok_or_else(|| Error::param("bandpass design needs a half width"))?;
            let lo = center_or_cutoff_hz - hw;
            let hi = center_or_cutoff_hz + hw;
            if !(hw > 0.0 && lo > 0.0 && hi < nyquist) {
                return Err(Error::param(format!(
                    "bandpass edges [{lo}, {hi}] Hz not strictly inside (0, {nyquist}) Hz"
                )));
            }
            (hw, center_or_cutoff_hz)
        }
    };

    let m = (taps - 1) / 2;
    let fc = cutoff / sample_rate_hz;
    let f0 = shift / sample_rate_hz;
    let mut h = vec![0.0; taps];
    for i in 0..=m {
        let x = i as f64 - m as f64;
        let sinc = if i == m {
            2.0 * fc
        } else {
            (2.0 * PI * fc * x).sin() / (PI * x)
        };
        let carrier = match kind {
            FilterKind::Lowpass => 1.0,
            FilterKind::Bandpass => 2.0 * (2.0 * PI * f0 * x).cos(),
        };
        let v = sinc * carrier * hamming(i, taps);
        h[i] = v;
        h[taps - 1 - i] = v;
    }

    let gain = match kind {
        FilterKind::Lowpass => h.iter().sum::<f64>(),
        FilterKind::Bandpass => h
            .iter()
            .enumerate()
            .map(|(n, c)| c * (2.0 * PI * f0 * (n as f64 - m as f64)).cos())
            .sum(),
    };
    if !(gain.abs() > 0.0) {
        return Err(Error::param("designed filter has zero reference gain"));
    }
    for c in &mut h {
        *c /= gain;
    }
    Ok(FirFilter {
        coefficients: h,
        kind,
    })
}

/// Same-length convolution with zero padding, centred so the filter's group
/// delay is removed.
pub fn convolve_slice<T>(x: &[T], taps: &[f64]) -> Vec<T>
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T>,
{
    let len = x.len() as isize;
    let n_taps = taps.len();
    let m = (n_taps / 2) as isize;
    // y[n] = sum_k h[k] x[n + m - k] = sum_j h[N-1-j] x[n - m + j]
    let rev: Vec<f64> = taps.iter().rev().copied().collect();
    (0..len)
        .map(|n| {
            let start = n - m;
            let j_lo = (-start).max(0) as usize;
            let j_hi = ((len - start).min(n_taps as isize)).max(0) as usize;
            if j_lo >= j_hi {
                return T::default();
            }
            let xs = &x[(start + j_lo as isize) as usize..(start + j_hi as isize) as usize];
            let hs = &rev[j_lo..j_hi];
            // Four independent partial sums keep the adder pipeline busy.
            let mut acc = [T::default(); 4];
            let mut xc = xs.chunks_exact(4);
            let mut hc = hs.chunks_exact(4);
            for (x4, h4) in (&mut xc).zip(&mut hc) {
                for l in 0..4 {
                    acc[l] += x4[l] * h4[l];
                }
            }
            for (&v, &h) in xc.remainder().iter().zip(hc.remainder()) {
                acc[0] += v * h;
            }
            let [mut a, b, c, d] = acc;
            a += b;
            a += c;
            a += d;
            a
        })
        .collect()
}

/// Filtering of real and complex signals.
pub trait Convolve: Sized {
    fn convolve(&self, filter: &FirFilter) -> Result<Self>;
}

impl Convolve for RawSignal {
    fn convolve(&self, filter: &FirFilter) -> Result<Self> {
        if self.is_empty() {
            return Err(Error::param("cannot filter an empty signal"));
        }
        Ok(RawSignal::new(
            convolve_slice(&self.samples, filter.coefficients()),
            self.sample_rate_hz,
        ))
    }
}

impl Convolve for ComplexSignal {
    fn convolve(&self, filter: &FirFilter) -> Result<Self> {
        if self.is_empty() {
            return Err(Error::param("cannot filter an empty signal"));
        }
        Ok(ComplexSignal::new(
            convolve_slice(&self.samples, filter.coefficients()),
            self.sample_rate_hz,
        ))
    }
}
