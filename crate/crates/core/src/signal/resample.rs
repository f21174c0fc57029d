use std::f64::consts::PI;
use std::ops::{AddAssign, Mul};

use super::{reflect_index, ComplexSignal};
use crate::{Error, Result};

const MAX_DENOMINATOR: usize = 1000;
/// Filter half-length, in periods of the lower of the two rates.
const HALF_LENGTH_PERIODS: usize = 8;
/// Anti-alias cutoff as a fraction of the lower Nyquist frequency.
const CUTOFF_FRACTION: f64 = 0.8;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Smallest `(up, down)` with `up / down == target / source` and
/// `down <= 1000`.
pub fn rational_ratio(source_hz: f64, target_hz: f64) -> Result<(usize, usize)> {
    if !(source_hz > 0.0 && target_hz > 0.0) || !source_hz.is_finite() || !target_hz.is_finite()
    {
        return Err(Error::param(format!(
            "invalid rates {source_hz} Hz -> {target_hz} Hz"
        )));
    }
    let ratio = target_hz / source_hz;
    for down in 1..=MAX_DENOMINATOR {
        let up = (ratio * down as f64).round();
        if up >= 1.0 && ((up / down as f64) - ratio).abs() <= 1e-12 * ratio {
            let up = up as usize;
            let g = gcd(up, down);
            return Ok((up / g, down / g));
        }
    }
    Err(Error::param(format!(
        "rate ratio {target_hz}/{source_hz} has no rational form with denominator <= {MAX_DENOMINATOR}"
    )))
}

fn design_polyphase(up: usize, down: usize) -> Vec<f64> {
    let half = HALF_LENGTH_PERIODS * up.max(down);
    let taps = 2 * half + 1;
    // cutoff in cycles per upsampled sample
    let fc = CUTOFF_FRACTION * 0.5 / up.max(down) as f64;
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let x = i as f64 - half as f64;
            let sinc = if i == half {
                2.0 * fc
            } else {
                (2.0 * PI * fc * x).sin() / (PI * x)
            };
            let w = 0.54 - 0.46 * (2.0 * PI * i as f64 / (taps - 1) as f64).cos();
            sinc * w
        })
        .collect();
    // Every polyphase branch gets unit DC gain so constants pass unchanged.
    for phase in 0..up {
        let sum: f64 = h.iter().skip(phase).step_by(up).sum();
        for c in h.iter_mut().skip(phase).step_by(up) {
            *c /= sum;
        }
    }
    h
}

/// Rational-ratio polyphase resampling of a sample sequence. Edges are
/// extended by symmetric reflection.
pub fn resample_slice<T>(x: &[T], up: usize, down: usize) -> Vec<T>
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T>,
{
    if up == down {
        return x.to_vec();
    }
    let h = design_polyphase(up, down);
    let n_taps = h.len() as isize;
    let centre = (n_taps - 1) / 2;
    let out_len = (x.len() * up).div_ceil(down);
    let (up_i, down_i) = (up as isize, down as isize);
    (0..out_len as isize)
        .map(|m| {
            // y[m] = sum_i x[i] h[centre + m*down - i*up]
            let pos = centre + m * down_i;
            let i_lo = (pos - (n_taps - 1)).div_euclid(up_i);
            let i_hi = pos.div_euclid(up_i);
            let mut acc = T::default();
            for i in i_lo..=i_hi {
                let k = pos - i * up_i;
                if (0..n_taps).contains(&k) {
                    acc += x[reflect_index(i, x.len())] * h[k as usize];
                }
            }
            acc
        })
        .collect()
}

/// Resamples to `target_rate_hz`. The input must already be band-limited
/// below the new Nyquist frequency.
pub fn resample(signal: &ComplexSignal, target_rate_hz: f64) -> Result<ComplexSignal> {
    if signal.is_empty() {
        return Err(Error::param("cannot resample an empty signal"));
    }
    let (up, down) = rational_ratio(signal.sample_rate_hz, target_rate_hz)?;
    Ok(ComplexSignal::new(
        resample_slice(&signal.samples, up, down),
        target_rate_hz,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn ratio_for_the_pipeline_rates() {
        assert_eq!(rational_ratio(330_000.0, 20_000.0).unwrap(), (2, 33));
        assert_eq!(rational_ratio(20_000.0, 20_000.0).unwrap(), (1, 1));
        assert_eq!(rational_ratio(44_100.0, 48_000.0).unwrap(), (160, 147));
    }

    #[test]
    fn irrational_ratio_is_rejected() {
        assert!(rational_ratio(1.0, std::f64::consts::PI).is_err());
        assert!(rational_ratio(0.0, 1.0).is_err());
    }

    #[test]
    fn raw_record_length_maps_to_600() {
        let x = ComplexSignal::new(vec![Complex64::new(0.0, 0.0); 9_900], 330_000.0);
        let y = resample(&x, 20_000.0).unwrap();
        assert_eq!(y.len(), 600);
        assert_eq!(y.sample_rate_hz, 20_000.0);
    }

    #[test]
    fn constant_stays_constant() {
        let c = Complex64::new(0.7, -0.3);
        let x = ComplexSignal::new(vec![c; 9_900], 330_000.0);
        let y = resample(&x, 20_000.0).unwrap();
        for v in &y.samples {
            assert!((v - c).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_ratio_returns_identical_samples() {
        let x = ComplexSignal::new(
            (0..50).map(|i| Complex64::new(i as f64, -(i as f64))).collect(),
            20_000.0,
        );
        assert_eq!(resample(&x, 20_000.0).unwrap(), x);
    }

    #[test]
    fn baseband_tone_keeps_its_magnitude() {
        let fs = 330_000.0;
        let x = ComplexSignal::new(
            (0..9_900)
                .map(|i| Complex64::from_polar(1.0, 2.0 * PI * 1_000.0 * i as f64 / fs))
                .collect(),
            fs,
        );
        let y = resample(&x, 20_000.0).unwrap();
        for (m, v) in y.samples.iter().enumerate().skip(20).take(560) {
            assert!((v.norm() - 1.0).abs() < 0.01);
            let expect = Complex64::from_polar(1.0, 2.0 * PI * 1_000.0 * m as f64 / 20_000.0);
            assert!((v - expect).norm() < 0.01, "sample {m}");
        }
    }

    #[test]
    fn empty_signal_is_rejected() {
        assert!(resample(&ComplexSignal::new(vec![], 330_000.0), 20_000.0).is_err());
    }
}
