use std::f64::consts::PI;

use num_complex::Complex64;

use super::{ComplexSignal, ProcessedSignal, RawSignal};
use crate::{Error, Result};

/// Multiplies by `exp(-j 2 pi f_c n / f_s)`, shifting the carrier to DC.
///
/// No gain is applied: an in-band real tone of amplitude `A` ends up as a
/// baseband component of magnitude `A/2` next to its image at `-2 f_c`.
pub fn mix_to_baseband(signal: &RawSignal, carrier_hz: f64) -> Result<ComplexSignal> {
    let fs = signal.sample_rate_hz;
    if !(fs > 0.0) {
        return Err(Error::param(format!("invalid sample rate {fs}")));
    }
    if !(carrier_hz >= 0.0 && carrier_hz < fs / 2.0) {
        return Err(Error::param(format!(
            "carrier {carrier_hz} Hz must lie below Nyquist ({} Hz)",
            fs / 2.0
        )));
    }
    let cycles_per_sample = carrier_hz / fs;
    let samples = signal
        .samples
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            let phase = (cycles_per_sample * n as f64).fract();
            Complex64::from_polar(x, -2.0 * PI * phase)
        })
        .collect();
    Ok(ComplexSignal::new(samples, fs))
}

/// Modulus of every complex sample.
pub fn envelope_abs(signal: &ComplexSignal) -> ProcessedSignal {
    ProcessedSignal::new(
        signal.samples.iter().map(|c| c.norm()).collect(),
        signal.sample_rate_hz,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{design_fir, Convolve, FilterKind, CARRIER_HZ, RAW_SAMPLE_RATE_HZ};
    use rustfft::FftPlanner;

    const FS: f64 = RAW_SAMPLE_RATE_HZ;

    fn lowpass() -> crate::signal::FirFilter {
        design_fir(FilterKind::Lowpass, 5_000.0, None, 127, FS).unwrap()
    }

    fn cosine(freq: f64, n: usize) -> RawSignal {
        RawSignal::new(
            (0..n)
                .map(|i| (2.0 * PI * freq * i as f64 / FS).cos())
                .collect(),
            FS,
        )
    }

    #[test]
    fn carrier_mixes_to_half_amplitude_constant() {
        let bb = mix_to_baseband(&cosine(CARRIER_HZ, 3_300), CARRIER_HZ)
            .unwrap()
            .convolve(&lowpass())
            .unwrap();
        for c in &bb.samples[200..3_100] {
            assert!((c.norm() - 0.5).abs() < 0.005, "{c}");
            assert!(c.im.abs() < 0.005);
        }
    }

    #[test]
    fn offset_tone_rotates_at_the_offset_frequency() {
        let n = 3_300; // 10 ms, an integer number of 1 kHz periods
        let bb = mix_to_baseband(&cosine(CARRIER_HZ + 1_000.0, n), CARRIER_HZ)
            .unwrap()
            .convolve(&lowpass())
            .unwrap();
        // the short lowpass already rolls off slightly at 1 kHz
        let expected = 0.5 * lowpass().gain_at(1_000.0, FS);
        for c in &bb.samples[200..n - 200] {
            assert!((c.norm() - expected).abs() < 0.005, "{} vs {expected}", c.norm());
        }
        let mut buf = bb.samples.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let peak = buf
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        let freq = peak as f64 * FS / n as f64;
        assert!((freq - 1_000.0).abs() < 1e-6, "peak at {freq} Hz");
    }

    #[test]
    fn zero_input_mixes_to_zero() {
        let bb = mix_to_baseband(&RawSignal::new(vec![0.0; 100], FS), CARRIER_HZ).unwrap();
        assert!(bb.samples.iter().all(|c| c.re == 0.0 && c.im == 0.0));
        assert_eq!(bb.len(), 100);
    }

    #[test]
    fn carrier_at_or_above_nyquist_is_rejected() {
        let x = RawSignal::new(vec![0.0; 10], FS);
        assert!(mix_to_baseband(&x, FS / 2.0).is_err());
        assert!(mix_to_baseband(&x, 200_000.0).is_err());
    }

    #[test]
    fn envelope_is_the_modulus() {
        let s = ComplexSignal::new(
            vec![Complex64::new(3.0, 4.0), Complex64::new(-2.0, 0.0), Complex64::new(-0.5, 0.0)],
            FS,
        );
        assert_eq!(envelope_abs(&s).samples, vec![5.0, 2.0, 0.5]);
    }

    #[test]
    fn am_burst_envelope_is_recovered() {
        // Hann-shaped burst, 3 ms long, centred at 8 ms
        let n = 5_000;
        let env = |t: f64| {
            let u = (t - 6.5e-3) / 3e-3;
            if (0.0..=1.0).contains(&u) {
                0.8 * (PI * u).sin().powi(2)
            } else {
                0.0
            }
        };
        let raw = RawSignal::new(
            (0..n)
                .map(|i| {
                    let t = i as f64 / FS;
                    env(t) * (2.0 * PI * CARRIER_HZ * t).cos()
                })
                .collect(),
            FS,
        );
        let bb = mix_to_baseband(&raw, CARRIER_HZ)
            .unwrap()
            .convolve(&lowpass())
            .unwrap();
        let got: Vec<f64> = envelope_abs(&bb).samples.iter().map(|v| 2.0 * v).collect();
        let truth: Vec<f64> = (0..n).map(|i| env(i as f64 / FS)).collect();
        let err = got
            .iter()
            .zip(&truth)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err / norm < 0.02, "relative RMS error {}", err / norm);
    }
}
