use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist, Normal as NormalDist};

use super::CorpusParams;
use crate::signal::{RawSignal, RAW_LEN, RAW_SAMPLE_RATE_HZ};
use crate::stats::{Condition, DistanceBin, BIN_WIDTH_M};
use crate::{Error, Result};

/// Latent values beyond this many standard deviations are clamped.
const Z_LIMIT: f64 = 7.0;
const Z_STEPS_PER_UNIT: usize = 32;
/// Reflector pulses are truncated at this many standard deviations.
const PULSE_SUPPORT_SIGMAS: f64 = 5.0;

/// Everything about a condition that does not depend on the seed: per-bin
/// scale targets and the standard Gamma quantile table for its shape.
#[derive(Debug, Clone)]
pub struct ConditionModel {
    condition: Condition,
    params: CorpusParams,
    /// Scale per distance bin, covering the whole record.
    theta_by_bin: Vec<f64>,
    /// `Q_k(Phi(z))` on an even grid over `[-Z_LIMIT, Z_LIMIT]`.
    quantiles: Vec<f64>,
    pulse_sigma_s: f64,
}

impl ConditionModel {
    pub fn new(condition: &Condition, params: &CorpusParams) -> Result<Self> {
        condition.ensure_conformant()?;
        params.validate()?;
        let record_s = RAW_LEN as f64 / RAW_SAMPLE_RATE_HZ;
        let max_range = (record_s - params.range_origin_s).max(0.0) * params.speed_of_sound_mps / 2.0;
        let n_bins = (max_range / BIN_WIDTH_M).ceil() as usize + 1;
        let theta_by_bin = (0..n_bins)
            .map(|b| params.target(condition, DistanceBin::new(b)).map(|p| p.theta))
            .collect::<Result<Vec<_>>>()?;
        let k = params.target(condition, DistanceBin::new(0))?.k;

        let std_gamma = GammaDist::new(k, 1.0).map_err(|e| Error::param(e.to_string()))?;
        let normal = NormalDist::new(0.0, 1.0).expect("standard normal");
        let steps = 2 * Z_LIMIT as usize * Z_STEPS_PER_UNIT;
        let quantiles = (0..=steps)
            .map(|i| {
                let z = -Z_LIMIT + i as f64 / Z_STEPS_PER_UNIT as f64;
                std_gamma.inverse_cdf(normal.cdf(z))
            })
            .collect();

        // Gaussian pulse whose power spectrum is 3 dB down at +-bandwidth/2
        let sigma_f = params.pulse_bandwidth_hz / (2.0 * (2.0f64.ln()).sqrt());
        let pulse_sigma_s = 1.0 / (2.0 * PI * sigma_f);

        Ok(Self {
            condition: *condition,
            params: params.clone(),
            theta_by_bin,
            quantiles,
            pulse_sigma_s,
        })
    }

    pub fn condition(&self) -> &Condition {
        &self.condition
    }

    fn gamma_quantile(&self, z: f64) -> f64 {
        let pos = (z.clamp(-Z_LIMIT, Z_LIMIT) + Z_LIMIT) * Z_STEPS_PER_UNIT as f64;
        let i = (pos.floor() as usize).min(self.quantiles.len() - 2);
        let t = pos - i as f64;
        self.quantiles[i] * (1.0 - t) + self.quantiles[i + 1] * t
    }

    fn theta_at(&self, t: f64) -> f64 {
        let d = (t - self.params.range_origin_s) * self.params.speed_of_sound_mps / 2.0;
        let bin = if d <= 0.0 {
            0
        } else {
            ((d / BIN_WIDTH_M) as usize).min(self.theta_by_bin.len() - 1)
        };
        self.theta_by_bin[bin]
    }

    /// Unit-variance latent built from Poisson-arriving reflector pulses with
    /// Gaussian weights. Dividing by the local pulse energy makes every sample
    /// exactly standard normal given the arrivals.
    fn latent(&self, rng: &mut ChaCha8Rng, rate_per_s: f64) -> Vec<f64> {
        let fs = RAW_SAMPLE_RATE_HZ;
        let sigma = self.pulse_sigma_s;
        let reach = PULSE_SUPPORT_SIGMAS * sigma;
        let (t_lo, t_hi) = (-reach, RAW_LEN as f64 / fs + reach);
        let expected = rate_per_s * (t_hi - t_lo);
        let count = Poisson::new(expected)
            .map(|p| p.sample(rng) as usize)
            .unwrap_or(0);

        let mut sum = vec![0.0; RAW_LEN];
        let mut energy = vec![0.0; RAW_LEN];
        for _ in 0..count {
            let t0 = rng.random_range(t_lo..t_hi);
            let w: f64 = StandardNormal.sample(rng);
            let first = ((t0 - reach) * fs).ceil().max(0.0) as usize;
            let last = (((t0 + reach) * fs).floor() as isize).min(RAW_LEN as isize - 1);
            if last < first as isize {
                continue;
            }
            for i in first..=last as usize {
                let u = (i as f64 / fs - t0) / sigma;
                let p = (-0.5 * u * u).exp();
                sum[i] += w * p;
                energy[i] += p * p;
            }
        }
        sum.iter()
            .zip(&energy)
            .map(|(&s, &e)| if e > 1e-200 { s / e.sqrt() } else { 0.0 })
            .collect()
    }

    /// One raw capture: membrane ringing, ground clutter and sensor noise.
    pub fn synthesize(&self, seed: u64) -> RawSignal {
        let p = &self.params;
        let fs = RAW_SAMPLE_RATE_HZ;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tau = p.reverb_duration_s / 1000f64.ln();
        let w_c = 2.0 * PI * p.carrier_hz;

        let mut samples: Vec<f64> = (0..RAW_LEN)
            .map(|i| {
                let t = i as f64 / fs;
                p.reverb_amplitude * (-t / tau).exp() * (w_c * t).sin()
            })
            .collect();

        let rate = p.ground(self.condition.ground).reflectors_per_ms * 1e3;
        if rate > 0.0 {
            let phase = rng.random_range(0.0..2.0 * PI);
            let latent = self.latent(&mut rng, rate);
            for (i, (x, z)) in samples.iter_mut().zip(&latent).enumerate() {
                let t = i as f64 / fs;
                let envelope = self.theta_at(t) * self.gamma_quantile(*z);
                *x += envelope * (w_c * t + phase).cos();
            }
        }

        if p.noise_std > 0.0 {
            let noise = Normal::new(0.0, p.noise_std).expect("validated noise std");
            for x in &mut samples {
                *x += noise.sample(&mut rng);
            }
        }
        RawSignal::new(samples, fs)
    }
}

/// Synthesises one raw capture for `cond`; deterministic in
/// `(cond, params, seed)`.
pub fn synth_raw_signal(cond: &Condition, params: &CorpusParams, seed: u64) -> Result<RawSignal> {
    Ok(ConditionModel::new(cond, params)?.synthesize(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{process_raw, PipelineConfig};
    use crate::stats::Ground;

    fn cond() -> Condition {
        Condition::new(0.44, 0.0, Ground::Gravel)
    }

    #[test]
    fn conformant_record_shape() {
        let raw = synth_raw_signal(&cond(), &CorpusParams::default(), 3).unwrap();
        assert_eq!(raw.len(), 9_900);
        assert_eq!(raw.sample_rate_hz, 330_000.0);
        assert!(raw.samples.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let p = CorpusParams::default();
        let a = synth_raw_signal(&cond(), &p, 99).unwrap();
        let b = synth_raw_signal(&cond(), &p, 99).unwrap();
        assert!(a.samples.iter().zip(&b.samples).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = synth_raw_signal(&cond(), &p, 100).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn non_conformant_condition_is_rejected() {
        let c = Condition::new(0.70, 0.0, Ground::Gravel);
        assert!(matches!(
            synth_raw_signal(&c, &CorpusParams::default(), 1),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn pure_reverberation_decays_after_its_peak() {
        let mut p = CorpusParams {
            noise_std: 0.0,
            ..CorpusParams::default()
        };
        p.gravel.reflectors_per_ms = 0.0;
        let raw = synth_raw_signal(&cond(), &p, 5).unwrap();
        let env = process_raw(&raw, &PipelineConfig::default()).unwrap().samples;
        let peak = env
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        for w in env[peak..].windows(2) {
            assert!(w[1] <= w[0], "{} > {}", w[1], w[0]);
        }
        assert!(env[peak] > 0.0);
    }

    #[test]
    fn quantile_table_matches_direct_inversion() {
        let m = ConditionModel::new(&cond(), &CorpusParams::default()).unwrap();
        let k = CorpusParams::default().target(&cond(), DistanceBin::new(2)).unwrap().k;
        let g = GammaDist::new(k, 1.0).unwrap();
        let n = NormalDist::new(0.0, 1.0).unwrap();
        for z in [-2.5, -0.7, 0.0, 0.33, 1.9, 3.1] {
            let exact = g.inverse_cdf(n.cdf(z));
            assert!((m.gamma_quantile(z) - exact).abs() < 1e-3 * exact, "z={z}");
        }
    }
}
