use serde::{Deserialize, Serialize};

use crate::signal::CARRIER_HZ;
use crate::stats::{
    Condition, DistanceBin, GammaParams, Ground, DEFAULT_SPEED_OF_SOUND_MPS, HEIGHT_MIN_M,
};
use crate::{Error, Result};

/// `value(h) = at_min_height + per_m * (h - 0.35)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeightTrend {
    pub at_min_height: f64,
    pub per_m: f64,
}

impl HeightTrend {
    pub fn eval(&self, height_m: f64) -> f64 {
        self.at_min_height + self.per_m * (height_m - HEIGHT_MIN_M)
    }
}

/// Distance of the clutter maximum:
/// `d_peak = intercept_m + per_height * h + per_deg * beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakMap {
    pub intercept_m: f64,
    pub per_height: f64,
    pub per_deg: f64,
}

impl PeakMap {
    pub fn eval(&self, height_m: f64, beta_deg: f64) -> f64 {
        self.intercept_m + self.per_height * height_m + self.per_deg * beta_deg
    }
}

/// Per-ground clutter statistics at the clutter peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTrend {
    /// Gamma shape, shared by every bin of a condition.
    pub shape: HeightTrend,
    /// Gamma scale in the peak bin before the angle factor.
    pub peak_scale: HeightTrend,
    /// Poisson rate of discrete reflectors per millisecond of echo time.
    pub reflectors_per_ms: f64,
    /// Multiplies `clutter_spread_m`: rough ground scatters over a wider
    /// range of distances than smooth ground.
    pub spread_factor: f64,
}

/// Statistical model of the reference corpus. Every number here is a corpus
/// parameter, not a measured quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusParams {
    /// Time for the membrane ringing to decay by 60 dB.
    pub reverb_duration_s: f64,
    pub reverb_amplitude: f64,
    pub clutter_peak: PeakMap,
    pub clutter_spread_m: f64,
    /// Scale of bins far from the peak, relative to the peak bin.
    pub background_fraction: f64,
    /// Relative change of the scale per degree of beta angle.
    pub scale_per_deg: f64,
    pub gravel: GroundTrend,
    pub asphalt: GroundTrend,
    pub noise_std: f64,
    pub pulse_bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub speed_of_sound_mps: f64,
    /// Raw time of distance zero; equals the pipeline's head trim so that
    /// processed sample 0 is range 0.
    pub range_origin_s: f64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            reverb_duration_s: 1.3e-3,
            reverb_amplitude: 1.0,
            clutter_peak: PeakMap {
                intercept_m: 0.0,
                per_height: 1.4,
                per_deg: -0.02,
            },
            clutter_spread_m: 0.3,
            background_fraction: 0.05,
            scale_per_deg: 0.03,
            gravel: GroundTrend {
                shape: HeightTrend {
                    at_min_height: 1.8,
                    per_m: 1.5,
                },
                peak_scale: HeightTrend {
                    at_min_height: 0.40,
                    per_m: -0.75,
                },
                reflectors_per_ms: 30.0,
                spread_factor: 1.5,
            },
            asphalt: GroundTrend {
                shape: HeightTrend {
                    at_min_height: 2.6,
                    per_m: 1.5,
                },
                peak_scale: HeightTrend {
                    at_min_height: 0.18,
                    per_m: -0.25,
                },
                reflectors_per_ms: 15.0,
                spread_factor: 1.0,
            },
            noise_std: 0.01,
            pulse_bandwidth_hz: 3_000.0,
            carrier_hz: CARRIER_HZ,
            speed_of_sound_mps: DEFAULT_SPEED_OF_SOUND_MPS,
            range_origin_s: 17.0 / 20_000.0,
        }
    }
}

impl CorpusParams {
    pub fn ground(&self, ground: Ground) -> &GroundTrend {
        match ground {
            Ground::Gravel => &self.gravel,
            Ground::Asphalt => &self.asphalt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("reverb_duration_s", self.reverb_duration_s),
            ("clutter_spread_m", self.clutter_spread_m),
            ("background_fraction", self.background_fraction),
            ("pulse_bandwidth_hz", self.pulse_bandwidth_hz),
            ("carrier_hz", self.carrier_hz),
            ("speed_of_sound_mps", self.speed_of_sound_mps),
            ("gravel.spread_factor", self.gravel.spread_factor),
            ("asphalt.spread_factor", self.asphalt.spread_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("reverb_amplitude", self.reverb_amplitude),
            ("noise_std", self.noise_std),
            ("range_origin_s", self.range_origin_s),
            ("gravel.reflectors_per_ms", self.gravel.reflectors_per_ms),
            ("asphalt.reflectors_per_ms", self.asphalt.reflectors_per_ms),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.background_fraction > 1.0 {
            return Err(Error::param("background_fraction must not exceed 1"));
        }
        Ok(())
    }

    pub fn peak_distance_m(&self, cond: &Condition) -> f64 {
        self.clutter_peak.eval(cond.height_m, cond.beta_deg)
    }

    fn peak_params(&self, cond: &Condition) -> Result<GammaParams> {
        let g = self.ground(cond.ground);
        let k = g.shape.eval(cond.height_m);
        let theta =
            g.peak_scale.eval(cond.height_m) * (1.0 + self.scale_per_deg * cond.beta_deg);
        GammaParams::new(k, theta).map_err(|_| {
            Error::param(format!(
                "corpus trends give non-positive Gamma parameters (k={k}, theta={theta}) at {cond}"
            ))
        })
    }

    /// Configured Gamma target of the envelope amplitudes in `bin`.
    pub fn target(&self, cond: &Condition, bin: DistanceBin) -> Result<GammaParams> {
        let peak = self.peak_params(cond)?;
        let d = bin.centre_m() - self.peak_distance_m(cond);
        let spread = self.clutter_spread_m * self.ground(cond.ground).spread_factor;
        let w = (-d * d / (2.0 * spread.powi(2))).exp();
        let f = self.background_fraction + (1.0 - self.background_fraction) * w;
        Ok(GammaParams {
            k: peak.k,
            theta: peak.theta * f,
        })
    }

    /// Bin whose configured target has the largest mean.
    pub fn dominant_bin(&self, cond: &Condition) -> DistanceBin {
        let d_peak = self.peak_distance_m(cond);
        let idx = (0..64)
            .min_by(|&a, &b| {
                let da = (DistanceBin::new(a).centre_m() - d_peak).abs();
                let db = (DistanceBin::new(b).centre_m() - d_peak).abs();
                da.total_cmp(&db)
            })
            .unwrap_or(0);
        DistanceBin::new(idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{BETA_MAX_DEG, BETA_MIN_DEG, HEIGHT_MAX_M};

    fn conformant_grid() -> impl Iterator<Item = Condition> {
        Ground::ALL.into_iter().flat_map(|g| {
            (35..=62).flat_map(move |h| {
                (-8..=2).map(move |b| Condition::new(h as f64 / 100.0, b as f64, g))
            })
        })
    }

    #[test]
    fn defaults_are_valid_and_positive_everywhere() {
        let p = CorpusParams::default();
        p.validate().unwrap();
        for c in conformant_grid() {
            let d = p.peak_distance_m(&c);
            assert!((0.3..=2.5).contains(&d), "{c}: {d}");
            for b in 0..20 {
                p.target(&c, DistanceBin::new(b)).unwrap();
            }
        }
    }

    #[test]
    fn ground_types_differ_by_at_least_20_percent() {
        let p = CorpusParams::default();
        for h in [HEIGHT_MIN_M, 0.48, HEIGHT_MAX_M] {
            for b in [BETA_MIN_DEG, 0.0, BETA_MAX_DEG] {
                let g = Condition::new(h, b, Ground::Gravel);
                let a = Condition::new(h, b, Ground::Asphalt);
                let bin = p.dominant_bin(&g);
                let (tg, ta) = (p.target(&g, bin).unwrap(), p.target(&a, bin).unwrap());
                assert!((tg.k - ta.k).abs() / tg.k.max(ta.k) >= 0.2);
                assert!((tg.theta - ta.theta).abs() / tg.theta.max(ta.theta) >= 0.2);
            }
        }
    }

    #[test]
    fn peak_scale_falls_with_height() {
        let p = CorpusParams::default();
        let thetas: Vec<f64> = [0.36, 0.44, 0.52, 0.60]
            .iter()
            .map(|&h| {
                let c = Condition::new(h, 0.0, Ground::Gravel);
                p.target(&c, p.dominant_bin(&c)).unwrap().theta
            })
            .collect();
        assert!(thetas.windows(2).all(|w| w[1] < w[0]), "{thetas:?}");
    }

    #[test]
    fn validation_catches_bad_values() {
        let p = CorpusParams {
            noise_std: -1.0,
            ..CorpusParams::default()
        };
        assert!(p.validate().is_err());
        let p = CorpusParams {
            clutter_spread_m: 0.0,
            ..CorpusParams::default()
        };
        assert!(p.validate().is_err());
    }
}
