use serde::{Deserialize, Serialize};

use crate::stats::{Condition, Ground};
use crate::{Error, Result};

/// Cartesian measurement plan: every height x angle x ground, each measured
/// at `rotations` ground patches `repetitions` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementGrid {
    pub heights_m: Vec<f64>,
    pub betas_deg: Vec<f64>,
    pub rotations: u32,
    pub repetitions: u32,
    pub grounds: Vec<Ground>,
}

impl Default for MeasurementGrid {
    /// 28 heights (0.35-0.62 m) x 11 angles (-8..2 deg) x 21 rotations x
    /// 10 repetitions x 2 grounds = 129,360 records.
    fn default() -> Self {
        Self {
            heights_m: (35..=62).map(|cm| cm as f64 / 100.0).collect(),
            betas_deg: (-8..=2).map(f64::from).collect(),
            rotations: 21,
            repetitions: 10,
            grounds: Ground::ALL.to_vec(),
        }
    }
}

/// One record of the plan with its derived seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordSpec {
    pub index: usize,
    pub condition: Condition,
    pub height_index: usize,
    pub beta_index: usize,
    pub rotation: u32,
    pub repetition: u32,
    pub seed: u64,
}

/// SplitMix64 finaliser.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-record seed: `s = splitmix64(master)`, then
/// `s = splitmix64(s ^ v)` for `v` in (height index, angle index, rotation,
/// repetition, ground index) in that order.
pub fn record_seed(
    master_seed: u64,
    height_index: usize,
    beta_index: usize,
    rotation: u32,
    repetition: u32,
    ground: Ground,
) -> u64 {
    [
        height_index as u64,
        beta_index as u64,
        u64::from(rotation),
        u64::from(repetition),
        ground.index(),
    ]
    .into_iter()
    .fold(splitmix64(master_seed), |s, v| splitmix64(s ^ v))
}

impl MeasurementGrid {
    pub fn record_count(&self) -> usize {
        self.heights_m.len()
            * self.betas_deg.len()
            * self.rotations as usize
            * self.repetitions as usize
            * self.grounds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.heights_m.is_empty() || self.betas_deg.is_empty() || self.grounds.is_empty() {
            return Err(Error::param("grid needs at least one height, angle and ground"));
        }
        if self.rotations == 0 || self.repetitions == 0 {
            return Err(Error::param("rotations and repetitions must be positive"));
        }
        for (name, values) in [("height", &self.heights_m), ("beta", &self.betas_deg)] {
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::param(format!("duplicate {name} values in grid")));
            }
        }
        let mut grounds = self.grounds.clone();
        grounds.sort();
        grounds.dedup();
        if grounds.len() != self.grounds.len() {
            return Err(Error::param("duplicate ground types in grid"));
        }
        for &h in &self.heights_m {
            for &b in &self.betas_deg {
                Condition::new(h, b, self.grounds[0]).ensure_conformant()?;
            }
        }
        Ok(())
    }

    /// Every record in ground, height, angle, rotation, repetition order.
    pub fn records(&self, master_seed: u64) -> impl Iterator<Item = RecordSpec> + '_ {
        let per_cell = self.rotations as usize * self.repetitions as usize;
        self.grounds.iter().flat_map(move |&ground| {
            self.heights_m.iter().enumerate().flat_map(move |(hi, &h)| {
                self.betas_deg.iter().enumerate().flat_map(move |(bi, &b)| {
                    (0..self.rotations).flat_map(move |rot| {
                        (0..self.repetitions).map(move |rep| {
                            let gi = self.grounds.iter().position(|&g| g == ground).unwrap_or(0);
                            let cell = (gi * self.heights_m.len() + hi) * self.betas_deg.len() + bi;
                            RecordSpec {
                                index: cell * per_cell
                                    + rot as usize * self.repetitions as usize
                                    + rep as usize,
                                condition: Condition::new(h, b, ground),
                                height_index: hi,
                                beta_index: bi,
                                rotation: rot,
                                repetition: rep,
                                seed: record_seed(master_seed, hi, bi, rot, rep, ground),
                            }
                        })
                    })
                })
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn default_grid_has_129360_records() {
        let g = MeasurementGrid::default();
        g.validate().unwrap();
        assert_eq!(g.heights_m.len(), 28);
        assert_eq!(g.betas_deg.len(), 11);
        assert_eq!(g.record_count(), 129_360);
        assert_eq!(g.records(0).count(), 129_360);
    }

    #[test]
    fn restricted_grid_counts() {
        let g = MeasurementGrid {
            heights_m: vec![0.36, 0.48, 0.60],
            betas_deg: vec![0.0],
            grounds: vec![Ground::Gravel],
            ..MeasurementGrid::default()
        };
        assert_eq!(g.record_count(), 630);
        let idx: Vec<usize> = g.records(1).map(|r| r.index).collect();
        assert_eq!(idx, (0..630).collect::<Vec<_>>());
    }

    #[test]
    fn seeds_are_distinct_and_reproducible() {
        let g = MeasurementGrid::default();
        let seeds: HashSet<u64> = g.records(42).map(|r| r.seed).collect();
        assert_eq!(seeds.len(), 129_360);
        let again: Vec<u64> = g.records(42).take(50).map(|r| r.seed).collect();
        let first: Vec<u64> = g.records(42).take(50).map(|r| r.seed).collect();
        assert_eq!(again, first);
        assert_ne!(
            record_seed(1, 0, 0, 0, 0, Ground::Gravel),
            record_seed(2, 0, 0, 0, 0, Ground::Gravel)
        );
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs of the reference SplitMix64 generator seeded with 0
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn invalid_grids() {
        let bad = MeasurementGrid {
            heights_m: vec![0.70],
            ..MeasurementGrid::default()
        };
        assert!(bad.validate().is_err());
        let bad = MeasurementGrid {
            rotations: 0,
            ..MeasurementGrid::default()
        };
        assert!(bad.validate().is_err());
        let bad = MeasurementGrid {
            heights_m: vec![0.40, 0.40],
            ..MeasurementGrid::default()
        };
        assert!(bad.validate().is_err());
    }
}
