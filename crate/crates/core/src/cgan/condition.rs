use serde::{Deserialize, Serialize};

use crate::stats::{Condition, Ground, BETA_MAX_DEG, BETA_MIN_DEG, HEIGHT_MAX_M, HEIGHT_MIN_M};
use crate::{Error, Result};

/// Network-facing condition vector. Height and angle are mapped affinely
/// onto `[-1, 1]` over the campaign range; gravel is `1`, asphalt `0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedCondition {
    pub h_norm: f64,
    pub beta_norm: f64,
    pub ground_flag: f64,
}

impl NormalizedCondition {
    pub fn to_array(self) -> [f64; 3] {
        [self.h_norm, self.beta_norm, self.ground_flag]
    }
}

pub fn normalize_condition(cond: &Condition) -> Result<NormalizedCondition> {
    cond.ensure_conformant()?;
    Ok(NormalizedCondition {
        h_norm: 2.0 * (cond.height_m - HEIGHT_MIN_M) / (HEIGHT_MAX_M - HEIGHT_MIN_M) - 1.0,
        beta_norm: 2.0 * (cond.beta_deg - BETA_MIN_DEG) / (BETA_MAX_DEG - BETA_MIN_DEG) - 1.0,
        ground_flag: match cond.ground {
            Ground::Gravel => 1.0,
            Ground::Asphalt => 0.0,
        },
    })
}

pub fn denormalize_condition(n: &NormalizedCondition) -> Result<Condition> {
    let in_range = |v: f64| (-1.0..=1.0).contains(&v);
    if !in_range(n.h_norm) || !in_range(n.beta_norm) {
        return Err(Error::param(format!("normalized condition {n:?} outside [-1, 1]")));
    }
    let ground = if n.ground_flag == 1.0 {
        Ground::Gravel
    } else if n.ground_flag == 0.0 {
        Ground::Asphalt
    } else {
        return Err(Error::param(format!("ground flag {} is neither 0 nor 1", n.ground_flag)));
    };
    Ok(Condition::new(
        HEIGHT_MIN_M + (n.h_norm + 1.0) / 2.0 * (HEIGHT_MAX_M - HEIGHT_MIN_M),
        BETA_MIN_DEG + (n.beta_norm + 1.0) / 2.0 * (BETA_MAX_DEG - BETA_MIN_DEG),
        ground,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stated_encodings() {
        let n = normalize_condition(&Condition::new(0.485, -8.0, Ground::Gravel)).unwrap();
        assert!(n.h_norm.abs() < 1e-12);
        assert_eq!(n.beta_norm, -1.0);
        assert_eq!(n.ground_flag, 1.0);
        let a = normalize_condition(&Condition::new(0.62, 2.0, Ground::Asphalt)).unwrap();
        assert_eq!((a.h_norm, a.beta_norm, a.ground_flag), (1.0, 1.0, 0.0));
    }

    #[test]
    fn round_trip() {
        for h in [0.35, 0.41, 0.5, 0.62] {
            for b in [-8.0, -3.5, 0.0, 2.0] {
                for g in Ground::ALL {
                    let c = Condition::new(h, b, g);
                    let back = denormalize_condition(&normalize_condition(&c).unwrap()).unwrap();
                    assert!((back.height_m - h).abs() < 1e-12);
                    assert!((back.beta_deg - b).abs() < 1e-12);
                    assert_eq!(back.ground, g);
                }
            }
        }
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(normalize_condition(&Condition::new(0.7, 0.0, Ground::Gravel)).is_err());
        let bad = NormalizedCondition {
            h_norm: 0.0,
            beta_norm: 0.0,
            ground_flag: 0.5,
        };
        assert!(denormalize_condition(&bad).is_err());
    }
}
