use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const HEIGHT_MIN_M: f64 = 0.35;
pub const HEIGHT_MAX_M: f64 = 0.62;
pub const BETA_MIN_DEG: f64 = -8.0;
pub const BETA_MAX_DEG: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ground {
    Gravel,
    Asphalt,
}

impl Ground {
    pub const ALL: [Ground; 2] = [Ground::Gravel, Ground::Asphalt];

    pub fn as_str(self) -> &'static str {
        match self {
            Ground::Gravel => "gravel",
            Ground::Asphalt => "asphalt",
        }
    }

    pub fn flipped(self) -> Ground {
        match self {
            Ground::Gravel => Ground::Asphalt,
            Ground::Asphalt => Ground::Gravel,
        }
    }

    pub(crate) fn index(self) -> u64 {
        match self {
            Ground::Gravel => 0,
            Ground::Asphalt => 1,
        }
    }
}

impl fmt::Display for Ground {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ground {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gravel" => Ok(Ground::Gravel),
            "asphalt" => Ok(Ground::Asphalt),
            other => Err(Error::param(format!(
                "unknown ground type '{other}' (expected gravel or asphalt)"
            ))),
        }
    }
}

/// Measurement setup: sensor height above ground, installation (beta) angle
/// and ground type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub height_m: f64,
    pub beta_deg: f64,
    pub ground: Ground,
}

impl Condition {
    pub fn new(height_m: f64, beta_deg: f64, ground: Ground) -> Self {
        Self {
            height_m,
            beta_deg,
            ground,
        }
    }

    /// Inside the measured envelope: 0.35-0.62 m, -8..2 degrees.
    pub fn is_conformant(&self) -> bool {
        (HEIGHT_MIN_M..=HEIGHT_MAX_M).contains(&self.height_m)
            && (BETA_MIN_DEG..=BETA_MAX_DEG).contains(&self.beta_deg)
    }

    pub fn ensure_conformant(&self) -> Result<()> {
        if self.is_conformant() {
            Ok(())
        } else {
            Err(Error::param(format!(
                "condition {self} outside height [{HEIGHT_MIN_M}, {HEIGHT_MAX_M}] m / \
                 beta [{BETA_MIN_DEG}, {BETA_MAX_DEG}] deg"
            )))
        }
    }

    /// Exact identity key (bit patterns) for grouping records.
    pub fn key(&self) -> ConditionKey {
        ConditionKey {
            ground: self.ground,
            height_bits: ordered_bits(self.height_m),
            beta_bits: ordered_bits(self.beta_deg),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(height {} m, beta {} deg, {})",
            self.height_m, self.beta_deg, self.ground
        )
    }
}

/// Total-order-preserving bit mapping for finite floats.
fn ordered_bits(x: f64) -> i64 {
    let b = x.to_bits() as i64;
    if b < 0 {
        b ^ i64::MAX
    } else {
        b
    }
}

/// Orders by ground, then height, then beta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConditionKey {
    ground: Ground,
    height_bits: i64,
    beta_bits: i64,
}
