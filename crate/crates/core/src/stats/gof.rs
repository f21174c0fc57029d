use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::GammaParams;
use crate::{Error, Result};

pub const DEFAULT_CELLS: usize = 20;
pub const DEFAULT_SIGNIFICANCE: f64 = 0.05;
const MIN_CELLS: usize = 5;
const MIN_EXPECTED_PER_CELL: usize = 5;

/// Pearson chi-square test of a fitted Gamma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    /// `cells - 1 - 2`: two parameters were estimated from the data.
    pub degrees_of_freedom: usize,
    pub critical_value: f64,
    pub accepted: bool,
}

/// Chi-square goodness of fit at the default 5% significance level.
pub fn chi_square_gof(amplitudes: &[f64], params: GammaParams, cells: usize) -> Result<GofResult> {
    chi_square_gof_at(amplitudes, params, cells, DEFAULT_SIGNIFICANCE)
}

/// Chi-square goodness of fit over `cells` intervals that are equiprobable
/// under `params`.
///
/// Cell `i` is `[F^-1(i/m), F^-1((i+1)/m))`; each sample is placed by
/// evaluating the CDF, which is the same partition without inverting it.
pub fn chi_square_gof_at(
    amplitudes: &[f64],
    params: GammaParams,
    cells: usize,
    significance: f64,
) -> Result<GofResult> {
    if cells < MIN_CELLS {
        return Err(Error::param(format!(
            "chi-square test needs at least {MIN_CELLS} cells, got {cells}"
        )));
    }
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::param(format!("significance {significance} not in (0, 1)")));
    }
    let n = amplitudes.len();
    if n < MIN_EXPECTED_PER_CELL * cells {
        return Err(Error::InsufficientData(format!(
            "{cells} cells need at least {} samples, got {n}",
            MIN_EXPECTED_PER_CELL * cells
        )));
    }
    let mut observed = vec![0usize; cells];
    for &x in amplitudes {
        let u = params.cdf(x);
        let cell = ((u * cells as f64).floor() as usize).min(cells - 1);
        observed[cell] += 1;
    }
    let expected = n as f64 / cells as f64;
    let statistic = observed
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum();
    let dof = cells - 3;
    let critical_value = ChiSquared::new(dof as f64)
        .map_err(|e| Error::param(e.to_string()))?
        .inverse_cdf(1.0 - significance);
    Ok(GofResult {
        statistic,
        degrees_of_freedom: dof,
        critical_value,
        accepted: statistic < critical_value,
    })
}
