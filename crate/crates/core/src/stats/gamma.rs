use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, gamma_lr, ln_gamma};

use crate::{Error, Result};

/// Fewest samples `fit_gamma` accepts.
pub const MIN_FIT_SAMPLES: usize = 50;
const MAX_NEWTON_ITERATIONS: usize = 100;
const NEWTON_TOLERANCE: f64 = 1e-10;

/// Gamma distribution with shape `k` and scale `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub k: f64,
    pub theta: f64,
}

impl GammaParams {
    pub fn new(k: f64, theta: f64) -> Result<Self> {
        if !(k > 0.0 && theta > 0.0) || !k.is_finite() || !theta.is_finite() {
            return Err(Error::param(format!(
                "Gamma parameters must be positive and finite (k={k}, theta={theta})"
            )));
        }
        Ok(Self { k, theta })
    }

    pub fn mean(&self) -> f64 {
        self.k * self.theta
    }

    pub fn variance(&self) -> f64 {
        self.k * self.theta * self.theta
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            gamma_lr(self.k, x / self.theta)
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        (self.k - 1.0) * x.ln() - x / self.theta - ln_gamma(self.k) - self.k * self.theta.ln()
    }

    pub fn log_likelihood(&self, xs: &[f64]) -> f64 {
        xs.iter().map(|&x| self.ln_pdf(x)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    MaximumLikelihood,
    /// Newton did not converge; the method-of-moments seed was kept.
    MomentsFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub params: GammaParams,
    pub n: usize,
    pub method: FitMethod,
    pub iterations: usize,
}

/// Trigamma via upward recurrence and the asymptotic series.
pub(crate) fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv
        + inv2 / 2.0
        + inv * inv2
            * (1.0 / 6.0
                + inv2
                    * (-1.0 / 30.0
                        + inv2 * (1.0 / 42.0 + inv2 * (-1.0 / 30.0 + inv2 * (5.0 / 66.0)))))
}

/// Maximum-likelihood Gamma fit.
///
/// Solves `ln k - digamma(k) = ln(mean) - mean(ln x)` by Newton's method,
/// seeded with the method-of-moments shape `mean^2 / var`; `theta = mean / k`.
pub fn fit_gamma(amplitudes: &[f64]) -> Result<GammaFit> {
    fit_gamma_limited(amplitudes, MAX_NEWTON_ITERATIONS)
}

pub(crate) fn fit_gamma_limited(xs: &[f64], max_iterations: usize) -> Result<GammaFit> {
    let n = xs.len();
    if n < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "Gamma fit needs at least {MIN_FIT_SAMPLES} samples, got {n}"
        )));
    }
    if let Some(bad) = xs.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::param(format!(
            "Gamma fit needs strictly positive finite samples, found {bad}"
        )));
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    // rounding leaves a tiny positive variance for identical samples
    if !(var > 1e-20 * mean * mean) {
        return Err(Error::DegenerateData(format!(
            "all {n} samples are equal ({mean})"
        )));
    }
    let mean_log = xs.iter().map(|x| x.ln()).sum::<f64>() / nf;
    let s = mean.ln() - mean_log;
    let k0 = mean * mean / var;
    let moments = GammaFit {
        params: GammaParams {
            k: k0,
            theta: mean / k0,
        },
        n,
        method: FitMethod::MomentsFallback,
        iterations: 0,
    };
    if !(s > 0.0) {
        // numerically indistinguishable from constant in log space
        return Ok(moments);
    }

    let mut k = k0;
    for it in 1..=max_iterations {
        let g = k.ln() - digamma(k) - s;
        let dg = 1.0 / k - trigamma(k);
        let mut next = k - g / dg;
        if !(next > 0.0) || !next.is_finite() {
            next = k / 2.0;
        }
        let step = (next - k).abs() / k;
        k = next;
        if step < NEWTON_TOLERANCE {
            return Ok(GammaFit {
                params: GammaParams { k, theta: mean / k },
                n,
                method: FitMethod::MaximumLikelihood,
                iterations: it,
            });
        }
    }
    Ok(moments)
}
