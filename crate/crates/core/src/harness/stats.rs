//! Binomial-proportion statistics.

use crate::error::{Error, Result};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidParameter("wilson interval needs trials >= 1".into()));
    }
    if successes > trials {
        return Err(Error::InvalidParameter(format!(
            "successes {successes} exceed trials {trials}"
        )));
    }
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::InvalidParameter(format!("invalid normal quantile {z}")));
    }
    let n = trials as f64;
    let rate = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (rate + z2 / (2.0 * n)) / denom;
    let margin = z * (rate * (1.0 - rate) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if successes == 0 { 0.0 } else { (center - margin).clamp(0.0, rate) };
    let high = if successes == trials { 1.0 } else { (center + margin).clamp(rate, 1.0) };
    Ok((low, high))
}

/// Standard deviation of the sample mean of `trials` Bernoulli(`p`) draws.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}
