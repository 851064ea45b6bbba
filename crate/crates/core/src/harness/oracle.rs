//! Exact acceptance probabilities by enumeration.
//!
//! Nothing here simulates a qubit. Each honest instance `(r, c)` is reduced to
//! its total rotation angle `θ = (t_received + k)·π/p`, where `k` is the sum of
//! the encoding values the verifier applies, and the acceptance probability is
//! the closed form `½ − ½·e^(−σ²/2)·cos θ` (which is `sin²(θ/2)` without noise),
//! mixed with the readout flip. An intercept-resend adversary replaces
//! `t_received` by `g^r'`, averaged over all `q` guesses `r'`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{flipped_probability, jittered_accept_probability, AdversaryConfig, NoiseModel};
use crate::error::{Error, Result};
use crate::groupmath::GroupParams;
use crate::qzkp::{Mode, RoundPins};
use crate::schnorr::KeyPair;

/// Largest modulus the O(q²) enumeration accepts.
pub const ENUMERATION_CAP: u64 = 2000;

/// Instances at or above `1 - DETERMINISTIC_TOLERANCE` count as always accepted.
pub const DETERMINISTIC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub r: u64,
    pub c: u64,
    /// Total angle on the honest commitment, in radians.
    pub theta_total: f64,
    pub accept_probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub instances: u64,
    pub mean: f64,
    pub deterministic_count: u64,
    pub deterministic_fraction: f64,
}

/// Acceptance probability of a qubit rotated by `theta` in total.
pub fn accept_probability(theta: f64, noise: &NoiseModel) -> f64 {
    let base = if noise.sigma() == 0.0 {
        (theta / 2.0).sin().powi(2)
    } else {
        jittered_accept_probability(theta, noise.sigma())
    };
    flipped_probability(base, noise.flip_prob())
}

/// Encoding steps the verifier adds on top of the received qubit for the honest
/// instance `(r, c)`.
pub fn completion_steps(params: &GroupParams, keys: &KeyPair, mode: Mode, r: u64, c: u64) -> Result<u64> {
    let p = params.modulus();
    let s = r
        .checked_add(c.checked_mul(keys.secret()).ok_or(Error::Overflow("c*x"))?)
        .ok_or(Error::Overflow("r + c*x"))?;
    let yc = params.pow(keys.public(), c);
    let gs = params.pow_g(s);
    Ok(match mode {
        Mode::Literal => yc + (p - gs),
        Mode::Corrected => {
            let t_hat = params.mul(gs, params.inv(yc)?);
            (p - t_hat) % p
        }
    })
}

fn check_cap(params: &GroupParams) -> Result<()> {
    if params.modulus() > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            p: params.modulus(),
            cap: ENUMERATION_CAP,
        });
    }
    Ok(())
}

fn pinned_range(pin: Option<u64>, q: u64, what: &str) -> Result<std::ops::Range<u64>> {
    match pin {
        None => Ok(0..q),
        Some(v) if v < q => Ok(v..v + 1),
        Some(v) => Err(Error::InvalidParameter(format!(
            "pinned {what} = {v} outside [0, {}]",
            q - 1
        ))),
    }
}

/// Visits every honest instance `(r, c)` (restricted by `pins`) and returns the
/// aggregate. Rows are produced in `r`-major order.
pub fn for_each_instance<F: FnMut(&OracleRow)>(
    params: &GroupParams,
    secret: u64,
    mode: Mode,
    noise: &NoiseModel,
    adversary: &AdversaryConfig,
    pins: RoundPins,
    mut visit: F,
) -> Result<OracleSummary> {
    check_cap(params)?;
    let keys = KeyPair::from_secret(params, secret)?;
    let p = params.modulus();
    let q = params.order();
    let step = PI / p as f64;
    let nonces = pinned_range(pins.nonce, q, "nonce")?;
    let challenges = pinned_range(pins.challenge, q, "challenge")?;

    // Eve's forwarded values, and a lazily filled average per completion value.
    let guesses: Vec<u64> = if adversary.is_active() {
        (0..q).map(|g| params.pow_g(g)).collect()
    } else {
        Vec::new()
    };
    let mut eve_average: Vec<Option<f64>> = vec![None; 2 * p as usize];

    let mut instances = 0u64;
    let mut total = 0.0;
    let mut deterministic = 0u64;
    for r in nonces {
        let t = params.pow_g(r);
        for c in challenges.clone() {
            let k = completion_steps(params, &keys, mode, r, c)?;
            let theta_total = (t + k) as f64 * step;
            let accept = if adversary.is_active() {
                *eve_average[k as usize].get_or_insert_with(|| {
                    guesses
                        .iter()
                        .map(|&forged| accept_probability((forged + k) as f64 * step, noise))
                        .sum::<f64>()
                        / q as f64
                })
            } else {
                accept_probability(theta_total, noise)
            };
            instances += 1;
            total += accept;
            if accept >= 1.0 - DETERMINISTIC_TOLERANCE {
                deterministic += 1;
            }
            visit(&OracleRow {
                r,
                c,
                theta_total,
                accept_probability: accept,
            });
        }
    }
    Ok(OracleSummary {
        instances,
        mean: total / instances as f64,
        deterministic_count: deterministic,
        deterministic_fraction: deterministic as f64 / instances as f64,
    })
}

/// Exact mean acceptance probability over all honest instances.
pub fn analytic_acceptance(
    params: &GroupParams,
    secret: u64,
    mode: Mode,
    noise: &NoiseModel,
    adversary: &AdversaryConfig,
    pins: RoundPins,
) -> Result<f64> {
    Ok(for_each_instance(params, secret, mode, noise, adversary, pins, |_| {})?.mean)
}

/// All rows plus the summary.
pub fn oracle_table(
    params: &GroupParams,
    secret: u64,
    mode: Mode,
    noise: &NoiseModel,
    adversary: &AdversaryConfig,
    pins: RoundPins,
) -> Result<(Vec<OracleRow>, OracleSummary)> {
    let mut rows = Vec::new();
    let summary = for_each_instance(params, secret, mode, noise, adversary, pins, |row| {
        rows.push(*row)
    })?;
    Ok((rows, summary))
}
