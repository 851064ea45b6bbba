//! Quantum-channel models between prover and verifier.
//!
//! Only the quantum message is affected; `c` and `s` always pass through
//! unchanged. When both an adversary and noise are configured, the adversary
//! acts first and the noise perturbs whatever she forwards.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groupmath::GroupParams;
use crate::qsim::{g_gate, measure_z, new_qubit, rx, Angle, QubitState};

/// Gaussian x-rotation jitter on the transmitted qubit plus an optional
/// classical flip of the verifier's measurement bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoise", into = "RawNoise")]
pub struct NoiseModel {
    sigma: f64,
    flip_prob: f64,
}

#[derive(Serialize, Deserialize)]
struct RawNoise {
    sigma: f64,
    flip_prob: f64,
}

impl TryFrom<RawNoise> for NoiseModel {
    type Error = Error;

    fn try_from(raw: RawNoise) -> Result<Self> {
        NoiseModel::new(raw.sigma, raw.flip_prob)
    }
}

impl From<NoiseModel> for RawNoise {
    fn from(noise: NoiseModel) -> Self {
        RawNoise {
            sigma: noise.sigma,
            flip_prob: noise.flip_prob,
        }
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

impl NoiseModel {
    pub fn new(sigma: f64, flip_prob: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be finite and non-negative, got {sigma}"
            )));
        }
        if !(0.0..=1.0).contains(&flip_prob) {
            return Err(Error::InvalidParameter(format!(
                "flip probability {flip_prob} outside [0, 1]"
            )));
        }
        Ok(NoiseModel { sigma, flip_prob })
    }

    pub fn none() -> Self {
        NoiseModel {
            sigma: 0.0,
            flip_prob: 0.0,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn flip_prob(&self) -> f64 {
        self.flip_prob
    }

    pub fn is_none(&self) -> bool {
        self.sigma == 0.0 && self.flip_prob == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    None,
    InterceptResend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryConfig {
    pub strategy: Strategy,
    /// Eve always knows `p`, `g` and `Y`.
    pub knows_params: bool,
}

impl Default for AdversaryConfig {
    fn default() -> Self {
        Self::none()
    }
}

impl AdversaryConfig {
    pub fn none() -> Self {
        AdversaryConfig {
            strategy: Strategy::None,
            knows_params: true,
        }
    }

    pub fn intercept_resend() -> Self {
        AdversaryConfig {
            strategy: Strategy::InterceptResend,
            knows_params: true,
        }
    }

    pub fn is_active(&self) -> bool {
        self.strategy != Strategy::None
    }
}

/// What Eve did in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveRecord {
    /// Her single z-measurement of the intercepted qubit.
    pub measured: u8,
    /// Her guess `r'` at the prover's nonce.
    pub guess_nonce: u64,
    /// `g^r' mod p`, the value she encodes into the forwarded qubit.
    pub guess_commitment: u64,
}

pub fn transmit_ideal(state: QubitState) -> QubitState {
    state
}

/// Applies `Rx(ε)` with `ε ~ Normal(0, sigma²)`. With `sigma = 0` the state is
/// returned untouched and no randomness is consumed.
pub fn transmit_noisy<R: Rng + ?Sized>(
    state: QubitState,
    noise: &NoiseModel,
    rng: &mut R,
) -> QubitState {
    if noise.sigma == 0.0 {
        return state;
    }
    let jitter = Normal::new(0.0, noise.sigma)
        .expect("sigma validated finite and positive")
        .sample(rng);
    rx(state, Angle::new(jitter).expect("normal samples are finite"))
}

/// Measures the qubit in z, then forwards `G_p(g^r')|0⟩` for a uniform guess `r'`.
pub fn eve_intercept_resend<R: Rng + ?Sized>(
    state: QubitState,
    params: &GroupParams,
    rng: &mut R,
) -> Result<(QubitState, EveRecord)> {
    let (measured, _) = measure_z(&state, rng);
    let guess_nonce = rng.random_range(0..params.order());
    let guess_commitment = params.pow_g(guess_nonce);
    let forwarded = g_gate(new_qubit(), guess_commitment, params.modulus())?;
    Ok((
        forwarded,
        EveRecord {
            measured,
            guess_nonce,
            guess_commitment,
        },
    ))
}

/// Flips a measurement bit with probability `flip_prob`; draws only when
/// `flip_prob > 0`.
pub fn flip_readout<R: Rng + ?Sized>(outcome: u8, flip_prob: f64, rng: &mut R) -> u8 {
    if flip_prob > 0.0 && rng.random::<f64>() < flip_prob {
        outcome ^ 1
    } else {
        outcome
    }
}

/// `E[sin²((θ + ε)/2)]` for `ε ~ Normal(0, sigma²)`: `½ − ½·e^(−σ²/2)·cos θ`.
pub fn jittered_accept_probability(theta: f64, sigma: f64) -> f64 {
    0.5 - 0.5 * (-sigma * sigma / 2.0).exp() * theta.cos()
}

/// Probability of reading `1` once the readout flip is applied.
pub fn flipped_probability(prob_one: f64, flip_prob: f64) -> f64 {
    prob_one * (1.0 - flip_prob) + (1.0 - prob_one) * flip_prob
}

/// A configured channel. Immutable; randomness is supplied per call.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Channel {
    pub noise: NoiseModel,
    pub adversary: AdversaryConfig,
}

impl Channel {
    pub fn new(noise: NoiseModel, adversary: AdversaryConfig) -> Self {
        Channel { noise, adversary }
    }

    pub fn ideal() -> Self {
        Channel::default()
    }

    pub fn transmit<R: Rng + ?Sized>(
        &self,
        state: QubitState,
        params: &GroupParams,
        rng: &mut R,
    ) -> Result<(QubitState, Option<EveRecord>)> {
        let (state, eve) = match self.adversary.strategy {
            Strategy::None => (transmit_ideal(state), None),
            Strategy::InterceptResend => {
                let (forwarded, record) = eve_intercept_resend(state, params, rng)?;
                (forwarded, Some(record))
            }
        };
        Ok((transmit_noisy(state, &self.noise, rng), eve))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::prob_one;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn p7() -> GroupParams {
        GroupParams::new(7, 3).unwrap()
    }

    #[test]
    fn noise_validation() {
        assert!(NoiseModel::new(-0.1, 0.0).is_err());
        assert!(NoiseModel::new(f64::NAN, 0.0).is_err());
        assert!(NoiseModel::new(0.1, 1.5).is_err());
        assert!(NoiseModel::new(0.1, -0.01).is_err());
        assert!(NoiseModel::new(0.0, 1.0).is_ok());
        assert!(serde_json::from_str::<NoiseModel>(r#"{"sigma":-1.0,"flip_prob":0.0}"#).is_err());
    }

    #[test]
    fn ideal_is_identity() {
        let psi = rx(new_qubit(), Angle::new(1.234).unwrap());
        assert_eq!(transmit_ideal(psi).to_array(), psi.to_array());
        assert_eq!(transmit_ideal(new_qubit()), new_qubit());
    }

    #[test]
    fn zero_noise_matches_ideal_bitwise() {
        let psi = rx(new_qubit(), Angle::new(2.5).unwrap());
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(1);
        let noisy = transmit_noisy(psi, &NoiseModel::none(), &mut a);
        assert_eq!(noisy.to_array().map(f64::to_bits), psi.to_array().map(f64::to_bits));
        assert_eq!(flip_readout(1, 0.0, &mut a), 1);
        // no randomness consumed
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn noise_closed_form_point() {
        let expected = jittered_accept_probability(PI, 0.1);
        assert!((expected - 0.9975062395963412).abs() <= 1e-12);
        assert!((jittered_accept_probability(PI, 1e3) - 0.5).abs() <= 1e-12);
        assert!((jittered_accept_probability(0.3, 0.0) - (0.15f64).sin().powi(2)).abs() <= 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let noise = NoiseModel::new(0.1, 0.0).unwrap();
        let flipped = rx(new_qubit(), Angle::new(PI).unwrap());
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| prob_one(&transmit_noisy(flipped, &noise, &mut rng)))
            .sum::<f64>()
            / n as f64;
        assert!((mean - expected).abs() < 5e-4, "{mean}");
    }

    #[test]
    fn channel_outputs_stay_normalized() {
        let params = p7();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let channel = Channel::new(
            NoiseModel::new(0.7, 0.1).unwrap(),
            AdversaryConfig::intercept_resend(),
        );
        for v in 0..1000u64 {
            let psi = g_gate(new_qubit(), v, 7).unwrap();
            let (out, eve) = channel.transmit(psi, &params, &mut rng).unwrap();
            assert!((out.norm_sqr() - 1.0).abs() <= 1e-12);
            assert!(eve.unwrap().measured <= 1);
        }
    }

    #[test]
    fn eve_forwards_her_guess() {
        let params = p7();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let honest = g_gate(new_qubit(), 3, 7).unwrap();
            let (forwarded, log) = eve_intercept_resend(honest, &params, &mut rng).unwrap();
            assert!(log.measured <= 1);
            assert_eq!(log.guess_commitment, params.pow_g(log.guess_nonce));
            let expected = g_gate(new_qubit(), log.guess_commitment, 7).unwrap();
            assert_eq!(forwarded, expected);
            assert_eq!(
                forwarded.max_component_diff(&honest) <= 1e-15,
                log.guess_commitment == 3
            );
        }
    }

    #[test]
    fn eve_guess_matches_honest_with_probability_one_over_q() {
        // Exhaustive over the guess space: exactly one r' reproduces each t.
        for p in [5u64, 7, 11, 13] {
            let params = GroupParams::with_first_root(p).unwrap();
            let q = params.order();
            for r in 0..q {
                let t = params.pow_g(r);
                let honest = g_gate(new_qubit(), t, p).unwrap();
                let hits = (0..q)
                    .filter(|&guess| g_gate(new_qubit(), params.pow_g(guess), p).unwrap() == honest)
                    .count();
                assert_eq!(hits, 1);
            }
        }
    }

    #[test]
    fn adversary_none_is_pass_through() {
        let params = p7();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = g_gate(new_qubit(), 5, 7).unwrap();
        let (out, eve) = Channel::ideal().transmit(psi, &params, &mut rng).unwrap();
        assert_eq!(out, psi);
        assert!(eve.is_none());
    }

    #[test]
    fn flip_mixture() {
        assert_eq!(flipped_probability(1.0, 0.0), 1.0);
        assert_eq!(flipped_probability(1.0, 1.0), 0.0);
        assert!((flipped_probability(0.8, 0.25) - 0.65).abs() < 1e-15);
    }
}
