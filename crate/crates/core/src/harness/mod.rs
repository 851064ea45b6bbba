//! Multi-round experiments, acceptance statistics and identity verdicts.
//!
//! Round `i` of an experiment draws all of its randomness from its own stream,
//! a `ChaCha8Rng` seeded (via `SeedableRng::seed_from_u64`) with
//! [`round_seed`]`(master_seed, i)`. Within a round the draws happen in
//! protocol order: nonce, Eve's measurement and guess (if active), channel
//! jitter (if `sigma > 0`), challenge, verifier measurement, readout flip (if
//! `flip_prob > 0`).

pub mod oracle;
pub mod stats;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{AdversaryConfig, Channel, NoiseModel, Strategy};
use crate::error::{Error, Result};
use crate::groupmath::GroupParams;
use crate::qzkp::{run_round_pinned, Mode, ProverSession, RoundOutcome, RoundPins, RoundRecord, VerifierSession};
use crate::schnorr::KeyPair;

pub use oracle::{analytic_acceptance, ENUMERATION_CAP};
pub use stats::{wilson_interval, Z_95};

/// SplitMix64 increment.
pub const SEED_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
/// SplitMix64 finalizer multipliers.
pub const SEED_MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
pub const SEED_MIX_2: u64 = 0x94D0_49BB_1331_11EB;

/// Default identity-acceptance threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.99;

/// Seed of round `index`: the `(index + 1)`-th SplitMix64 output from state
/// `master_seed`.
///
/// ```text
/// z = master_seed + (index + 1) * 0x9E3779B97F4A7C15      (mod 2^64)
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB
/// z ^ (z >> 31)
/// ```
pub fn round_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(SEED_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(SEED_MIX_1);
    z = (z ^ (z >> 27)).wrapping_mul(SEED_MIX_2);
    z ^ (z >> 31)
}

/// The random stream for round `index`.
pub fn round_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(round_seed(master_seed, index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    IdentityAccepted,
    IdentityRejected,
}

impl Verdict {
    /// Closed threshold: a rate exactly at `threshold` is accepted.
    pub fn from_rate(rate: f64, threshold: f64) -> Self {
        if rate >= threshold {
            Verdict::IdentityAccepted
        } else {
            Verdict::IdentityRejected
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: GroupParams,
    /// The prover's secret, known to the harness because it runs both roles.
    pub x: u64,
    pub rounds: u64,
    pub mode: Mode,
    pub noise: NoiseModel,
    pub adversary: AdversaryConfig,
    pub master_seed: u64,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "RoundPins::is_empty")]
    pub pins: RoundPins,
    /// Keep every [`RoundRecord`] in the report.
    #[serde(default)]
    pub record_rounds: bool,
}

impl ExperimentConfig {
    /// Ideal channel, no adversary, default threshold, no pins.
    pub fn new(params: GroupParams, x: u64, rounds: u64, mode: Mode, master_seed: u64) -> Self {
        ExperimentConfig {
            params,
            x,
            rounds,
            mode,
            noise: NoiseModel::none(),
            adversary: AdversaryConfig::none(),
            master_seed,
            threshold: DEFAULT_THRESHOLD,
            pins: RoundPins::default(),
            record_rounds: false,
        }
    }

    pub fn validate(&self) -> Result<KeyPair> {
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("rounds must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidParameter(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        let q = self.params.order();
        for (what, pin) in [("nonce", self.pins.nonce), ("challenge", self.pins.challenge)] {
            if let Some(v) = pin {
                if v >= q {
                    return Err(Error::InvalidParameter(format!(
                        "pinned {what} = {v} outside [0, {}]",
                        q - 1
                    )));
                }
            }
        }
        KeyPair::from_secret(&self.params, self.x)
    }
}

/// Summary of Eve's activity over an experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryLog {
    pub strategy: Strategy,
    pub intercepts: u64,
    /// Rounds where her guess `g^r'` equalled the honest `t`.
    pub correct_guesses: u64,
    pub measured_ones: u64,
    /// Her one measured bit per round, in round order.
    pub measured_bits: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub accepted_count: u64,
    pub rounds: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_expectation: Option<f64>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AdversaryLog>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_round: Option<Vec<RoundRecord>>,
}

/// Fail-safe verdict: monotone in the acceptance rate.
pub fn detect_eavesdropper(report: &ExperimentReport, threshold: f64) -> Verdict {
    Verdict::from_rate(report.rate, threshold)
}

/// Runs the experiment described by `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(config, |_, _| {})
}

/// [`run_experiment`], additionally handing every round to `inspect`.
///
/// Every round's transcript is audited; a round that does not consist of one
/// quantum and two classical transmissions aborts the experiment.
pub fn run_experiment_with<F>(config: &ExperimentConfig, mut inspect: F) -> Result<ExperimentReport>
where
    F: FnMut(u64, &RoundOutcome),
{
    let keys = config.validate()?;
    let params = config.params;
    let channel = Channel::new(config.noise, config.adversary);
    let mut prover = ProverSession::new(params, keys);
    let mut verifier = VerifierSession::new(params, keys.public(), config.mode)?
        .with_readout_flip(config.noise.flip_prob())?;

    let mut accepted = 0u64;
    let mut per_round = config.record_rounds.then(Vec::new);
    let mut eve_log = config.adversary.is_active().then(|| AdversaryLog {
        strategy: config.adversary.strategy,
        intercepts: 0,
        correct_guesses: 0,
        measured_ones: 0,
        measured_bits: String::new(),
    });

    for index in 0..config.rounds {
        let mut rng = round_rng(config.master_seed, index);
        let outcome = run_round_pinned(&mut prover, &mut verifier, &channel, config.pins, &mut rng)?;
        outcome.transcript.audit()?;
        if outcome.record.accepted {
            accepted += 1;
        }
        if let (Some(log), Some(eve)) = (eve_log.as_mut(), outcome.eve.as_ref()) {
            log.intercepts += 1;
            log.measured_ones += eve.measured as u64;
            log.measured_bits.push(if eve.measured == 1 { '1' } else { '0' });
            if Some(eve.guess_commitment) == outcome.record.t_honest {
                log.correct_guesses += 1;
            }
        }
        if let Some(records) = per_round.as_mut() {
            records.push(outcome.record);
        }
        inspect(index, &outcome);
    }

    let rate = accepted as f64 / config.rounds as f64;
    let (ci_low, ci_high) = wilson_interval(accepted, config.rounds, Z_95)?;
    let oracle_expectation = if params.modulus() <= ENUMERATION_CAP {
        Some(analytic_acceptance(
            &params,
            config.x,
            config.mode,
            &config.noise,
            &config.adversary,
            config.pins,
        )?)
    } else {
        None
    };
    Ok(ExperimentReport {
        config: config.clone(),
        accepted_count: accepted,
        rounds: config.rounds,
        rate,
        ci_low,
        ci_high,
        oracle_expectation,
        verdict: Verdict::from_rate(rate, config.threshold),
        adversary: eve_log,
        per_round,
    })
}
