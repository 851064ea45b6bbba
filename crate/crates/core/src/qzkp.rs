//! The single-qubit identification protocol.
//!
//! One round:
//!
//! 1. P draws `r`, computes `t = g^r mod p` and sends the qubit `G_p(t)|0⟩`.
//! 2. V stores the qubit and sends a random challenge `c`.
//! 3. P answers `s = r + c·x`.
//! 4. V completes the rotation on the held qubit, measures in z, and accepts
//!    the round iff the outcome is `1`.
//!
//! Step 4 comes in two flavours, selected by [`Mode`]:
//!
//! * [`Mode::Literal`] applies `G_p(Y^c mod p)` and then `G_p(p - (g^s mod p))`.
//!   Rotations add angles while the Schnorr relation multiplies residues, so
//!   honest rounds are accepted with probability `sin²(θ/2)` for
//!   `θ = (t + Y^c + p - g^s)·π/p`, which is `1` only when that sum is `p`.
//! * [`Mode::Corrected`] recovers `t̂ = g^s · (Y^c)^-1 mod p` classically and
//!   applies `G_p(p - t̂)`. For an honest prover `t̂ = t`, the total angle is
//!   exactly `π` and every honest round measures `1`.
//!
//! Serialized [`Message::Commit`] values carry the amplitudes of the qubit. That
//! is a simulation artifact: on a real quantum channel an unknown state cannot
//! be written down, only transmitted.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{flip_readout, Channel, EveRecord};
use crate::error::{Error, Result};
use crate::groupmath::GroupParams;
use crate::qsim::{g_gate, measure_z, new_qubit, QubitState};
use crate::schnorr::{self, Commitment, KeyPair};

/// Verification mode for step 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Literal,
    Corrected,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Literal => "literal",
            Mode::Corrected => "corrected",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(Mode::Literal),
            "corrected" => Ok(Mode::Corrected),
            other => Err(Error::InvalidParameter(format!(
                "unknown mode {other:?} (expected literal or corrected)"
            ))),
        }
    }
}

/// Wire messages. Serialized one JSON object per line with `type` first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Message {
    /// The quantum message `G_p(t)|0⟩`.
    Commit { amps: QubitState },
    Challenge { c: u64 },
    Response { s: u64 },
    /// The verifier's local verdict; not a transmission.
    Decision {
        outcome: u8,
        accepted: bool,
        mode: Mode,
    },
}

impl Message {
    pub fn is_quantum(&self) -> bool {
        matches!(self, Message::Commit { .. })
    }

    pub fn is_classical_transmission(&self) -> bool {
        matches!(self, Message::Challenge { .. } | Message::Response { .. })
    }
}

/// Everything exchanged in one round, in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub messages: Vec<Message>,
}

impl Transcript {
    /// `(quantum, classical)` transmission counts.
    pub fn transmission_counts(&self) -> (usize, usize) {
        let quantum = self.messages.iter().filter(|m| m.is_quantum()).count();
        let classical = self
            .messages
            .iter()
            .filter(|m| m.is_classical_transmission())
            .count();
        (quantum, classical)
    }

    /// A round must consist of exactly one quantum and two classical transmissions.
    pub fn audit(&self) -> Result<()> {
        match self.transmission_counts() {
            (1, 2) => Ok(()),
            (quantum, classical) => Err(Error::TranscriptViolation { quantum, classical }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProverPhase {
    Idle,
    Committed,
    Responded,
}

impl ProverPhase {
    fn name(self) -> &'static str {
        match self {
            ProverPhase::Idle => "idle",
            ProverPhase::Committed => "committed",
            ProverPhase::Responded => "responded",
        }
    }
}

/// Prover state machine: `idle → committed → responded`, then [`reset`](Self::reset).
#[derive(Debug, Clone)]
pub struct ProverSession {
    params: GroupParams,
    keys: KeyPair,
    nonce: Option<u64>,
    commitment: Option<u64>,
    phase: ProverPhase,
}

impl ProverSession {
    pub fn new(params: GroupParams, keys: KeyPair) -> Self {
        ProverSession {
            params,
            keys,
            nonce: None,
            commitment: None,
            phase: ProverPhase::Idle,
        }
    }

    pub fn phase(&self) -> ProverPhase {
        self.phase
    }

    pub fn params(&self) -> &GroupParams {
        &self.params
    }

    /// `Y`, the prover's public value.
    pub fn public(&self) -> u64 {
        self.keys.public()
    }

    /// The current round's `t`, for white-box logging.
    pub fn commitment(&self) -> Option<u64> {
        self.commitment
    }

    /// Step 1 with a fresh uniform nonce.
    pub fn commit<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<QubitState> {
        self.expect_phase(ProverPhase::Idle, "commit")?;
        let commitment = schnorr::commit(&self.params, rng);
        self.finish_commit(commitment)
    }

    /// Step 1 with a caller-chosen nonce in `[0, q - 1]`.
    pub fn commit_with_nonce(&mut self, nonce: u64) -> Result<QubitState> {
        self.expect_phase(ProverPhase::Idle, "commit")?;
        if nonce >= self.params.order() {
            return Err(Error::InvalidParameter(format!(
                "nonce r = {nonce} outside [0, {}]",
                self.params.order() - 1
            )));
        }
        let commitment = schnorr::commit_with_nonce(&self.params, nonce);
        self.finish_commit(commitment)
    }

    fn finish_commit(&mut self, commitment: Commitment) -> Result<QubitState> {
        let state = g_gate(new_qubit(), commitment.t, self.params.modulus())?;
        self.nonce = Some(commitment.nonce);
        self.commitment = Some(commitment.t);
        self.phase = ProverPhase::Committed;
        Ok(state)
    }

    /// Step 3. The nonce is erased once used.
    pub fn respond(&mut self, c: u64) -> Result<u64> {
        self.expect_phase(ProverPhase::Committed, "respond")?;
        let nonce = self.nonce.take().ok_or(Error::ProtocolOrder {
            op: "respond",
            phase: "without a nonce",
        })?;
        let s = schnorr::respond(self.keys.secret(), nonce, c)?;
        self.phase = ProverPhase::Responded;
        Ok(s)
    }

    pub fn reset(&mut self) {
        self.nonce = None;
        self.commitment = None;
        self.phase = ProverPhase::Idle;
    }

    fn expect_phase(&self, want: ProverPhase, op: &'static str) -> Result<()> {
        if self.phase == want {
            Ok(())
        } else {
            Err(Error::ProtocolOrder {
                op,
                phase: self.phase.name(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifierPhase {
    Idle,
    Challenged,
    Decided,
}

impl VerifierPhase {
    fn name(self) -> &'static str {
        match self {
            VerifierPhase::Idle => "idle",
            VerifierPhase::Challenged => "challenged",
            VerifierPhase::Decided => "decided",
        }
    }
}

/// Result of step 4 as seen by the verifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub c: u64,
    pub s: u64,
    pub outcome: u8,
    pub accepted: bool,
    pub mode: Mode,
    /// Sum of the (reduced) encoding values the verifier applied on top of the
    /// received qubit.
    pub completion_steps: u64,
}

/// Verifier state machine: `idle → challenged → decided`, then [`reset`](Self::reset).
///
/// Holds only public data: the group, `Y`, the received qubit and `c`.
#[derive(Debug, Clone)]
pub struct VerifierSession {
    params: GroupParams,
    public: u64,
    mode: Mode,
    readout_flip: f64,
    held: Option<QubitState>,
    challenge: Option<u64>,
    phase: VerifierPhase,
}

impl VerifierSession {
    pub fn new(params: GroupParams, public: u64, mode: Mode) -> Result<Self> {
        if !(1..params.modulus()).contains(&public) {
            return Err(Error::InvalidParameter(format!(
                "public value Y = {public} outside [1, {}]",
                params.modulus() - 1
            )));
        }
        Ok(VerifierSession {
            params,
            public,
            mode,
            readout_flip: 0.0,
            held: None,
            challenge: None,
            phase: VerifierPhase::Idle,
        })
    }

    /// Probability that the verifier's measurement bit is flipped on readout.
    pub fn with_readout_flip(mut self, flip_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&flip_prob) {
            return Err(Error::InvalidParameter(format!(
                "flip probability {flip_prob} outside [0, 1]"
            )));
        }
        self.readout_flip = flip_prob;
        Ok(self)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn phase(&self) -> VerifierPhase {
        self.phase
    }

    pub fn held_state(&self) -> Option<&QubitState> {
        self.held.as_ref()
    }

    /// Step 2 with a uniform challenge.
    pub fn challenge<R: Rng + ?Sized>(&mut self, received: QubitState, rng: &mut R) -> Result<u64> {
        self.expect_phase(VerifierPhase::Idle, "challenge")?;
        let c = schnorr::challenge(&self.params, rng);
        Ok(self.store(received, c))
    }

    /// Step 2 with a caller-chosen challenge in `[0, q - 1]`.
    pub fn challenge_with(&mut self, received: QubitState, c: u64) -> Result<u64> {
        self.expect_phase(VerifierPhase::Idle, "challenge")?;
        if c >= self.params.order() {
            return Err(Error::InvalidParameter(format!(
                "challenge c = {c} outside [0, {}]",
                self.params.order() - 1
            )));
        }
        Ok(self.store(received, c))
    }

    fn store(&mut self, received: QubitState, c: u64) -> u64 {
        self.held = Some(received);
        self.challenge = Some(c);
        self.phase = VerifierPhase::Challenged;
        c
    }

    /// Step 4 in the session's mode.
    pub fn decide<R: Rng + ?Sized>(&mut self, s: u64, rng: &mut R) -> Result<Decision> {
        match self.mode {
            Mode::Literal => self.decide_literal(s, rng),
            Mode::Corrected => self.decide_corrected(s, rng),
        }
    }

    /// Applies `G_p(Y^c mod p)` then `G_p(p - (g^s mod p))` and measures.
    pub fn decide_literal<R: Rng + ?Sized>(&mut self, s: u64, rng: &mut R) -> Result<Decision> {
        let (held, c) = self.take_round(Mode::Literal)?;
        let p = self.params.modulus();
        let yc = self.params.pow(self.public, c);
        let gs = self.params.pow_g(s);
        let after_y = g_gate(held, yc, p)?;
        let completed = g_gate(after_y, p - gs, p)?;
        Ok(self.measure(completed, c, s, (yc % p) + (p - gs) % p, rng))
    }

    /// Recovers `t̂ = g^s · (Y^c)^-1 mod p`, applies `G_p(p - t̂)` and measures.
    pub fn decide_corrected<R: Rng + ?Sized>(&mut self, s: u64, rng: &mut R) -> Result<Decision> {
        let (held, c) = self.take_round(Mode::Corrected)?;
        let p = self.params.modulus();
        let yc = self.params.pow(self.public, c);
        let t_hat = self.params.mul(self.params.pow_g(s), self.params.inv(yc)?);
        let completion = (p - t_hat) % p;
        let completed = g_gate(held, completion, p)?;
        Ok(self.measure(completed, c, s, completion, rng))
    }

    fn take_round(&mut self, requested: Mode) -> Result<(QubitState, u64)> {
        if self.mode != requested {
            return Err(Error::ModeMismatch {
                session: self.mode.as_str(),
                requested: requested.as_str(),
            });
        }
        if self.phase != VerifierPhase::Challenged {
            return Err(Error::ProtocolOrder {
                op: "decide",
                phase: self.phase.name(),
            });
        }
        let held = self.held.take().ok_or(Error::ProtocolOrder {
            op: "decide",
            phase: "without a held qubit",
        })?;
        let c = self.challenge.ok_or(Error::ProtocolOrder {
            op: "decide",
            phase: "without a challenge",
        })?;
        Ok((held, c))
    }

    fn measure<R: Rng + ?Sized>(
        &mut self,
        completed: QubitState,
        c: u64,
        s: u64,
        completion_steps: u64,
        rng: &mut R,
    ) -> Decision {
        let (outcome, _) = measure_z(&completed, rng);
        let outcome = flip_readout(outcome, self.readout_flip, rng);
        self.phase = VerifierPhase::Decided;
        Decision {
            c,
            s,
            outcome,
            accepted: outcome == 1,
            mode: self.mode,
            completion_steps,
        }
    }

    pub fn reset(&mut self) {
        self.held = None;
        self.challenge = None;
        self.phase = VerifierPhase::Idle;
    }

    fn expect_phase(&self, want: VerifierPhase, op: &'static str) -> Result<()> {
        if self.phase == want {
            Ok(())
        } else {
            Err(Error::ProtocolOrder {
                op,
                phase: self.phase.name(),
            })
        }
    }
}

/// One protocol round as logged by a harness that runs both roles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// Honest commitment `t` (white-box).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_honest: Option<u64>,
    pub c: u64,
    pub s: u64,
    /// `s mod q`, for analysis only.
    pub s_mod_q: u64,
    pub outcome: u8,
    pub accepted: bool,
    pub mode: Mode,
    /// Total rotation the honest qubit would receive, in radians (white-box).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_total: Option<f64>,
}

/// Optional white-box overrides for `r` and `c`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundPins {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonce: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub challenge: Option<u64>,
}

impl RoundPins {
    pub fn is_empty(&self) -> bool {
        self.nonce.is_none() && self.challenge.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub record: RoundRecord,
    pub transcript: Transcript,
    pub eve: Option<EveRecord>,
}

/// Runs one full round through `channel`. Both sessions must be idle; both are
/// idle again afterwards, including on error.
pub fn run_round<R: Rng + ?Sized>(
    prover: &mut ProverSession,
    verifier: &mut VerifierSession,
    channel: &Channel,
    rng: &mut R,
) -> Result<RoundOutcome> {
    run_round_pinned(prover, verifier, channel, RoundPins::default(), rng)
}

/// [`run_round`] with optional fixed `r` and `c`.
pub fn run_round_pinned<R: Rng + ?Sized>(
    prover: &mut ProverSession,
    verifier: &mut VerifierSession,
    channel: &Channel,
    pins: RoundPins,
    rng: &mut R,
) -> Result<RoundOutcome> {
    if prover.phase() != ProverPhase::Idle {
        return Err(Error::ProtocolOrder {
            op: "start a round",
            phase: prover.phase().name(),
        });
    }
    if verifier.phase() != VerifierPhase::Idle {
        return Err(Error::ProtocolOrder {
            op: "start a round",
            phase: verifier.phase().name(),
        });
    }
    let result = round_steps(prover, verifier, channel, pins, rng);
    prover.reset();
    verifier.reset();
    result
}

fn round_steps<R: Rng + ?Sized>(
    prover: &mut ProverSession,
    verifier: &mut VerifierSession,
    channel: &Channel,
    pins: RoundPins,
    rng: &mut R,
) -> Result<RoundOutcome> {
    let params = *prover.params();
    let p = params.modulus();
    let mut transcript = Transcript::default();

    let sent = match pins.nonce {
        Some(r) => prover.commit_with_nonce(r)?,
        None => prover.commit(rng)?,
    };
    transcript.messages.push(Message::Commit { amps: sent });
    let t_honest = prover.commitment();

    let (received, eve) = channel.transmit(sent, &params, rng)?;

    let c = match pins.challenge {
        Some(c) => verifier.challenge_with(received, c)?,
        None => verifier.challenge(received, rng)?,
    };
    transcript.messages.push(Message::Challenge { c });

    let s = prover.respond(c)?;
    transcript.messages.push(Message::Response { s });

    let decision = verifier.decide(s, rng)?;
    transcript.messages.push(Message::Decision {
        outcome: decision.outcome,
        accepted: decision.accepted,
        mode: decision.mode,
    });

    let record = RoundRecord {
        t_honest,
        c,
        s,
        s_mod_q: s % params.order(),
        outcome: decision.outcome,
        accepted: decision.accepted,
        mode: decision.mode,
        theta_total: t_honest.map(|t| (t + decision.completion_steps) as f64 * PI / p as f64),
    };
    Ok(RoundOutcome {
        record,
        transcript,
        eve,
    })
}
