//! Classical Schnorr identification: commitment `t = g^r`, challenge `c`,
//! response `s = r + c·x`, and the check `g^s ≡ t · Y^c (mod p)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groupmath::GroupParams;

/// Secret exponent `x` and public value `Y = g^x mod p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyPair {
    secret: u64,
    public: u64,
}

impl KeyPair {
    /// Draws `x` uniformly from `[1, q - 1]`.
    pub fn generate<R: Rng + ?Sized>(params: &GroupParams, rng: &mut R) -> Self {
        let q = params.order();
        // p >= 3 so q >= 2; for p = 3 the only choice is x = 1.
        let secret = if q == 2 { 1 } else { rng.random_range(1..q) };
        KeyPair::from_secret_unchecked(params, secret)
    }

    /// Builds a key pair from a chosen secret, which must lie in `[1, q - 1]`.
    pub fn from_secret(params: &GroupParams, secret: u64) -> Result<Self> {
        let q = params.order();
        if secret == 0 || secret >= q {
            return Err(Error::InvalidParameter(format!(
                "secret x = {secret} outside [1, {}]",
                q - 1
            )));
        }
        Ok(KeyPair::from_secret_unchecked(params, secret))
    }

    fn from_secret_unchecked(params: &GroupParams, secret: u64) -> Self {
        KeyPair {
            secret,
            public: params.pow_g(secret),
        }
    }

    pub fn secret(&self) -> u64 {
        self.secret
    }

    /// `Y`.
    pub fn public(&self) -> u64 {
        self.public
    }
}

/// The prover's private nonce together with its public commitment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Commitment {
    pub nonce: u64,
    pub t: u64,
}

/// What a verifier sees of one classical round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalTranscript {
    pub t: u64,
    pub c: u64,
    pub s: u64,
}

/// Draws `r` uniformly from `[0, q - 1]` and commits to `t = g^r mod p`.
pub fn commit<R: Rng + ?Sized>(params: &GroupParams, rng: &mut R) -> Commitment {
    commit_with_nonce(params, rng.random_range(0..params.order()))
}

pub fn commit_with_nonce(params: &GroupParams, nonce: u64) -> Commitment {
    Commitment {
        nonce,
        t: params.pow_g(nonce),
    }
}

/// Uniform challenge in `[0, q - 1]`.
pub fn challenge<R: Rng + ?Sized>(params: &GroupParams, rng: &mut R) -> u64 {
    rng.random_range(0..params.order())
}

/// `s = r + c·x`, with no modular reduction.
pub fn respond(secret: u64, nonce: u64, c: u64) -> Result<u64> {
    c.checked_mul(secret)
        .and_then(|cx| cx.checked_add(nonce))
        .ok_or(Error::Overflow("response s = r + c*x"))
}

/// Checks `g^s ≡ t · Y^c (mod p)`. Out-of-range residues verify as `false`.
pub fn verify_classical(params: &GroupParams, public: u64, t: u64, c: u64, s: u64) -> bool {
    let p = params.modulus();
    if !(1..p).contains(&t) || !(1..p).contains(&public) {
        return false;
    }
    params.pow_g(s) == params.mul(t, params.pow(public, c))
}

/// Runs one honest classical round with both roles.
pub fn run_classical<R: Rng + ?Sized>(
    params: &GroupParams,
    keys: &KeyPair,
    rng: &mut R,
) -> Result<(ClassicalTranscript, bool)> {
    let commitment = commit(params, rng);
    let c = challenge(params, rng);
    let s = respond(keys.secret(), commitment.nonce, c)?;
    let transcript = ClassicalTranscript {
        t: commitment.t,
        c,
        s,
    };
    let ok = verify_classical(params, keys.public(), transcript.t, c, s);
    Ok((transcript, ok))
}
