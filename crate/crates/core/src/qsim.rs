//! Single-qubit statevector simulation.
//!
//! The only gate the protocol needs is the x-axis rotation, in the matrix form
//!
//! ```text
//! Rx(θ) = | cos(θ/2)     -i sin(θ/2) |
//!         | -i sin(θ/2)   cos(θ/2)   |
//! ```
//!
//! and the encoding gate `G_p(v) = Rx((v mod p) · π / p)` built on top of it.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when accepting externally supplied amplitudes.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// A finite rotation angle in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Angle(f64);

impl Angle {
    pub fn new(theta: f64) -> Result<Self> {
        if theta.is_finite() {
            Ok(Angle(theta))
        } else {
            Err(Error::InvalidAngle(theta))
        }
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// The encoding angle `(v mod p) · π / p`.
    pub fn encoding(v: u64, p: u64) -> Result<Self> {
        if p < 3 {
            return Err(Error::ModulusTooSmall { got: p, min: 3 });
        }
        Ok(Angle((v % p) as f64 * PI / p as f64))
    }
}

/// Pure single-qubit state `alpha|0⟩ + beta|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct QubitState {
    alpha: Complex64,
    beta: Complex64,
}

impl Default for QubitState {
    fn default() -> Self {
        Self::zero()
    }
}

impl QubitState {
    /// `|0⟩`, the initial state of every fresh qubit.
    pub fn zero() -> Self {
        QubitState {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
        }
    }

    /// `|1⟩`.
    pub fn one() -> Self {
        QubitState {
            alpha: Complex64::new(0.0, 0.0),
            beta: Complex64::new(1.0, 0.0),
        }
    }

    /// Builds a state from amplitudes, rejecting anything not normalized within
    /// [`NORM_TOLERANCE`].
    pub fn from_amplitudes(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let state = QubitState { alpha, beta };
        let norm = state.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "state is not normalized: |alpha|^2 + |beta|^2 = {norm}"
            )));
        }
        Ok(state)
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }

    /// Probability of reading `1` under a z-basis measurement, `|beta|^2`.
    pub fn prob_one(&self) -> f64 {
        self.beta.norm_sqr()
    }

    /// Amplitudes in wire order `[alpha.re, alpha.im, beta.re, beta.im]`.
    pub fn to_array(&self) -> [f64; 4] {
        [self.alpha.re, self.alpha.im, self.beta.re, self.beta.im]
    }

    pub fn from_array(amps: [f64; 4]) -> Result<Self> {
        Self::from_amplitudes(
            Complex64::new(amps[0], amps[1]),
            Complex64::new(amps[2], amps[3]),
        )
    }

    /// Largest componentwise distance between two states' amplitudes.
    pub fn max_component_diff(&self, other: &QubitState) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<[f64; 4]> for QubitState {
    type Error = Error;

    fn try_from(amps: [f64; 4]) -> Result<Self> {
        QubitState::from_array(amps)
    }
}

impl From<QubitState> for [f64; 4] {
    fn from(state: QubitState) -> Self {
        state.to_array()
    }
}

/// Returns `|0⟩`.
pub fn new_qubit() -> QubitState {
    QubitState::zero()
}

/// Applies `Rx(theta)`.
pub fn rx(state: QubitState, theta: Angle) -> QubitState {
    let half = theta.radians() / 2.0;
    let (sin, cos) = half.sin_cos();
    let off = Complex64::new(0.0, -sin);
    QubitState {
        alpha: state.alpha * cos + off * state.beta,
        beta: off * state.alpha + state.beta * cos,
    }
}

/// Applies `Rx(theta)` for a raw radian value, rejecting non-finite angles.
pub fn rx_radians(state: QubitState, theta: f64) -> Result<QubitState> {
    Ok(rx(state, Angle::new(theta)?))
}

/// The encoding gate: `Rx((v mod p) · π / p)`.
///
/// `v` is an already-computed group value; nothing is exponentiated here.
pub fn g_gate(state: QubitState, v: u64, p: u64) -> Result<QubitState> {
    Ok(rx(state, Angle::encoding(v, p)?))
}

/// `|beta|^2`.
pub fn prob_one(state: &QubitState) -> f64 {
    state.prob_one()
}

/// Z-basis measurement.
///
/// Consumes exactly one uniform draw `u` in `[0, 1)`; the outcome is `1` iff
/// `u < |beta|^2`. Returns the outcome and the collapsed basis state.
pub fn measure_z<R: Rng + ?Sized>(state: &QubitState, rng: &mut R) -> (u8, QubitState) {
    let draw: f64 = rng.random();
    if draw < state.prob_one() {
        (1, QubitState::one())
    } else {
        (0, QubitState::zero())
    }
}
