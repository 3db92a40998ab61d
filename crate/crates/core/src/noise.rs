//! Single-qubit noise on the measured wire.
//!
//! Two channels act on wire 1: a Pauli bit-flip on the encoded state (an
//! extra `σ_C` with `P{C=0} = 1−3p`, `P{C=j} = p` otherwise) and a coherent
//! over-rotation after the classifier circuit, `exp(−i(μ+ε)/2 · σ_{C′})` with
//! `ε ~ N(0, τ²)` and axis masses `(1−3q, q, q, q)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::statevec::SingleQubitGate;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Bit-flip probability above which the shrinkage factor `1 − 4p` stops
/// being positive.
pub const SIGN_THRESHOLD: f64 = 0.25;

/// `σ_j`, with `σ_0 = I₂`.
pub fn pauli_gate(j: usize) -> Result<SingleQubitGate> {
    let m = match j {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -I], [I, ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => return Err(Error::Index(format!("Pauli index {j} outside 0..=3"))),
    };
    Ok(SingleQubitGate::from_matrix_unchecked(m))
}

/// `cos(angle/2)·I − i·sin(angle/2)·σ_axis`; axis 0 yields `I₂` (the
/// operator would only be a global phase).
pub fn coherent_gate(axis: usize, angle: f64) -> Result<SingleQubitGate> {
    if axis == 0 {
        return Ok(SingleQubitGate::identity());
    }
    let sigma = pauli_gate(axis)?;
    let (s, c) = (angle / 2.0).sin_cos();
    let p = sigma.matrix();
    let mut m = [[ZERO; 2]; 2];
    for (r, row) in m.iter_mut().enumerate() {
        for (col, out) in row.iter_mut().enumerate() {
            let id = if r == col { ONE } else { ZERO };
            *out = id * c - I * s * p[r][col];
        }
    }
    Ok(SingleQubitGate::from_matrix_unchecked(m))
}

fn check_probability(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0 / 3.0).contains(&value) {
        return Err(Error::InvalidParameter(format!(
            "{name} = {value} outside [0, 1/3]"
        )));
    }
    Ok(())
}

/// Index in `0..4` drawn with masses `(1−3w, w, w, w)` from one uniform.
fn sample_four_way<R: Rng + ?Sized>(w: f64, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let t0 = 1.0 - 3.0 * w;
    if u < t0 {
        0
    } else if u < t0 + w {
        1
    } else if u < t0 + 2.0 * w {
        2
    } else {
        3
    }
}

/// Pauli bit-flip channel on the encoded state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BitflipChannel {
    p: f64,
}

impl BitflipChannel {
    pub fn new(p: f64) -> Result<Self> {
        check_probability("p", p)?;
        if p >= SIGN_THRESHOLD {
            log::warn!("p = {p} ≥ 1/4: the shrinkage factor 1 − 4p is not positive");
        }
        Ok(Self { p })
    }

    pub fn noiseless() -> Self {
        Self { p: 0.0 }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `1 − 4p`.
    pub fn shrinkage(&self) -> f64 {
        1.0 - 4.0 * self.p
    }

    pub fn preserves_sign(&self) -> bool {
        self.p < SIGN_THRESHOLD
    }

    /// Outcome masses `(1−3p, p, p, p)`.
    pub fn weights(&self) -> [f64; 4] {
        [1.0 - 3.0 * self.p, self.p, self.p, self.p]
    }

    /// Draws the Pauli index `C`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_four_way(self.p, rng)
    }

    /// The channel as four weighted Pauli gates `(1−3p, I), (p, σ₁), …`.
    pub fn enumerate(&self) -> [(f64, SingleQubitGate); 4] {
        let w = self.weights();
        std::array::from_fn(|j| (w[j], pauli_gate(j).expect("index in range")))
    }
}

/// Coherent over-rotation with Gaussian angle jitter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoherentChannel {
    mu: f64,
    tau: f64,
    q: f64,
}

impl CoherentChannel {
    pub fn new(mu: f64, tau: f64, q: f64) -> Result<Self> {
        if !(-PI..=PI).contains(&mu) {
            return Err(Error::InvalidParameter(format!("mu = {mu} outside [-π, π]")));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau = {tau} must be ≥ 0")));
        }
        check_probability("q", q)?;
        Ok(Self { mu, tau, q })
    }

    pub fn noiseless() -> Self {
        Self {
            mu: 0.0,
            tau: 0.0,
            q: 0.0,
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn axis_weights(&self) -> [f64; 4] {
        [1.0 - 3.0 * self.q, self.q, self.q, self.q]
    }

    /// Draws `(C′, ε)`; the axis and the jitter are independent.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let axis = sample_four_way(self.q, rng);
        let z: f64 = rng.sample(StandardNormal);
        (axis, self.tau * z)
    }
}

/// Both channels acting on wire 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseModel {
    pub bitflip: BitflipChannel,
    pub coherent: CoherentChannel,
}

impl NoiseModel {
    pub fn new(p: f64, q: f64, mu: f64, tau: f64) -> Result<Self> {
        Ok(Self {
            bitflip: BitflipChannel::new(p)?,
            coherent: CoherentChannel::new(mu, tau, q)?,
        })
    }

    pub fn noiseless() -> Self {
        Self {
            bitflip: BitflipChannel::noiseless(),
            coherent: CoherentChannel::noiseless(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> NoiseRealization {
        let pauli_index = self.bitflip.sample(rng);
        let (axis_index, jitter) = self.coherent.sample(rng);
        NoiseRealization {
            pauli_index,
            axis_index,
            jitter,
        }
    }
}

/// One draw of `(C, C′, ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseRealization {
    pub pauli_index: usize,
    pub axis_index: usize,
    pub jitter: f64,
}

impl NoiseRealization {
    /// The encoder-side gate `σ_C`.
    pub fn encoder_gate(&self) -> SingleQubitGate {
        pauli_gate(self.pauli_index).expect("sampled index in range")
    }

    /// The circuit-side gate `exp(−i(μ+ε)/2 · σ_{C′})`.
    pub fn circuit_gate(&self, mu: f64) -> SingleQubitGate {
        coherent_gate(self.axis_index, mu + self.jitter).expect("sampled index in range")
    }
}

/// `(E[cos(μ+ε)], E[sin(μ+ε)])` for `ε ~ N(0, τ²)`.
pub fn gaussian_trig_expectations(mu: f64, tau: f64) -> (f64, f64) {
    let damp = (-0.5 * tau * tau).exp();
    (mu.cos() * damp, mu.sin() * damp)
}
