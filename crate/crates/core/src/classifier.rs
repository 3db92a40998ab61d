//! Encoder, parameterized circuit and first-qubit margin classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{cnot, ry, rz};
use crate::noise::pauli_gate;
use crate::statevec::{basis_state, Circuit, SingleQubitGate, StateVector};
use num_complex::Complex64;

/// Binary class label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }

    pub fn from_i64(v: i64) -> Result<Self> {
        match v {
            -1 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            _ => Err(Error::InvalidParameter(format!("label {v} is not ±1"))),
        }
    }
}

/// `P{first qubit reads 1} − 1/2`, always in `[−1/2, 1/2]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct Margin(f64);

impl Margin {
    pub fn from_probability(p: f64) -> Self {
        Margin(p - 0.5)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `sign(m)` with the tie `m = 0` mapped to −1.
pub fn classify(margin: Margin) -> Label {
    if margin.value() > 0.0 {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// How classical features become a state.
#[derive(Clone, Debug, PartialEq)]
pub enum EncoderSpec {
    /// `⊗_k Ry(x_k)|0⟩`; feature `i` drives wire `wire_of_feature[i]`.
    Angle { wire_of_feature: Vec<usize> },
    /// The features are the interleaved `(re, im)` amplitudes of a state.
    RawState { n_qubits: usize },
}

impl EncoderSpec {
    /// Angle encoding with feature `i` on wire `i + 1`.
    pub fn angle(n_qubits: usize) -> Self {
        EncoderSpec::Angle {
            wire_of_feature: (1..=n_qubits).collect(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            EncoderSpec::Angle { wire_of_feature } => wire_of_feature.len(),
            EncoderSpec::RawState { n_qubits } => *n_qubits,
        }
    }
}

/// Encodes `x` according to `spec`.
pub fn encode(x: &[f64], spec: &EncoderSpec) -> Result<StateVector> {
    match spec {
        EncoderSpec::Angle { wire_of_feature } => {
            let n = wire_of_feature.len();
            if x.len() != n {
                return Err(Error::Size(format!(
                    "{} features for a {n}-qubit angle encoder",
                    x.len()
                )));
            }
            let mut seen = vec![false; n + 1];
            for &w in wire_of_feature {
                if w == 0 || w > n || std::mem::replace(&mut seen[w], true) {
                    return Err(Error::Index(format!(
                        "feature-to-wire map {wire_of_feature:?} is not a permutation"
                    )));
                }
            }
            let mut state = basis_state(n)?;
            for (&angle, &wire) in x.iter().zip(wire_of_feature) {
                state.apply_single_mut(&ry(angle), wire)?;
            }
            Ok(state)
        }
        EncoderSpec::RawState { n_qubits } => {
            let expected = 2usize
                .checked_shl(*n_qubits as u32)
                .ok_or_else(|| Error::Size(format!("n_qubits = {n_qubits}")))?;
            if x.len() != expected {
                return Err(Error::Size(format!(
                    "{} reals for a {n_qubits}-qubit raw state (expected {expected})",
                    x.len()
                )));
            }
            let amps = x
                .chunks_exact(2)
                .map(|p| Complex64::new(p[0], p[1]))
                .collect();
            StateVector::from_amplitudes(amps)
        }
    }
}

/// Number of rotation angles per wire.
pub const PARAMS_PER_WIRE: usize = 3;

/// `W(θ)`: a `Rz(α)·Ry(β)·Rz(γ)` unitary on every wire, optionally followed
/// by a list of CNOTs `(control, target)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ansatz {
    n_qubits: usize,
    entanglers: Vec<(usize, usize)>,
}

impl Ansatz {
    pub fn product(n_qubits: usize) -> Result<Self> {
        Self::with_entanglers(n_qubits, Vec::new())
    }

    pub fn with_entanglers(n_qubits: usize, entanglers: Vec<(usize, usize)>) -> Result<Self> {
        basis_state(n_qubits)?;
        for &(a, b) in &entanglers {
            if a == b || a == 0 || b == 0 || a > n_qubits || b > n_qubits {
                return Err(Error::Index(format!(
                    "CNOT placement ({a}, {b}) invalid for {n_qubits} wires"
                )));
            }
        }
        Ok(Self {
            n_qubits,
            entanglers,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        PARAMS_PER_WIRE * self.n_qubits
    }

    pub fn entanglers(&self) -> &[(usize, usize)] {
        &self.entanglers
    }

    pub fn is_product(&self) -> bool {
        self.entanglers.is_empty()
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::Shape {
                expected: self.n_params(),
                actual: theta.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn require_product(&self) -> Result<()> {
        if !self.is_product() {
            return Err(Error::Unsupported(
                "operation requires a product-form ansatz (no entangling gates)".into(),
            ));
        }
        Ok(())
    }

    /// `W_k(θ_k)` for each wire, in wire order.
    pub fn wire_unitaries(&self, theta: &[f64]) -> Result<Vec<SingleQubitGate>> {
        self.check_theta(theta)?;
        Ok(theta
            .chunks_exact(PARAMS_PER_WIRE)
            .map(|t| rz(t[0]) * ry(t[1]) * rz(t[2]))
            .collect())
    }

    pub fn circuit(&self, theta: &[f64]) -> Result<Circuit> {
        let mut circuit = Circuit::new();
        for (k, w) in self.wire_unitaries(theta)?.into_iter().enumerate() {
            circuit.push_single(w, k + 1);
        }
        for &pair in &self.entanglers {
            circuit.push_two(cnot(), pair);
        }
        Ok(circuit)
    }

    /// `W(θ)|ψ⟩`.
    pub fn apply(&self, theta: &[f64], state: &StateVector) -> Result<StateVector> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::Shape {
                expected: self.n_qubits,
                actual: state.n_qubits(),
            });
        }
        state.apply_circuit(&self.circuit(theta)?)
    }
}

/// `m_θ(ψ) = ⟨ψ|W†M₁W|ψ⟩ − 1/2`.
pub fn margin(ansatz: &Ansatz, theta: &[f64], state: &StateVector) -> Result<Margin> {
    let out = ansatz.apply(theta, state)?;
    Ok(Margin::from_probability(out.prob_first_qubit_one()?))
}

/// Margin of `(σ_j ⊗ I)|ψ⟩`; only defined for product-form ansätze.
pub fn margin_conjugated(
    ansatz: &Ansatz,
    theta: &[f64],
    state: &StateVector,
    j: usize,
) -> Result<Margin> {
    ansatz.require_product()?;
    let flipped = state.apply_single(&pauli_gate(j)?, 1)?;
    margin(ansatz, theta, &flipped)
}

/// All four `m^j`, `j = 0..4`, sharing one evaluation of `W(θ)`.
pub fn conjugated_margins(
    ansatz: &Ansatz,
    theta: &[f64],
    state: &StateVector,
) -> Result<[Margin; 4]> {
    ansatz.require_product()?;
    let circuit = ansatz.circuit(theta)?;
    let mut out = [Margin(0.0); 4];
    for (j, slot) in out.iter_mut().enumerate() {
        let mut s = state.apply_single(&pauli_gate(j)?, 1)?;
        s.apply_circuit_mut(&circuit)?;
        *slot = Margin::from_probability(s.prob_first_qubit_one()?);
    }
    Ok(out)
}


#[cfg(test)]
mod proptests {
    use super::*;
    use crate::gates::random_state;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::PI;

    proptest! {
        #[test]
        fn conjugated_margins_sum_to_zero(seed in any::<u64>(), n in 1usize..=4) {
            let mut rng = stream(seed, &[]);
            let ansatz = Ansatz::product(n).unwrap();
            let theta: Vec<f64> = (0..ansatz.n_params()).map(|_| rng.random_range(-PI..PI)).collect();
            let state = random_state(n, &mut rng).unwrap();
            let m = conjugated_margins(&ansatz, &theta, &state).unwrap();
            let sum: f64 = m.iter().map(|x| x.value()).sum();
            prop_assert!(sum.abs() < 1e-12);
            prop_assert_eq!(m[0], margin(&ansatz, &theta, &state).unwrap());
            for x in m {
                prop_assert!(x.value().abs() <= 0.5 + 1e-12);
            }
        }

        #[test]
        fn classify_agrees_with_margin_sign(m in -0.5f64..=0.5) {
            let label = classify(Margin(m));
            prop_assert_eq!(label == Label::Positive, m > 0.0);
        }
    }
}
