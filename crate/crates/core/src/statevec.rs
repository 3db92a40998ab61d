//! Dense statevector engine.
//!
//! Wire numbering is 1-based and wire 1 is the most significant bit of the
//! amplitude index, so a state splits as `[Φ₁; Φ₂]` with `Φ₂` the block in
//! which the first qubit is excited. The first-qubit projector `M₁` is then
//! simply the lower half of the amplitude array.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 20;

/// Largest register for which explicit `2^n × 2^n` matrices are built.
pub const MAX_ORACLE_QUBITS: usize = 10;

/// Tolerance for `‖G†G − I‖_max`.
pub const UNITARY_TOL: f64 = 1e-12;

/// Tolerance on `|‖ψ‖² − 1|` for inputs that must be normalized.
pub const NORM_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn max_unitarity_deviation<const D: usize>(m: &[[Complex64; D]; D]) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..D {
        for c in 0..D {
            let mut acc = ZERO;
            for k in 0..D {
                acc += m[k][r].conj() * m[k][c];
            }
            let target = if r == c { ONE } else { ZERO };
            worst = worst.max((acc - target).norm());
        }
    }
    worst
}

/// A 2×2 unitary acting on one wire.
#[derive(Clone, Copy, PartialEq)]
pub struct SingleQubitGate {
    m: [[Complex64; 2]; 2],
}

impl SingleQubitGate {
    /// Builds a gate, rejecting matrices that are not unitary within [`UNITARY_TOL`].
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let deviation = max_unitarity_deviation(&m);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { m })
    }

    /// Caller guarantees unitarity (closed-form constructions only).
    pub(crate) const fn from_matrix_unchecked(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub const fn identity() -> Self {
        Self {
            m: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.m
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self {
            m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]],
        }
    }

    pub fn unitarity_deviation(&self) -> f64 {
        max_unitarity_deviation(&self.m)
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.m[r][c] - other.m[r][c]).norm());
            }
        }
        worst
    }
}

/// Matrix product `self · rhs` (apply `rhs` first).
impl Mul for SingleQubitGate {
    type Output = SingleQubitGate;

    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.m, &rhs.m);
        let mut m = [[ZERO; 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, out) in row.iter_mut().enumerate() {
                *out = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Self { m }
    }
}

impl fmt::Debug for SingleQubitGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.m.iter()).finish()
    }
}

/// A 4×4 unitary acting on an ordered pair of wires `(a, b)`; basis order is
/// `|00⟩, |01⟩, |10⟩, |11⟩` with wire `a` the more significant bit.
#[derive(Clone, Copy, PartialEq)]
pub struct TwoQubitGate {
    m: [[Complex64; 4]; 4],
}

impl TwoQubitGate {
    pub fn new(m: [[Complex64; 4]; 4]) -> Result<Self> {
        let deviation = max_unitarity_deviation(&m);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { m })
    }

    pub(crate) const fn from_matrix_unchecked(m: [[Complex64; 4]; 4]) -> Self {
        Self { m }
    }

    pub fn matrix(&self) -> &[[Complex64; 4]; 4] {
        &self.m
    }

    pub fn unitarity_deviation(&self) -> f64 {
        max_unitarity_deviation(&self.m)
    }
}

impl fmt::Debug for TwoQubitGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.m.iter()).finish()
    }
}

/// One placed gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    Single { gate: SingleQubitGate, wire: usize },
    Two { gate: TwoQubitGate, wires: (usize, usize) },
}

impl Op {
    pub fn touches(&self, wire: usize) -> bool {
        match *self {
            Op::Single { wire: w, .. } => w == wire,
            Op::Two { wires: (a, b), .. } => a == wire || b == wire,
        }
    }

    pub fn is_entangling(&self) -> bool {
        matches!(self, Op::Two { .. })
    }
}

/// An ordered gate list; the first op is applied first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    ops: Vec<Op>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_single(&mut self, gate: SingleQubitGate, wire: usize) -> &mut Self {
        self.ops.push(Op::Single { gate, wire });
        self
    }

    pub fn push_two(&mut self, gate: TwoQubitGate, wires: (usize, usize)) -> &mut Self {
        self.ops.push(Op::Two { gate, wires });
        self
    }

    pub fn extend(&mut self, other: &Circuit) -> &mut Self {
        self.ops.extend_from_slice(&other.ops);
        self
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn has_entangling_gate(&self) -> bool {
        self.ops.iter().any(Op::is_entangling)
    }

    pub fn touches(&self, wire: usize) -> bool {
        self.ops.iter().any(|op| op.touches(wire))
    }
}

/// Normalized pure state over `n_qubits` wires.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

fn check_qubit_count(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Size(format!(
            "n_qubits = {n_qubits} outside [1, {MAX_QUBITS}]"
        )));
    }
    Ok(())
}

/// `|0…0⟩` on `n_qubits` wires.
pub fn basis_state(n_qubits: usize) -> Result<StateVector> {
    check_qubit_count(n_qubits)?;
    let mut amps = vec![ZERO; 1 << n_qubits];
    amps[0] = ONE;
    Ok(StateVector { n_qubits, amps })
}

impl StateVector {
    /// Wraps an amplitude array whose length is a power of two and whose
    /// squared norm is within [`NORM_TOL`] of one.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Size(format!(
                "amplitude count {len} is not a power of two ≥ 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubit_count(n_qubits)?;
        let state = Self { n_qubits, amps };
        state.check_normalized()?;
        Ok(state)
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized {
                norm_sq: norm * norm,
            });
        }
        for a in &mut amps {
            *a /= norm;
        }
        Self::from_amplitudes(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_normalized(&self) -> Result<()> {
        let norm_sq = self.norm_sqr();
        if !((norm_sq - 1.0).abs() <= NORM_TOL) {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(())
    }

    /// The blocks `(Φ₁, Φ₂)` where the first qubit reads 0 and 1.
    pub fn halves(&self) -> (&[Complex64], &[Complex64]) {
        self.amps.split_at(self.amps.len() / 2)
    }

    fn stride(&self, wire: usize) -> Result<usize> {
        if wire == 0 || wire > self.n_qubits {
            return Err(Error::Index(format!(
                "wire {wire} outside [1, {}]",
                self.n_qubits
            )));
        }
        Ok(1 << (self.n_qubits - wire))
    }

    /// `(I ⊗ … ⊗ G ⊗ … ⊗ I)|ψ⟩` with `G` on `wire`.
    pub fn apply_single(&self, gate: &SingleQubitGate, wire: usize) -> Result<Self> {
        let mut out = self.clone();
        out.apply_single_mut(gate, wire)?;
        Ok(out)
    }

    pub fn apply_single_mut(&mut self, gate: &SingleQubitGate, wire: usize) -> Result<()> {
        let stride = self.stride(wire)?;
        let m = gate.matrix();
        let len = self.amps.len();
        for block in (0..len).step_by(2 * stride) {
            for i in block..block + stride {
                let a0 = self.amps[i];
                let a1 = self.amps[i + stride];
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i + stride] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    /// Applies a two-qubit gate on the ordered pair `wires = (a, b)`.
    pub fn apply_two(&self, gate: &TwoQubitGate, wires: (usize, usize)) -> Result<Self> {
        let mut out = self.clone();
        out.apply_two_mut(gate, wires)?;
        Ok(out)
    }

    pub fn apply_two_mut(&mut self, gate: &TwoQubitGate, wires: (usize, usize)) -> Result<()> {
        let (a, b) = wires;
        if a == b {
            return Err(Error::Index(format!("two-qubit gate on repeated wire {a}")));
        }
        let sa = self.stride(a)?;
        let sb = self.stride(b)?;
        let mask = sa | sb;
        let m = gate.matrix();
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            let idx = [base, base + sb, base + sa, base + sa + sb];
            let v = idx.map(|i| self.amps[i]);
            for (r, &i) in idx.iter().enumerate() {
                self.amps[i] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
            }
        }
        Ok(())
    }

    pub fn apply_op_mut(&mut self, op: &Op) -> Result<()> {
        match op {
            Op::Single { gate, wire } => self.apply_single_mut(gate, *wire),
            Op::Two { gate, wires } => self.apply_two_mut(gate, *wires),
        }
    }

    pub fn apply_circuit(&self, circuit: &Circuit) -> Result<Self> {
        let mut out = self.clone();
        out.apply_circuit_mut(circuit)?;
        Ok(out)
    }

    pub fn apply_circuit_mut(&mut self, circuit: &Circuit) -> Result<()> {
        circuit.ops().iter().try_for_each(|op| self.apply_op_mut(op))
    }

    /// `⟨ψ|M₁|ψ⟩ = ‖Φ₂‖²`, the probability of reading 1 on wire 1.
    pub fn prob_first_qubit_one(&self) -> Result<f64> {
        self.check_normalized()?;
        Ok(self.prob_first_qubit_one_unchecked())
    }

    pub(crate) fn prob_first_qubit_one_unchecked(&self) -> f64 {
        self.halves().1.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::Size(format!(
            "inner product of dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(inner_product_slices(a.amplitudes(), b.amplitudes()))
}

/// `Σ conj(a_i)·b_i` over equal-length blocks (used on half-states).
pub fn inner_product_slices(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Row-major dense square matrix, used for explicit-operator oracles.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = ONE;
        }
        Self { dim, data }
    }

    pub fn from_single(gate: &SingleQubitGate) -> Self {
        let m = gate.matrix();
        Self {
            dim: 2,
            data: vec![m[0][0], m[0][1], m[1][0], m[1][1]],
        }
    }

    pub fn from_two(gate: &TwoQubitGate) -> Self {
        Self {
            dim: 4,
            data: gate.matrix().iter().flatten().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &DenseMatrix) -> DenseMatrix {
        let dim = self.dim * rhs.dim;
        let mut data = vec![ZERO; dim * dim];
        for r1 in 0..self.dim {
            for c1 in 0..self.dim {
                let s = self.get(r1, c1);
                for r2 in 0..rhs.dim {
                    for c2 in 0..rhs.dim {
                        data[(r1 * rhs.dim + r2) * dim + c1 * rhs.dim + c2] = s * rhs.get(r2, c2);
                    }
                }
            }
        }
        DenseMatrix { dim, data }
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.dim != rhs.dim {
            return Err(Error::Size(format!(
                "matmul of dimensions {} and {}",
                self.dim, rhs.dim
            )));
        }
        let d = self.dim;
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            for k in 0..d {
                let s = self.get(r, k);
                for c in 0..d {
                    data[r * d + c] += s * rhs.get(k, c);
                }
            }
        }
        Ok(DenseMatrix { dim: d, data })
    }

    /// Plain matrix-vector product; the result is not renormalized.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if self.dim != state.dim() {
            return Err(Error::Size(format!(
                "matrix of dimension {} applied to state of dimension {}",
                self.dim,
                state.dim()
            )));
        }
        let amps = (0..self.dim)
            .map(|r| {
                (0..self.dim)
                    .map(|c| self.get(r, c) * state.amplitudes()[c])
                    .sum()
            })
            .collect();
        Ok(StateVector {
            n_qubits: state.n_qubits(),
            amps,
        })
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `G₁ ⊗ G₂ ⊗ … ⊗ G_n` with wire 1 outermost.
pub fn kron_product(gates: &[SingleQubitGate]) -> Result<DenseMatrix> {
    let n = gates.len();
    if n == 0 || n > MAX_ORACLE_QUBITS {
        return Err(Error::Size(format!(
            "kron_product over {n} wires; supported range is [1, {MAX_ORACLE_QUBITS}]"
        )));
    }
    Ok(gates
        .iter()
        .skip(1)
        .fold(DenseMatrix::from_single(&gates[0]), |acc, g| {
            acc.kron(&DenseMatrix::from_single(g))
        }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn x() -> SingleQubitGate {
        SingleQubitGate::new([[ZERO, ONE], [ONE, ZERO]]).unwrap()
    }

    fn z() -> SingleQubitGate {
        SingleQubitGate::new([[ONE, ZERO], [ZERO, -ONE]]).unwrap()
    }

    fn cnot() -> TwoQubitGate {
        let mut m = [[ZERO; 4]; 4];
        m[0][0] = ONE;
        m[1][1] = ONE;
        m[2][3] = ONE;
        m[3][2] = ONE;
        TwoQubitGate::new(m).unwrap()
    }

    fn assert_state(s: &StateVector, expected: &[Complex64]) {
        assert_eq!(s.dim(), expected.len());
        for (a, b) in s.amplitudes().iter().zip(expected) {
            assert!((a - b).norm() < 1e-12, "{:?} vs {:?}", s.amplitudes(), expected);
        }
    }

    #[test]
    fn basis_states() {
        assert_state(&basis_state(1).unwrap(), &[ONE, ZERO]);
        assert_state(&basis_state(2).unwrap(), &[ONE, ZERO, ZERO, ZERO]);
        assert!(matches!(basis_state(21), Err(Error::Size(_))));
        assert!(matches!(basis_state(0), Err(Error::Size(_))));
    }

    #[test]
    fn pauli_x_on_first_wire() {
        let s = basis_state(2).unwrap().apply_single(&x(), 1).unwrap();
        assert_state(&s, &[ZERO, ZERO, ONE, ZERO]);
        assert_eq!(s.prob_first_qubit_one().unwrap(), 1.0);
    }

    #[test]
    fn pauli_z_phase_on_second_wire() {
        let h = c(FRAC_1_SQRT_2, 0.0);
        let s = StateVector::from_amplitudes(vec![h, h, ZERO, ZERO]).unwrap();
        let out = s.apply_single(&z(), 2).unwrap();
        assert_state(&out, &[h, -h, ZERO, ZERO]);
    }

    #[test]
    fn cnot_truth_table_and_bell() {
        let s = basis_state(2).unwrap().apply_single(&x(), 1).unwrap();
        assert_state(&s.apply_two(&cnot(), (1, 2)).unwrap(), &[ZERO, ZERO, ZERO, ONE]);

        let h = c(FRAC_1_SQRT_2, 0.0);
        let s = StateVector::from_amplitudes(vec![h, ZERO, h, ZERO]).unwrap();
        let bell = s.apply_two(&cnot(), (1, 2)).unwrap();
        assert_state(&bell, &[h, ZERO, ZERO, h]);
        assert!((bell.prob_first_qubit_one().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reversed_cnot_uses_second_wire_as_control() {
        // |01⟩ with control on wire 2 → |11⟩
        let s = basis_state(2).unwrap().apply_single(&x(), 2).unwrap();
        assert_state(&s.apply_two(&cnot(), (2, 1)).unwrap(), &[ZERO, ZERO, ZERO, ONE]);
    }

    #[test]
    fn wire_and_unitarity_errors() {
        let s = basis_state(2).unwrap();
        assert!(matches!(s.apply_single(&x(), 0), Err(Error::Index(_))));
        assert!(matches!(s.apply_single(&x(), 3), Err(Error::Index(_))));
        assert!(matches!(s.apply_two(&cnot(), (1, 1)), Err(Error::Index(_))));
        let bad = SingleQubitGate::new([[ONE, ONE], [ZERO, ONE]]);
        assert!(matches!(bad, Err(Error::NotUnitary { .. })));
        let mut m = *cnot().matrix();
        m[0][0] = c(2.0, 0.0);
        assert!(matches!(TwoQubitGate::new(m), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn ground_state_probability_and_normalization_error() {
        assert_eq!(basis_state(3).unwrap().prob_first_qubit_one().unwrap(), 0.0);
        let s = StateVector {
            n_qubits: 1,
            amps: vec![ONE, ONE],
        };
        assert!(matches!(
            s.prob_first_qubit_one(),
            Err(Error::NotNormalized { .. })
        ));
        assert!(StateVector::from_amplitudes(vec![ONE, ONE]).is_err());
        assert!(StateVector::from_amplitudes(vec![ONE, ZERO, ZERO]).is_err());
    }

    #[test]
    fn inner_products() {
        let a = basis_state(2).unwrap();
        let b = a.apply_single(&x(), 1).unwrap().apply_single(&x(), 2).unwrap();
        assert_eq!(inner_product(&a, &a).unwrap(), ONE);
        assert_eq!(inner_product(&a, &b).unwrap(), ZERO);
        assert!(inner_product(&a, &basis_state(1).unwrap()).is_err());
    }

    #[test]
    fn kron_examples() {
        let i2 = SingleQubitGate::identity();
        assert_eq!(kron_product(&[i2, i2]).unwrap(), DenseMatrix::identity(4));

        // σ₁ ⊗ σ₃ = [[0, σ₃], [σ₃, 0]]
        let k = kron_product(&[x(), z()]).unwrap();
        let expected = [
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
        ];
        for (r, row) in expected.iter().enumerate() {
            for (col, v) in row.iter().enumerate() {
                assert_eq!(k.get(r, col), c(*v, 0.0));
            }
        }
        assert!(kron_product(&[i2; 11]).is_err());
        assert!(kron_product(&[]).is_err());
    }
}
