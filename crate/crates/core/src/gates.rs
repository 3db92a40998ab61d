//! Standard rotations, the CNOT entangler and Haar-random unitaries/states.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::statevec::{SingleQubitGate, StateVector, TwoQubitGate};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `exp(−iθX/2)`.
pub fn rx(theta: f64) -> SingleQubitGate {
    let (s, co) = (theta / 2.0).sin_cos();
    SingleQubitGate::from_matrix_unchecked([[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]])
}

/// `exp(−iθY/2)`.
pub fn ry(theta: f64) -> SingleQubitGate {
    let (s, co) = (theta / 2.0).sin_cos();
    SingleQubitGate::from_matrix_unchecked([[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]])
}

/// `exp(−iθZ/2)`.
pub fn rz(theta: f64) -> SingleQubitGate {
    let (s, co) = (theta / 2.0).sin_cos();
    SingleQubitGate::from_matrix_unchecked([[c(co, -s), ZERO], [ZERO, c(co, s)]])
}

/// CNOT with the first wire of the pair as control.
pub fn cnot() -> TwoQubitGate {
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[1][1] = ONE;
    m[2][3] = ONE;
    m[3][2] = ONE;
    TwoQubitGate::from_matrix_unchecked(m)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random element of SU(2), from a uniformly random unit quaternion.
pub fn random_su2<R: Rng + ?Sized>(rng: &mut R) -> SingleQubitGate {
    let mut q = [0.0f64; 4];
    loop {
        for v in &mut q {
            *v = rng.sample(StandardNormal);
        }
        let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-6 {
            q.iter_mut().for_each(|v| *v /= norm);
            break;
        }
    }
    let a = c(q[0], q[1]);
    let b = c(q[2], q[3]);
    SingleQubitGate::from_matrix_unchecked([[a, -b.conj()], [b, a.conj()]])
}

/// Haar-random 4×4 unitary: Gram–Schmidt on a complex Ginibre matrix.
pub fn random_unitary4<R: Rng + ?Sized>(rng: &mut R) -> TwoQubitGate {
    loop {
        let mut cols = [[ZERO; 4]; 4];
        for col in &mut cols {
            for v in col.iter_mut() {
                *v = gaussian(rng);
            }
        }
        let mut ok = true;
        for k in 0..4 {
            for j in 0..k {
                let proj: Complex64 = (0..4).map(|i| cols[j][i].conj() * cols[k][i]).sum();
                for i in 0..4 {
                    let sub = proj * cols[j][i];
                    cols[k][i] -= sub;
                }
            }
            let norm = cols[k].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-6 {
                ok = false;
                break;
            }
            cols[k].iter_mut().for_each(|v| *v /= norm);
        }
        if ok {
            let mut m = [[ZERO; 4]; 4];
            for (r, row) in m.iter_mut().enumerate() {
                for (k, out) in row.iter_mut().enumerate() {
                    *out = cols[k][r];
                }
            }
            return TwoQubitGate::from_matrix_unchecked(m);
        }
    }
}

/// Haar-random pure state on `n_qubits` wires.
pub fn random_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> crate::Result<StateVector> {
    if n_qubits == 0 || n_qubits > crate::statevec::MAX_QUBITS {
        return Err(crate::Error::Size(format!("n_qubits = {n_qubits}")));
    }
    let amps = (0..1usize << n_qubits).map(|_| gaussian(rng)).collect();
    StateVector::normalized(amps)
}

/// Tensor product of independent Haar-random single-qubit states.
pub fn random_product_state<R: Rng + ?Sized>(
    n_qubits: usize,
    rng: &mut R,
) -> crate::Result<StateVector> {
    let mut state = crate::statevec::basis_state(n_qubits)?;
    for wire in 1..=n_qubits {
        state.apply_single_mut(&random_su2(rng), wire)?;
    }
    Ok(state)
}
