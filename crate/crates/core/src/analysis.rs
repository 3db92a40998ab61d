//! Channel-averaged margins and the checks built on them.
//!
//! The exact path enumerates the 4 × 4 discrete outcomes `(C, C′)` and
//! integrates the Gaussian angle jitter in closed form through
//! [`gaussian_trig_expectations`]. The Monte Carlo path samples every draw
//! and simulates the circuit gate by gate, so the two share nothing beyond
//! the simulator itself.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classifier::{margin, Ansatz, Margin};
use crate::error::{Error, Result};
use crate::gates::{cnot, random_su2, random_unitary4};
use crate::noise::{gaussian_trig_expectations, pauli_gate, NoiseModel};
use crate::rng::stream;
use crate::statevec::{inner_product_slices, Circuit, SingleQubitGate, StateVector};

/// Tolerance for pure linear-algebra identities.
pub const LINALG_TOL: f64 = 1e-12;

/// Tolerance for identities composed over the 16-term enumeration.
pub const CHANNEL_TOL: f64 = 1e-10;

/// Shrinkage factor and offset bounding the corrupted margin:
/// `m̃ ∈ η·[m − δ, m + δ]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Theorem2Constants {
    pub eta: f64,
    pub delta: f64,
}

impl Theorem2Constants {
    pub fn new(p: f64, q: f64, mu: f64, tau: f64) -> Result<Self> {
        let (cos_avg, sin_avg) = gaussian_trig_expectations(mu, tau);
        let eta = (1.0 - 4.0 * p) * (1.0 - 2.0 * q * (1.0 - cos_avg));
        if eta == 0.0 {
            return Err(Error::DegenerateShrinkage { eta });
        }
        let delta = 2.0 * q * sin_avg.abs() / eta;
        Ok(Self { eta, delta })
    }

    pub fn from_noise(noise: &NoiseModel) -> Result<Self> {
        let c = &noise.coherent;
        Self::new(noise.bitflip.p(), c.q(), c.mu(), c.tau())
    }

    /// Endpoints of `η·[m − δ, m + δ]` in increasing order.
    pub fn interval(&self, m: f64) -> (f64, f64) {
        let a = self.eta * (m - self.delta);
        let b = self.eta * (m + self.delta);
        (a.min(b), a.max(b))
    }

    /// Distance from `m_tilde` to the nearer endpoint; negative when outside.
    pub fn containment_slack(&self, m_tilde: f64, m: f64) -> f64 {
        let (lo, hi) = self.interval(m);
        (m_tilde - lo).min(hi - m_tilde)
    }
}

/// Exact channel average of the margin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorruptedMargin {
    pub exact: f64,
}

/// Expected `‖lower half of U₁Ψ‖²` for `U₁ = exp(−i(μ+ε)/2·σ_axis)` on wire 1,
/// with `ε ~ N(0, τ²)` integrated analytically.
///
/// Writing `Ψ′ = (σ_axis ⊗ I)Ψ`, `A = ‖Ψ₂‖²`, `B = ‖Ψ′₂‖²` and
/// `X = 2·Im⟨Ψ₂|Ψ′₂⟩`, the conditional probability is
/// `(A+B)/2 + cos(μ+ε)(A−B)/2 + sin(μ+ε)X/2`.
fn coherent_averaged_probability(psi: &StateVector, axis: usize, mu: f64, tau: f64) -> Result<f64> {
    let a = psi.prob_first_qubit_one()?;
    if axis == 0 {
        return Ok(a);
    }
    let rotated = psi.apply_single(&pauli_gate(axis)?, 1)?;
    let b = rotated.prob_first_qubit_one_unchecked();
    let x = 2.0 * inner_product_slices(psi.halves().1, rotated.halves().1).im;
    let (cos_avg, sin_avg) = gaussian_trig_expectations(mu, tau);
    Ok(0.5 * (a + b) + 0.5 * cos_avg * (a - b) + 0.5 * sin_avg * x)
}

/// `m^{jl}`: the margin conditioned on bit-flip outcome `j` and rotation axis
/// `l`, jitter integrated out. Indexed `[j][l]`.
pub fn conditional_margins(
    ansatz: &Ansatz,
    theta: &[f64],
    state: &StateVector,
    mu: f64,
    tau: f64,
) -> Result<[[f64; 4]; 4]> {
    ansatz.require_product()?;
    let circuit = ansatz.circuit(theta)?;
    let mut table = [[0.0; 4]; 4];
    for (j, row) in table.iter_mut().enumerate() {
        let mut psi = state.apply_single(&pauli_gate(j)?, 1)?;
        psi.apply_circuit_mut(&circuit)?;
        for (l, slot) in row.iter_mut().enumerate() {
            *slot = coherent_averaged_probability(&psi, l, mu, tau)? - 0.5;
        }
    }
    Ok(table)
}

/// Exact corrupted margin by weighting the 16 conditional margins.
pub fn corrupted_margin_exact(
    ansatz: &Ansatz,
    theta: &[f64],
    state: &StateVector,
    noise: &NoiseModel,
) -> Result<CorruptedMargin> {
    let c = &noise.coherent;
    let table = conditional_margins(ansatz, theta, state, c.mu(), c.tau())?;
    let wj = noise.bitflip.weights();
    let wl = c.axis_weights();
    let exact = (0..4)
        .flat_map(|j| (0..4).map(move |l| (j, l)))
        .map(|(j, l)| wj[j] * wl[l] * table[j][l])
        .sum();
    Ok(CorruptedMargin { exact })
}

/// Monte Carlo estimate of the corrupted margin and its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// Trials per independent random stream; fixes the summation order.
pub const MC_CHUNK: u64 = 4096;

/// Samples `(C, C′, ε)` afresh for every trial and simulates
/// `U₁·W(θ)·σ_C` on `state`. Chunks of [`MC_CHUNK`] trials draw from their
/// own stream keyed by `(seed, chunk)` and are reduced in chunk order, so the
/// result is bitwise identical for any thread count.
pub fn corrupted_margin_mc(
    ansatz: &Ansatz,
    theta: &[f64],
    state: &StateVector,
    noise: &NoiseModel,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be ≥ 1".into()));
    }
    let circuit = ansatz.circuit(theta)?;
    // Accumulate deviations from the noiseless probability so that a
    // noise-free run reproduces the margin exactly.
    let reference = margin(ansatz, theta, state)?.value() + 0.5;
    let mu = noise.coherent.mu();
    let chunks = trials.div_ceil(MC_CHUNK);
    let partials: Vec<Result<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream(seed, &[chunk]);
            let len = MC_CHUNK.min(trials - chunk * MC_CHUNK);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..len {
                let draw = noise.sample(&mut rng);
                let mut s = state.apply_single(&draw.encoder_gate(), 1)?;
                s.apply_circuit_mut(&circuit)?;
                s.apply_single_mut(&draw.circuit_gate(mu), 1)?;
                let d = s.prob_first_qubit_one_unchecked() - reference;
                sum += d;
                sum_sq += d * d;
            }
            Ok((sum, sum_sq))
        })
        .collect();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for part in partials {
        let (s, s2) = part?;
        sum += s;
        sum_sq += s2;
    }
    let n = trials as f64;
    let mean_dev = sum / n;
    let variance = if trials > 1 {
        ((sum_sq - sum * mean_dev) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        estimate: reference + mean_dev - 0.5,
        stderr: (variance / n).sqrt(),
        trials,
    })
}

/// Noise on one layer of the register: `U₁` on wire 1 and an arbitrary
/// circuit `U_{2:n}` meant to act on wires 2..n.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseLayer {
    pub first: SingleQubitGate,
    pub rest: Circuit,
}

impl NoiseLayer {
    pub fn identity() -> Self {
        Self {
            first: SingleQubitGate::identity(),
            rest: Circuit::new(),
        }
    }

    /// Independent Haar single-qubit unitaries on every wire; with
    /// `entangle_rest`, also a random two-qubit unitary coupling wires 2 and
    /// 3 (still no coupling to wire 1).
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, entangle_rest: bool, rng: &mut R) -> Self {
        let first = random_su2(rng);
        let mut rest = Circuit::new();
        for wire in 2..=n_qubits {
            rest.push_single(random_su2(rng), wire);
        }
        if entangle_rest && n_qubits >= 3 {
            rest.push_two(random_unitary4(rng), (2, 3));
        }
        Self { first, rest }
    }

    fn full(&self) -> Circuit {
        let mut c = Circuit::new();
        c.push_single(self.first, 1);
        c.extend(&self.rest);
        c
    }

    fn first_only(&self) -> Circuit {
        let mut c = Circuit::new();
        c.push_single(self.first, 1);
        c
    }
}

/// One fixed draw of circuit-side noise `U` and encoder-side noise `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseDraw {
    pub circuit_noise: NoiseLayer,
    pub encoder_noise: NoiseLayer,
}

impl NoiseDraw {
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, entangle_rest: bool, rng: &mut R) -> Self {
        Self {
            circuit_noise: NoiseLayer::random(n_qubits, entangle_rest, rng),
            encoder_noise: NoiseLayer::random(n_qubits, entangle_rest, rng),
        }
    }
}

/// Which invariance statement is checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InvarianceSetting {
    /// Noise only after `W`; `W` may entangle.
    CircuitNoise,
    /// Noise on the encoder and after `W`; `W` must be product-form.
    EncoderAndCircuitNoise,
}

/// Per-draw deviations of the first-qubit probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
}

impl InvarianceReport {
    fn from_deviations(deviations: Vec<f64>) -> Self {
        let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
        Self {
            deviations,
            max_deviation,
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.max_deviation <= tol
    }
}

fn deviation_for_draw(
    w: &Circuit,
    state: &StateVector,
    draw: &NoiseDraw,
    with_encoder: bool,
) -> Result<f64> {
    let run = |encoder: Option<Circuit>, circuit_noise: Circuit| -> Result<f64> {
        let mut s = state.clone();
        if let Some(v) = encoder {
            s.apply_circuit_mut(&v)?;
        }
        s.apply_circuit_mut(w)?;
        s.apply_circuit_mut(&circuit_noise)?;
        s.prob_first_qubit_one()
    };
    let (full_v, first_v) = if with_encoder {
        (
            Some(draw.encoder_noise.full()),
            Some(draw.encoder_noise.first_only()),
        )
    } else {
        (None, None)
    };
    let noisy = run(full_v, draw.circuit_noise.full())?;
    let reduced = run(first_v, draw.circuit_noise.first_only())?;
    Ok((noisy - reduced).abs())
}

fn check_invariance_inputs(state: &StateVector, draws: &[NoiseDraw]) -> Result<()> {
    if state.n_qubits() < 2 {
        return Err(Error::Size("invariance checks need at least 2 qubits".into()));
    }
    if draws.is_empty() {
        return Err(Error::EmptyInput("no noise draws".into()));
    }
    Ok(())
}

/// Compares the first-qubit probability with the full noise draws against
/// the same circuit keeping only the wire-1 noise, draw by draw.
pub fn verify_theorem1(
    w: &Circuit,
    state: &StateVector,
    setting: InvarianceSetting,
    draws: &[NoiseDraw],
) -> Result<InvarianceReport> {
    check_invariance_inputs(state, draws)?;
    let with_encoder = setting == InvarianceSetting::EncoderAndCircuitNoise;
    if with_encoder && w.has_entangling_gate() {
        return Err(Error::Unsupported(
            "encoder noise requires a product-form circuit".into(),
        ));
    }
    for draw in draws {
        let layers = [&draw.circuit_noise, &draw.encoder_noise];
        if layers.iter().any(|l| l.rest.touches(1)) {
            return Err(Error::Unsupported(
                "noise on wires 2..n must not act on wire 1".into(),
            ));
        }
    }
    let deviations = draws
        .iter()
        .map(|d| deviation_for_draw(w, state, d, with_encoder))
        .collect::<Result<Vec<_>>>()?;
    Ok(InvarianceReport::from_deviations(deviations))
}

/// Hypothesis violations that are expected to break the invariance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NegativeControl {
    /// Encoder noise combined with an entangling `W`.
    EntangledCircuitWithEncoderNoise,
    /// Circuit noise containing a CNOT from wire 2 onto wire 1.
    EntanglingNoiseOnFirstWire,
}

/// Runs the invariance comparison with one hypothesis deliberately broken.
pub fn negative_control(
    w: &Circuit,
    state: &StateVector,
    kind: NegativeControl,
    draws: &[NoiseDraw],
) -> Result<InvarianceReport> {
    check_invariance_inputs(state, draws)?;
    let deviations = draws
        .iter()
        .map(|d| match kind {
            NegativeControl::EntangledCircuitWithEncoderNoise => {
                deviation_for_draw(w, state, d, true)
            }
            NegativeControl::EntanglingNoiseOnFirstWire => {
                let mut d = d.clone();
                let mut rest = Circuit::new();
                rest.push_two(cnot(), (2, 1));
                rest.extend(&d.circuit_noise.rest);
                d.circuit_noise.rest = rest;
                deviation_for_draw(w, state, &d, false)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InvarianceReport::from_deviations(deviations))
}

/// `layers` rounds of Haar single-qubit gates on every wire followed by a
/// CNOT chain with random orientation.
pub fn random_entangled_circuit<R: Rng + ?Sized>(
    n_qubits: usize,
    layers: usize,
    rng: &mut R,
) -> Circuit {
    let mut c = Circuit::new();
    for _ in 0..layers {
        for wire in 1..=n_qubits {
            c.push_single(random_su2(rng), wire);
        }
        for wire in 1..n_qubits {
            let pair = if rng.random::<bool>() {
                (wire, wire + 1)
            } else {
                (wire + 1, wire)
            };
            c.push_two(cnot(), pair);
        }
    }
    for wire in 1..=n_qubits {
        c.push_single(random_su2(rng), wire);
    }
    c
}

/// Haar single-qubit gate on every wire.
pub fn random_product_circuit<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Circuit {
    let mut c = Circuit::new();
    for wire in 1..=n_qubits {
        c.push_single(random_su2(rng), wire);
    }
    c
}

/// Residuals of the conditional-margin identities for one configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LemmaChecks {
    /// `max_l |Σ_j m^{jl}|`.
    pub column_sum_residual: f64,
    /// `max(|m⁰⁰ − m|, |m⁰³ − m|)`.
    pub unrotated_residual: f64,
    /// `|m⁰¹ − m⁰²|`.
    pub x_y_residual: f64,
    /// `½|sin μ|e^{−τ²/2} − max_{l∈{1,2}} |m⁰ˡ − cos μ·e^{−τ²/2}·m|`.
    pub bound_slack: f64,
    /// `½ − |Im(Ψ₁†Ψ₂)|`.
    pub overlap_slack: f64,
    /// Distance between `m⁰¹` from the table and the closed form
    /// `cos μ·e^{−τ²/2}·m − sin μ·e^{−τ²/2}·Im(Ψ₁†Ψ₂)`.
    pub closed_form_residual: f64,
}

impl LemmaChecks {
    pub fn zero_sum_holds(&self, tol: f64) -> bool {
        self.column_sum_residual <= tol
    }

    pub fn unrotated_holds(&self, tol: f64) -> bool {
        self.unrotated_residual <= tol
    }

    pub fn x_y_equality_holds(&self, tol: f64) -> bool {
        self.x_y_residual <= tol
    }

    pub fn bound_holds(&self, tol: f64) -> bool {
        self.bound_slack >= -tol && self.overlap_slack >= -tol
    }
}

/// The 4×4 conditional-margin table together with its identity checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LemmaTable {
    /// `m_jl[j][l]`: bit-flip outcome `j`, rotation axis `l`.
    pub m_jl: [[f64; 4]; 4],
    pub margin: f64,
    pub overlap: Complex64Ser,
    pub checks: LemmaChecks,
}

/// Serializable complex scalar.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Complex64Ser {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Complex64Ser {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

pub fn lemma1_table(
    ansatz: &Ansatz,
    theta: &[f64],
    state: &StateVector,
    mu: f64,
    tau: f64,
) -> Result<LemmaTable> {
    let m_jl = conditional_margins(ansatz, theta, state, mu, tau)?;
    let m = margin(ansatz, theta, state)?.value();
    let psi = ansatz.apply(theta, state)?;
    let (psi1, psi2) = psi.halves();
    let overlap = inner_product_slices(psi1, psi2);

    let (cos_avg, sin_avg) = gaussian_trig_expectations(mu, tau);
    let column_sum_residual = (0..4)
        .map(|l| (0..4).map(|j| m_jl[j][l]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let unrotated_residual = (m_jl[0][0] - m).abs().max((m_jl[0][3] - m).abs());
    let x_y_residual = (m_jl[0][1] - m_jl[0][2]).abs();
    let offset = (m_jl[0][1] - cos_avg * m)
        .abs()
        .max((m_jl[0][2] - cos_avg * m).abs());
    let checks = LemmaChecks {
        column_sum_residual,
        unrotated_residual,
        x_y_residual,
        bound_slack: 0.5 * sin_avg.abs() - offset,
        overlap_slack: 0.5 - overlap.im.abs(),
        closed_form_residual: (m_jl[0][1] - (cos_avg * m - sin_avg * overlap.im)).abs(),
    };
    Ok(LemmaTable {
        m_jl,
        margin: m,
        overlap: overlap.into(),
        checks,
    })
}

/// Sign of the corrupted margin agrees with the clean one whenever
/// `|m| > δ` and `η > 0`. Returns `None` when the hypothesis does not apply.
pub fn sign_preserved(constants: &Theorem2Constants, m: Margin, m_tilde: f64) -> Option<bool> {
    let m = m.value();
    if constants.eta <= 0.0 || m.abs() <= constants.delta {
        return None;
    }
    let clean = crate::classifier::classify(Margin::from_probability(m + 0.5));
    let noisy = crate::classifier::classify(Margin::from_probability(m_tilde + 0.5));
    Some(clean == noisy)
}


#[cfg(test)]
mod proptests {
    use super::*;
    use crate::gates::random_state;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::PI;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn exact_corrupted_margin_lies_in_interval(
            seed in any::<u64>(),
            n in 1usize..=3,
            p in 0.0f64..0.25,
            q in 0.0f64..=1.0 / 3.0,
            mu in -PI..PI,
            tau in 0.0f64..2.0,
        ) {
            let mut rng = stream(seed, &[]);
            let ansatz = Ansatz::product(n).unwrap();
            let theta: Vec<f64> = (0..ansatz.n_params()).map(|_| rng.random_range(-PI..PI)).collect();
            let state = random_state(n, &mut rng).unwrap();
            let noise = NoiseModel::new(p, q, mu, tau).unwrap();
            let constants = match Theorem2Constants::from_noise(&noise) {
                Ok(c) => c,
                Err(_) => return Ok(()),
            };
            let m = margin(&ansatz, &theta, &state).unwrap().value();
            let m_tilde = corrupted_margin_exact(&ansatz, &theta, &state, &noise).unwrap().exact;
            prop_assert!(constants.containment_slack(m_tilde, m) >= -1e-10);
        }

        #[test]
        fn conditional_table_columns_sum_to_zero(
            seed in any::<u64>(),
            n in 1usize..=3,
            mu in -PI..PI,
            tau in 0.0f64..2.0,
        ) {
            let mut rng = stream(seed, &[]);
            let ansatz = Ansatz::product(n).unwrap();
            let theta: Vec<f64> = (0..ansatz.n_params()).map(|_| rng.random_range(-PI..PI)).collect();
            let state = random_state(n, &mut rng).unwrap();
            let table = conditional_margins(&ansatz, &theta, &state, mu, tau).unwrap();
            for l in 0..4 {
                let col: f64 = (0..4).map(|j| table[j][l]).sum();
                prop_assert!(col.abs() < 1e-10);
            }
        }
    }
}
