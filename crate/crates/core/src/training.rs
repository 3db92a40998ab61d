//! Empirical risk minimization on (possibly corrupted) quantum datasets.
//!
//! Corruption follows the bit-flip model on wire 1: item `i` is replaced by
//! `(σ_{C_i} ⊗ I)|ψ_i⟩` with i.i.d. `C_i`. Averaging the corrupted risk over
//! the `C_i` splits it into a shrunken clean risk plus a penalty built from
//! the four conjugated margins `m^j`, see [`expected_corrupted_risk`].

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::random_entangled_circuit;
use crate::classifier::{classify, conjugated_margins, margin, Ansatz, Label, Margin};
use crate::error::{Error, Result};
use crate::gates::random_product_state;
use crate::noise::{pauli_gate, BitflipChannel};
use crate::rng::stream;
use crate::statevec::StateVector;

/// Slack allowed on `|t| ≤ 1/2` for margins computed in floating point.
const DOMAIN_SLACK: f64 = 1e-12;

/// Convex, nonincreasing losses with `ℓ(0) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LossFn {
    /// `(1 − t)₊`
    Hinge,
    /// `log(1 + e^{−t}) / log 2`
    Logistic,
}

impl LossFn {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "hinge" => Ok(LossFn::Hinge),
            "logistic" => Ok(LossFn::Logistic),
            other => Err(Error::InvalidParameter(format!("unknown loss `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossFn::Hinge => "hinge",
            LossFn::Logistic => "logistic",
        }
    }

    fn check_domain(t: f64) -> Result<()> {
        if !(t.abs() <= 0.5 + DOMAIN_SLACK) {
            return Err(Error::Domain { value: t });
        }
        Ok(())
    }

    /// `ℓ(t)` on the closed domain `[−1/2, 1/2]`.
    pub fn value(self, t: f64) -> Result<f64> {
        Self::check_domain(t)?;
        Ok(self.eval(t))
    }

    fn eval(self, t: f64) -> f64 {
        match self {
            LossFn::Hinge => (1.0 - t).max(0.0),
            LossFn::Logistic => (-t).exp().ln_1p() / std::f64::consts::LN_2,
        }
    }

    /// `ℓ′(t)`; the hinge uses the subgradient 0 at its kink `t = 1`.
    pub fn derivative(self, t: f64) -> f64 {
        match self {
            LossFn::Hinge => {
                if t < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            LossFn::Logistic => -1.0 / ((1.0 + t.exp()) * std::f64::consts::LN_2),
        }
    }

    /// `[ℓ(t/3) + ℓ(−t/3)] / 2`.
    pub fn symmetric_third(self, t: f64) -> Result<f64> {
        Ok(0.5 * (self.value(t / 3.0)? + self.value(-t / 3.0)?))
    }
}

/// One labelled state.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub state: StateVector,
    pub label: Label,
}

/// Labelled states on a common register, optionally with the bit-flip
/// outcomes that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumDataset {
    n_qubits: usize,
    items: Vec<Sample>,
    realizations: Option<Vec<usize>>,
}

impl QuantumDataset {
    pub fn new(items: Vec<Sample>) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::EmptyInput("dataset has no items".into()))?;
        let n_qubits = first.state.n_qubits();
        if let Some(bad) = items.iter().find(|s| s.state.n_qubits() != n_qubits) {
            return Err(Error::Shape {
                expected: n_qubits,
                actual: bad.state.n_qubits(),
            });
        }
        Ok(Self {
            n_qubits,
            items,
            realizations: None,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Sample] {
        &self.items
    }

    /// Bit-flip outcomes `C_i`, present on corrupted datasets.
    pub fn realizations(&self) -> Option<&[usize]> {
        self.realizations.as_deref()
    }

    pub fn is_corrupted(&self) -> bool {
        self.realizations.is_some()
    }
}

fn check_ansatz(ansatz: &Ansatz, dataset: &QuantumDataset) -> Result<()> {
    ansatz.require_product()?;
    if ansatz.n_qubits() != dataset.n_qubits() {
        return Err(Error::Shape {
            expected: ansatz.n_qubits(),
            actual: dataset.n_qubits(),
        });
    }
    Ok(())
}

/// `R̂_N(θ) = (1/N) Σ ℓ(m_θ(ψ_i)·Y_i)`.
pub fn empirical_risk(
    ansatz: &Ansatz,
    theta: &[f64],
    dataset: &QuantumDataset,
    loss: LossFn,
) -> Result<f64> {
    check_ansatz(ansatz, dataset)?;
    let mut total = 0.0;
    for s in dataset.items() {
        let m = margin(ansatz, theta, &s.state)?.value();
        total += loss.value(m * s.label.sign())?;
    }
    Ok(total / dataset.len() as f64)
}

/// Replaces every state by `(σ_{C_i} ⊗ I)|ψ_i⟩`; item `i` draws `C_i` from
/// the stream `(seed, i)`.
pub fn corrupt_dataset(
    dataset: &QuantumDataset,
    channel: &BitflipChannel,
    seed: u64,
) -> Result<QuantumDataset> {
    let mut items = Vec::with_capacity(dataset.len());
    let mut realizations = Vec::with_capacity(dataset.len());
    for (i, s) in dataset.items().iter().enumerate() {
        let c = channel.sample(&mut stream(seed, &[i as u64]));
        items.push(Sample {
            state: s.state.apply_single(&pauli_gate(c)?, 1)?,
            label: s.label,
        });
        realizations.push(c);
    }
    Ok(QuantumDataset {
        n_qubits: dataset.n_qubits(),
        items,
        realizations: Some(realizations),
    })
}

/// `R̃_N(θ)`: the empirical risk of a corrupted dataset.
pub fn corrupted_empirical_risk(
    ansatz: &Ansatz,
    theta: &[f64],
    corrupted: &QuantumDataset,
    loss: LossFn,
) -> Result<f64> {
    if !corrupted.is_corrupted() {
        return Err(Error::InvalidParameter(
            "dataset carries no noise realizations".into(),
        ));
    }
    empirical_risk(ansatz, theta, corrupted, loss)
}

/// `λ = 4p / (1 − 4p)`, defined for `p ∈ [0, 1/4)`.
pub fn lambda(p: f64) -> Result<f64> {
    if !(0.0..0.25).contains(&p) {
        return Err(Error::LambdaDegenerate { p });
    }
    Ok(4.0 * p / (1.0 - 4.0 * p))
}

/// Risk decomposition at one `θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RiskReport {
    /// `R̂_N`.
    pub empirical: f64,
    /// `R̃_N` on a sampled corruption, when one was evaluated.
    pub corrupted: Option<f64>,
    /// `E[R̃_N | data]`, by exact averaging over each `C_i`.
    pub expected_corrupted: f64,
    /// `P̂_N`, the mean quarter-sum of the four conjugated losses.
    pub penalty: f64,
    pub penalty_lower_bound: f64,
    pub lambda: f64,
    /// `|E[R̃_N | data] − (1−4p)(R̂_N + λP̂_N)|`.
    pub identity_residual: f64,
}

/// Exact conditional expectation of the corrupted risk and its split into
/// `(1−4p)·[R̂_N + λ·P̂_N]`.
pub fn expected_corrupted_risk(
    ansatz: &Ansatz,
    theta: &[f64],
    dataset: &QuantumDataset,
    loss: LossFn,
    p: f64,
) -> Result<RiskReport> {
    let lam = lambda(p)?;
    let channel = BitflipChannel::new(p)?;
    check_ansatz(ansatz, dataset)?;
    let w = channel.weights();
    let n = dataset.len() as f64;
    let (mut expected, mut empirical, mut penalty, mut bound) = (0.0, 0.0, 0.0, 0.0);
    for s in dataset.items() {
        let y = s.label.sign();
        let m = conjugated_margins(ansatz, theta, &s.state)?;
        let losses = m
            .iter()
            .map(|mj| loss.value(mj.value() * y))
            .collect::<Result<Vec<_>>>()?;
        expected += losses.iter().zip(w).map(|(l, wj)| wj * l).sum::<f64>();
        empirical += losses[0];
        penalty += losses.iter().sum::<f64>() / 4.0;
        bound += loss.symmetric_third(m[0].value().abs())?;
    }
    let (expected, empirical, penalty, bound) = (expected / n, empirical / n, penalty / n, bound / n);
    let identity = (1.0 - 4.0 * p) * (empirical + lam * penalty);
    let identity_residual = (expected - identity).abs();
    debug_assert!(identity_residual <= 1e-10, "residual {identity_residual}");
    Ok(RiskReport {
        empirical,
        corrupted: None,
        expected_corrupted: expected,
        penalty,
        penalty_lower_bound: bound,
        lambda: lam,
        identity_residual,
    })
}

/// Both sides of the quarter-sum inequality for one zero-sum quadruple.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma2Report {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// `[ℓ(a)+ℓ(b)+ℓ(c)+ℓ(d)]/4` against `[ℓ(|a|/3) + ℓ(−|a|/3)]/2` for
/// `a + b + c + d = 0`.
pub fn lemma2_check(a: f64, b: f64, c: f64, d: f64, loss: LossFn) -> Result<Lemma2Report> {
    let sum = a + b + c + d;
    if sum.abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "quadruple sums to {sum}, not 0"
        )));
    }
    let lhs = (loss.value(a)? + loss.value(b)? + loss.value(c)? + loss.value(d)?) / 4.0;
    let rhs = loss.symmetric_third(a.abs())?;
    Ok(Lemma2Report {
        lhs,
        rhs,
        slack: lhs - rhs,
    })
}

/// How gradients are computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum GradientMethod {
    /// Exact two-term shift rule with shifts of ±π/2 on each rotation angle.
    ParameterShift,
    /// Central differences of the objective with step `h`.
    FiniteDifference { h: f64 },
}

#[derive(Clone, Debug, PartialEq)]
struct Term {
    state: StateVector,
    sign: f64,
    weight: f64,
}

/// A weighted sum `Σ w_k ℓ(m_θ(φ_k)·y_k)` over states `φ_k`; covers the clean,
/// corrupted, expected-corrupted and explicitly regularized risks.
#[derive(Clone, Debug, PartialEq)]
pub struct RiskObjective {
    ansatz: Ansatz,
    loss: LossFn,
    terms: Vec<Term>,
}

impl RiskObjective {
    /// `R̂_N` on the dataset as given (clean or already corrupted).
    pub fn empirical(ansatz: &Ansatz, dataset: &QuantumDataset, loss: LossFn) -> Result<Self> {
        check_ansatz(ansatz, dataset)?;
        let w = 1.0 / dataset.len() as f64;
        let terms = dataset
            .items()
            .iter()
            .map(|s| Term {
                state: s.state.clone(),
                sign: s.label.sign(),
                weight: w,
            })
            .collect();
        Ok(Self {
            ansatz: ansatz.clone(),
            loss,
            terms,
        })
    }

    /// Terms `ℓ(m^j·Y_i)` with per-`j` weights divided by `N`.
    fn conjugated(
        ansatz: &Ansatz,
        dataset: &QuantumDataset,
        loss: LossFn,
        weights: [f64; 4],
    ) -> Result<Self> {
        check_ansatz(ansatz, dataset)?;
        let n = dataset.len() as f64;
        let mut terms = Vec::with_capacity(4 * dataset.len());
        for s in dataset.items() {
            for (j, wj) in weights.iter().enumerate() {
                if *wj == 0.0 {
                    continue;
                }
                terms.push(Term {
                    state: s.state.apply_single(&pauli_gate(j)?, 1)?,
                    sign: s.label.sign(),
                    weight: wj / n,
                });
            }
        }
        Ok(Self {
            ansatz: ansatz.clone(),
            loss,
            terms,
        })
    }

    /// `R̂_N + λ·P̂_N`.
    pub fn regularized(
        ansatz: &Ansatz,
        dataset: &QuantumDataset,
        loss: LossFn,
        lambda: f64,
    ) -> Result<Self> {
        let q = lambda / 4.0;
        Self::conjugated(ansatz, dataset, loss, [1.0 + q, q, q, q])
    }

    /// `E[R̃_N | data]` for bit-flip probability `p`.
    pub fn expected_corrupted(
        ansatz: &Ansatz,
        dataset: &QuantumDataset,
        loss: LossFn,
        p: f64,
    ) -> Result<Self> {
        Self::conjugated(ansatz, dataset, loss, BitflipChannel::new(p)?.weights())
    }

    pub fn n_params(&self) -> usize {
        self.ansatz.n_params()
    }

    fn margins(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let circuit = self.ansatz.circuit(theta)?;
        self.terms
            .iter()
            .map(|t| {
                let s = t.state.apply_circuit(&circuit)?;
                Ok(Margin::from_probability(s.prob_first_qubit_one()?).value())
            })
            .collect()
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        let m = self.margins(theta)?;
        let mut total = 0.0;
        for (t, mk) in self.terms.iter().zip(m) {
            total += t.weight * self.loss.value(mk * t.sign)?;
        }
        Ok(total)
    }

    pub fn gradient(&self, theta: &[f64], method: GradientMethod) -> Result<Vec<f64>> {
        match method {
            GradientMethod::ParameterShift => self.parameter_shift(theta),
            GradientMethod::FiniteDifference { h } => {
                let mut shifted = theta.to_vec();
                (0..theta.len())
                    .map(|k| {
                        shifted[k] = theta[k] + h;
                        let plus = self.value(&shifted)?;
                        shifted[k] = theta[k] - h;
                        let minus = self.value(&shifted)?;
                        shifted[k] = theta[k];
                        Ok((plus - minus) / (2.0 * h))
                    })
                    .collect()
            }
        }
    }

    fn parameter_shift(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let base = self.margins(theta)?;
        let outer: Vec<f64> = self
            .terms
            .iter()
            .zip(&base)
            .map(|(t, m)| t.weight * t.sign * self.loss.derivative(m * t.sign))
            .collect();
        let half_pi = std::f64::consts::FRAC_PI_2;
        let mut shifted = theta.to_vec();
        let mut grad = Vec::with_capacity(theta.len());
        for k in 0..theta.len() {
            shifted[k] = theta[k] + half_pi;
            let plus = self.margins(&shifted)?;
            shifted[k] = theta[k] - half_pi;
            let minus = self.margins(&shifted)?;
            shifted[k] = theta[k];
            grad.push(
                outer
                    .iter()
                    .zip(plus.iter().zip(&minus))
                    .map(|(o, (p, m))| o * 0.5 * (p - m))
                    .sum(),
            );
        }
        Ok(grad)
    }
}

/// Plain gradient descent with random restarts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitConfig {
    pub step_size: f64,
    pub iterations: usize,
    pub gradient: GradientMethod,
    /// Restart 0 starts at `θ = 0`; the others at `N(0, init_scale²)`.
    pub restarts: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            step_size: 0.5,
            iterations: 200,
            gradient: GradientMethod::ParameterShift,
            restarts: 4,
            seed: 0,
            init_scale: 1.0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step_size = {} must be > 0",
                self.step_size
            )));
        }
        if self.iterations == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "iterations and restarts must be ≥ 1".into(),
            ));
        }
        if !(self.init_scale >= 0.0) {
            return Err(Error::InvalidParameter("init_scale must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// Outcome of [`fit`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub best_restart: usize,
    /// Objective before each step, plus the final value, per restart.
    pub traces: Vec<Vec<f64>>,
    /// The iterates matching `traces`, per restart.
    pub theta_traces: Vec<Vec<Vec<f64>>>,
}

struct RunOutcome {
    theta: Vec<f64>,
    objective: f64,
    trace: Vec<f64>,
    theta_trace: Vec<Vec<f64>>,
}

fn descend(objective: &RiskObjective, config: &FitConfig, restart: usize) -> Result<RunOutcome> {
    let n = objective.n_params();
    let mut theta: Vec<f64> = if restart == 0 {
        vec![0.0; n]
    } else {
        let mut rng = stream(config.seed, &[restart as u64]);
        (0..n)
            .map(|_| config.init_scale * rng.sample::<f64, _>(StandardNormal))
            .collect()
    };
    let mut trace = Vec::with_capacity(config.iterations + 1);
    let mut theta_trace = Vec::with_capacity(config.iterations + 1);
    let mut best = (f64::INFINITY, theta.clone());
    for iteration in 0..=config.iterations {
        let value = objective.value(&theta)?;
        trace.push(value);
        theta_trace.push(theta.clone());
        if !value.is_finite() {
            return Err(Error::Diverged { iteration, trace });
        }
        if value < best.0 {
            best = (value, theta.clone());
        }
        if iteration == config.iterations {
            break;
        }
        let grad = objective.gradient(&theta, config.gradient)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { iteration, trace });
        }
        for (t, g) in theta.iter_mut().zip(grad) {
            *t -= config.step_size * g;
        }
    }
    Ok(RunOutcome {
        theta: best.1,
        objective: best.0,
        trace,
        theta_trace,
    })
}

/// Minimizes `objective`; returns the best iterate over all restarts (the
/// lowest restart index wins ties).
pub fn fit(objective: &RiskObjective, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let runs = (0..config.restarts)
        .into_par_iter()
        .map(|r| descend(objective, config, r))
        .collect::<Result<Vec<_>>>()?;
    let mut best_restart = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.objective < runs[best_restart].objective {
            best_restart = r;
        }
    }
    let (traces, theta_traces) = runs
        .iter()
        .map(|r| (r.trace.clone(), r.theta_trace.clone()))
        .unzip();
    Ok(FitResult {
        theta: runs[best_restart].theta.clone(),
        objective: runs[best_restart].objective,
        best_restart,
        traces,
        theta_traces,
    })
}

/// Synthetic data labelled by a planted classifier.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetSpec {
    pub n_qubits: usize,
    pub n_items: usize,
    pub planted_theta: Vec<f64>,
    /// Samples with `|m_{θ*}(ψ)|` below this are rejected.
    pub margin_gap: f64,
    /// Pass product states through a random entangling layer.
    pub entangle: bool,
}

/// Attempts allowed per requested item before a spec is declared infeasible.
pub const MAX_ATTEMPTS_PER_ITEM: usize = 100;

/// Samples random (optionally entangled) states and labels them with
/// `sign(m_{θ*}(ψ))`.
pub fn generate_dataset(spec: &DatasetSpec, seed: u64) -> Result<QuantumDataset> {
    let ansatz = Ansatz::product(spec.n_qubits)?;
    if spec.planted_theta.len() != ansatz.n_params() {
        return Err(Error::Shape {
            expected: ansatz.n_params(),
            actual: spec.planted_theta.len(),
        });
    }
    if spec.n_items == 0 {
        return Err(Error::EmptyInput("n_items = 0".into()));
    }
    if !(spec.margin_gap >= 0.0) {
        return Err(Error::InvalidParameter("margin_gap must be ≥ 0".into()));
    }
    let mut rng = stream(seed, &[]);
    let max_attempts = MAX_ATTEMPTS_PER_ITEM * spec.n_items;
    let mut items = Vec::with_capacity(spec.n_items);
    let mut attempts = 0;
    while items.len() < spec.n_items {
        if attempts == max_attempts {
            return Err(Error::Infeasible {
                accepted: items.len(),
                attempts,
            });
        }
        attempts += 1;
        let mut state = random_product_state(spec.n_qubits, &mut rng)?;
        if spec.entangle && spec.n_qubits > 1 {
            state.apply_circuit_mut(&random_entangled_circuit(spec.n_qubits, 1, &mut rng))?;
        }
        let m = margin(&ansatz, &spec.planted_theta, &state)?;
        if m.value().abs() < spec.margin_gap {
            continue;
        }
        items.push(Sample {
            state,
            label: classify(m),
        });
    }
    QuantumDataset::new(items)
}

/// Mean of `|m_θ(ψ_i)|` over the dataset.
pub fn mean_abs_margin(ansatz: &Ansatz, theta: &[f64], dataset: &QuantumDataset) -> Result<f64> {
    let mut total = 0.0;
    for s in dataset.items() {
        total += margin(ansatz, theta, &s.state)?.value().abs();
    }
    Ok(total / dataset.len() as f64)
}

/// Fraction of items whose predicted label matches.
pub fn accuracy(ansatz: &Ansatz, theta: &[f64], dataset: &QuantumDataset) -> Result<f64> {
    let mut hits = 0usize;
    for s in dataset.items() {
        if classify(margin(ansatz, theta, &s.state)?) == s.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / dataset.len() as f64)
}

/// A clean fit and a corrupted-data fit on the same generated dataset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularizationSetup {
    pub data: DatasetSpec,
    /// Held-out items drawn from the same generator.
    pub test_items: usize,
    pub loss: LossFn,
    pub p: f64,
    pub fit: FitConfig,
    /// Also fit `R̂_N + λ·P̂_N` directly.
    pub fit_regularized: bool,
}

/// Per-fit summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitSummary {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub train_risk: f64,
    /// Absent when no held-out set was available.
    pub test_risk: Option<f64>,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
    /// Mean `|m_θ(ψ_i)|` over the clean training states.
    pub mean_abs_train_margin: f64,
    /// Objective trace of the winning restart.
    pub trace: Vec<f64>,
    /// Iterates of the winning restart.
    pub theta_trace: Vec<Vec<f64>>,
    /// Largest `|E[R̃_N|data] − (1−4p)(R̂_N + λP̂_N)|` over every logged
    /// iterate and the returned `θ`, on the clean training set.
    pub max_identity_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularizationOutcome {
    pub train: QuantumDataset,
    pub corrupted: QuantumDataset,
    pub clean: FitSummary,
    pub noisy: FitSummary,
    pub regularized: Option<FitSummary>,
}

fn summarize(
    ansatz: &Ansatz,
    mut result: FitResult,
    train: &QuantumDataset,
    test: Option<&QuantumDataset>,
    loss: LossFn,
    p: f64,
) -> Result<FitSummary> {
    let theta = result.theta;
    let theta_trace = std::mem::take(&mut result.theta_traces[result.best_restart]);
    let mut max_identity_residual = 0.0f64;
    for t in theta_trace.iter().chain(std::iter::once(&theta)) {
        let report = expected_corrupted_risk(ansatz, t, train, loss, p)?;
        max_identity_residual = max_identity_residual.max(report.identity_residual);
    }
    Ok(FitSummary {
        objective: result.objective,
        train_risk: empirical_risk(ansatz, &theta, train, loss)?,
        test_risk: test
            .map(|t| empirical_risk(ansatz, &theta, t, loss))
            .transpose()?,
        train_accuracy: accuracy(ansatz, &theta, train)?,
        test_accuracy: test.map(|t| accuracy(ansatz, &theta, t)).transpose()?,
        mean_abs_train_margin: mean_abs_margin(ansatz, &theta, train)?,
        trace: std::mem::take(&mut result.traces[result.best_restart]),
        theta_trace,
        max_identity_residual,
        theta,
    })
}

/// Generates data from `seed`, corrupts a copy with bit-flip probability
/// `p`, and fits both with the same optimizer settings. Sub-seeds are
/// derived from `seed`, so `p = 0` reproduces the clean fit exactly.
pub fn run_regularization_trial(
    setup: &RegularizationSetup,
    seed: u64,
) -> Result<RegularizationOutcome> {
    let train = generate_dataset(&setup.data, crate::rng::derive_seed(seed, &[0]))?;
    let test = if setup.test_items > 0 {
        let test_spec = DatasetSpec {
            n_items: setup.test_items,
            ..setup.data.clone()
        };
        Some(generate_dataset(&test_spec, crate::rng::derive_seed(seed, &[1]))?)
    } else {
        None
    };
    run_regularization_on(setup, train, test.as_ref(), seed)
}

/// As [`run_regularization_trial`], on a given training set and optional
/// held-out set; `setup.data` and `setup.test_items` are not used.
/// Corruption and fit sub-seeds are derived from `seed` in the same way.
pub fn run_regularization_on(
    setup: &RegularizationSetup,
    train: QuantumDataset,
    test: Option<&QuantumDataset>,
    seed: u64,
) -> Result<RegularizationOutcome> {
    lambda(setup.p)?;
    let ansatz = Ansatz::product(train.n_qubits())?;
    let channel = BitflipChannel::new(setup.p)?;
    let corrupted = corrupt_dataset(&train, &channel, crate::rng::derive_seed(seed, &[2]))?;
    let fit_config = FitConfig {
        seed: crate::rng::derive_seed(seed, &[3]),
        ..setup.fit
    };

    let clean = fit(&RiskObjective::empirical(&ansatz, &train, setup.loss)?, &fit_config)?;
    let noisy = fit(
        &RiskObjective::empirical(&ansatz, &corrupted, setup.loss)?,
        &fit_config,
    )?;
    let regularized = if setup.fit_regularized {
        let lam = lambda(setup.p)?;
        let obj = RiskObjective::regularized(&ansatz, &train, setup.loss, lam)?;
        Some(fit(&obj, &fit_config)?)
    } else {
        None
    };

    let summary = |r| summarize(&ansatz, r, &train, test, setup.loss, setup.p);
    let clean = summary(clean)?;
    let noisy = summary(noisy)?;
    let regularized = regularized.map(summary).transpose()?;
    Ok(RegularizationOutcome {
        train,
        corrupted,
        clean,
        noisy,
        regularized,
    })
}
