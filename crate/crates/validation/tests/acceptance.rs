//! End-to-end acceptance checks, one test per criterion. Each test prints a
//! single `criterion N: PASS|FAIL` line with the measured figures before
//! asserting, so `cargo test -- --nocapture` gives a compact summary.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use qnoise::analysis::{
    corrupted_margin_exact, corrupted_margin_mc, lemma1_table, negative_control,
    random_entangled_circuit, random_product_circuit, sign_preserved, verify_theorem1,
    InvarianceSetting, NegativeControl, NoiseDraw, Theorem2Constants,
};
use qnoise::classifier::{margin, Ansatz, Label};
use qnoise::gates::{random_state, random_su2, random_unitary4};
use qnoise::noise::{pauli_gate, BitflipChannel, NoiseModel};
use qnoise::rng::{stream, StreamRng};
use qnoise::statevec::{SingleQubitGate, StateVector, TwoQubitGate};
use qnoise::training::{
    corrupt_dataset, corrupted_empirical_risk, expected_corrupted_risk, lemma2_check,
    run_regularization_trial, DatasetSpec, FitConfig, GradientMethod, LossFn, QuantumDataset,
    RegularizationSetup, RiskObjective, Sample,
};

fn report(id: u32, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id}: {verdict} — {detail}");
}

fn random_theta(ansatz: &Ansatz, rng: &mut StreamRng) -> Vec<f64> {
    (0..ansatz.n_params())
        .map(|_| rng.random_range(-PI..PI))
        .collect()
}

fn random_dataset(n_qubits: usize, n_items: usize, rng: &mut StreamRng) -> QuantumDataset {
    let items = (0..n_items)
        .map(|_| Sample {
            state: random_state(n_qubits, rng).unwrap(),
            label: if rng.random::<bool>() {
                Label::Positive
            } else {
                Label::Negative
            },
        })
        .collect();
    QuantumDataset::new(items).unwrap()
}

fn random_loss(rng: &mut StreamRng) -> LossFn {
    if rng.random::<bool>() {
        LossFn::Hinge
    } else {
        LossFn::Logistic
    }
}

#[test]
fn criterion_01_invariance_under_noise_on_other_wires() {
    let start = Instant::now();
    let (mut circuits, mut draws_total, mut worst) = (0, 0, 0.0f64);
    for c in 0..120u64 {
        let mut rng = stream(1, &[c]);
        let n = rng.random_range(4..=6);
        let layers = rng.random_range(1..=3);
        let w = random_entangled_circuit(n, layers, &mut rng);
        let state = random_state(n, &mut rng).unwrap();
        let draws: Vec<NoiseDraw> = (0..100)
            .map(|_| NoiseDraw::random(n, true, &mut rng))
            .collect();
        let r = verify_theorem1(&w, &state, InvarianceSetting::CircuitNoise, &draws).unwrap();
        worst = worst.max(r.max_deviation);
        circuits += 1;
        draws_total += draws.len();
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-12 && elapsed < 60.0;
    report(
        1,
        pass,
        format!("{circuits} circuits, {draws_total} draws, max deviation {worst:.3e} (tol 1e-12), {elapsed:.1}s"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_encoder_noise_and_negative_controls() {
    let (mut worst, mut control_entangled, mut control_wire1) = (0.0f64, 0.0f64, 0.0f64);
    let mut instances = 0;
    for c in 0..120u64 {
        let mut rng = stream(2, &[c]);
        let n = rng.random_range(4..=6);
        let w = random_product_circuit(n, &mut rng);
        let state = random_state(n, &mut rng).unwrap();
        let draws: Vec<NoiseDraw> = (0..100)
            .map(|_| NoiseDraw::random(n, true, &mut rng))
            .collect();
        let r = verify_theorem1(&w, &state, InvarianceSetting::EncoderAndCircuitNoise, &draws)
            .unwrap();
        worst = worst.max(r.max_deviation);
        instances += draws.len();

        let entangled = random_entangled_circuit(n, rng.random_range(1..=3), &mut rng);
        let bad = negative_control(
            &entangled,
            &state,
            NegativeControl::EntangledCircuitWithEncoderNoise,
            &draws[..10],
        )
        .unwrap();
        control_entangled = control_entangled.max(bad.max_deviation);
        let bad = negative_control(
            &w,
            &state,
            NegativeControl::EntanglingNoiseOnFirstWire,
            &draws[..10],
        )
        .unwrap();
        control_wire1 = control_wire1.max(bad.max_deviation);
    }
    let pass = worst <= 1e-12 && control_entangled > 1e-3 && control_wire1 > 1e-3;
    report(
        2,
        pass,
        format!(
            "{instances} product-form instances, max deviation {worst:.3e} (tol 1e-12); \
             negative controls: entangled W {control_entangled:.3e}, CNOT onto wire 1 {control_wire1:.3e} (need > 1e-3)"
        ),
    );
    assert!(pass);
}

struct SweepRow {
    mu_zero: bool,
    constants: Theorem2Constants,
    shrink_mu0: f64,
    m: f64,
    m_tilde: f64,
}

/// The (p, q, μ, τ) grid shared by the containment and sign checks:
/// 5 × 4 × 6 × 3 = 360 points, 20 random (θ, state) pairs each.
fn theorem2_sweep() -> (usize, Vec<SweepRow>) {
    let ps = [0.0, 0.05, 0.1, 0.2, 0.24];
    let qs = [0.0, 0.05, 0.1, 0.2];
    let mus = [0.0, PI / 8.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI];
    let taus = [0.0, 0.2, 0.5];
    let mut rows = Vec::new();
    let mut points = 0;
    for &p in &ps {
        for &q in &qs {
            for &mu in &mus {
                for &tau in &taus {
                    let noise = NoiseModel::new(p, q, mu, tau).unwrap();
                    let constants = Theorem2Constants::from_noise(&noise).unwrap();
                    let shrink_mu0 =
                        (1.0 - 4.0 * p) * (1.0 - 2.0 * q * (1.0 - (-tau * tau / 2.0).exp()));
                    for pair in 0..20u64 {
                        let mut rng = stream(3, &[points as u64, pair]);
                        let n = rng.random_range(1..=4);
                        let ansatz = Ansatz::product(n).unwrap();
                        let theta = random_theta(&ansatz, &mut rng);
                        let state = random_state(n, &mut rng).unwrap();
                        let m = margin(&ansatz, &theta, &state).unwrap().value();
                        let m_tilde = corrupted_margin_exact(&ansatz, &theta, &state, &noise)
                            .unwrap()
                            .exact;
                        rows.push(SweepRow {
                            mu_zero: mu == 0.0,
                            constants,
                            shrink_mu0,
                            m,
                            m_tilde,
                        });
                    }
                    points += 1;
                }
            }
        }
    }
    (points, rows)
}

#[test]
fn criterion_03_interval_containment() {
    let start = Instant::now();
    let (points, rows) = theorem2_sweep();
    let min_slack = rows
        .iter()
        .map(|r| r.constants.containment_slack(r.m_tilde, r.m))
        .fold(f64::INFINITY, f64::min);
    let mu0_residual = rows
        .iter()
        .filter(|r| r.mu_zero)
        .map(|r| (r.m_tilde - r.shrink_mu0 * r.m).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = points >= 200 && min_slack >= -1e-10 && mu0_residual <= 1e-12 && elapsed < 120.0;
    report(
        3,
        pass,
        format!(
            "{points} grid points × 20 pairs, min containment slack {min_slack:.3e} (tol -1e-10), \
             μ=0 residual {mu0_residual:.3e} (tol 1e-12), {elapsed:.1}s"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_sign_preservation() {
    let (_, rows) = theorem2_sweep();
    let mut applicable = 0;
    let mut violations = 0;
    for r in &rows {
        if let Some(ok) = sign_preserved(
            &r.constants,
            qnoise::classifier::Margin::from_probability(r.m + 0.5),
            r.m_tilde,
        ) {
            applicable += 1;
            if !ok {
                violations += 1;
            }
        }
    }
    let pass = violations == 0 && applicable > 0;
    report(
        4,
        pass,
        format!("{applicable} rows with |m| > δ, {violations} sign violations"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_monte_carlo_agrees_with_exact() {
    let start = Instant::now();
    let configs = 500u64;
    let trials = 100_000;
    let mut within = 0;
    for c in 0..configs {
        let mut rng = stream(5, &[c]);
        let n = rng.random_range(1..=3);
        let ansatz = Ansatz::product(n).unwrap();
        let theta = random_theta(&ansatz, &mut rng);
        let state = random_state(n, &mut rng).unwrap();
        let noise = NoiseModel::new(
            rng.random_range(0.01..0.25),
            rng.random_range(0.01..=1.0 / 3.0),
            rng.random_range(-PI..PI),
            rng.random_range(0.0..1.0),
        )
        .unwrap();
        let exact = corrupted_margin_exact(&ansatz, &theta, &state, &noise)
            .unwrap()
            .exact;
        let mc = corrupted_margin_mc(&ansatz, &theta, &state, &noise, trials, c).unwrap();
        if (mc.estimate - exact).abs() <= 5.0 * mc.stderr {
            within += 1;
        }
    }
    let frac = within as f64 / configs as f64;
    let elapsed = start.elapsed().as_secs_f64();
    let pass = frac >= 0.99 && elapsed < 300.0;
    report(
        5,
        pass,
        format!("{within}/{configs} configs within 5 SE at {trials} trials (need ≥ 99%), {elapsed:.1}s"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_conditional_margin_identities() {
    let tol = 1e-10;
    let instances = 10_000u64;
    let (mut zero_sum, mut unrotated, mut x_y, mut bound) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY);
    let mut x_y_failures = 0;
    for c in 0..instances {
        let mut rng = stream(6, &[c]);
        let n = rng.random_range(1..=4);
        let ansatz = Ansatz::product(n).unwrap();
        let theta = random_theta(&ansatz, &mut rng);
        let state = random_state(n, &mut rng).unwrap();
        let mu = rng.random_range(-PI..PI);
        let tau = rng.random_range(0.0..2.0);
        let t = lemma1_table(&ansatz, &theta, &state, mu, tau).unwrap().checks;
        zero_sum = zero_sum.max(t.column_sum_residual);
        unrotated = unrotated.max(t.unrotated_residual);
        x_y = x_y.max(t.x_y_residual);
        bound = bound.min(t.bound_slack.min(t.overlap_slack));
        if !t.x_y_equality_holds(tol) {
            x_y_failures += 1;
        }
    }
    let subchecks = [
        ("column zero-sums", zero_sum <= tol, format!("max {zero_sum:.3e}")),
        ("m00 = m03 = m", unrotated <= tol, format!("max {unrotated:.3e}")),
        (
            "m01 = m02",
            x_y <= tol,
            format!("max {x_y:.3e}, {x_y_failures}/{instances} instances fail"),
        ),
        ("m01/m02 offset bound", bound >= -tol, format!("min slack {bound:.3e}")),
    ];
    let pass = subchecks.iter().all(|s| s.1);
    let detail = subchecks
        .iter()
        .map(|(name, ok, d)| format!("{name}: {} ({d})", if *ok { "ok" } else { "FAIL" }))
        .collect::<Vec<_>>()
        .join("; ");
    report(6, pass, format!("{instances} instances; {detail}"));
    assert!(pass);
}

/// Independent per-item evaluation of `E[R̃|data]`, `R̂` and `P̂` that flips
/// each state explicitly.
fn direct_risk_terms(
    ansatz: &Ansatz,
    theta: &[f64],
    data: &QuantumDataset,
    loss: LossFn,
    p: f64,
) -> (f64, f64, f64) {
    let weights = [1.0 - 3.0 * p, p, p, p];
    let (mut expected, mut empirical, mut penalty) = (0.0, 0.0, 0.0);
    for s in data.items() {
        for (j, w) in weights.iter().enumerate() {
            let flipped = s.state.apply_single(&pauli_gate(j).unwrap(), 1).unwrap();
            let m = margin(ansatz, theta, &flipped).unwrap().value();
            let l = loss.value(m * s.label.sign()).unwrap();
            expected += w * l;
            penalty += l / 4.0;
            if j == 0 {
                empirical += l;
            }
        }
    }
    let n = data.len() as f64;
    (expected / n, empirical / n, penalty / n)
}

#[test]
fn criterion_07_and_08_corrupted_risk_identity_and_penalty_bound() {
    let tuples = 1_000u64;
    let (mut identity_worst, mut report_worst, mut bound_worst) = (0.0f64, 0.0f64, f64::INFINITY);
    for c in 0..tuples {
        let mut rng = stream(7, &[c]);
        let n = rng.random_range(1..=3);
        let ansatz = Ansatz::product(n).unwrap();
        let theta = random_theta(&ansatz, &mut rng);
        let data = random_dataset(n, rng.random_range(1..=8), &mut rng);
        let loss = random_loss(&mut rng);
        let p = rng.random_range(0.0..0.25);
        let r = expected_corrupted_risk(&ansatz, &theta, &data, loss, p).unwrap();
        let (expected, empirical, penalty) = direct_risk_terms(&ansatz, &theta, &data, loss, p);
        let lam = 4.0 * p / (1.0 - 4.0 * p);
        identity_worst =
            identity_worst.max((expected - (1.0 - 4.0 * p) * (empirical + lam * penalty)).abs());
        report_worst = report_worst.max((r.expected_corrupted - expected).abs());
        bound_worst = bound_worst.min(r.penalty - r.penalty_lower_bound);
    }

    let spot_checks = 20u64;
    let replicates = 100_000u64;
    let mut spot_within = 0;
    for c in 0..spot_checks {
        let mut rng = stream(71, &[c]);
        let n = rng.random_range(1..=2);
        let ansatz = Ansatz::product(n).unwrap();
        let theta = random_theta(&ansatz, &mut rng);
        let data = random_dataset(n, rng.random_range(2..=4), &mut rng);
        let loss = random_loss(&mut rng);
        let p = rng.random_range(0.02..0.24);
        let exact = expected_corrupted_risk(&ansatz, &theta, &data, loss, p)
            .unwrap()
            .expected_corrupted;
        let channel = BitflipChannel::new(p).unwrap();
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for seed in 0..replicates {
            let corrupted = corrupt_dataset(&data, &channel, seed).unwrap();
            let r = corrupted_empirical_risk(&ansatz, &theta, &corrupted, loss).unwrap();
            sum += r;
            sum_sq += r * r;
        }
        let nrep = replicates as f64;
        let mean = sum / nrep;
        let var = (sum_sq - sum * mean) / (nrep - 1.0);
        let se = (var / nrep).sqrt();
        if (mean - exact).abs() <= 5.0 * se {
            spot_within += 1;
        }
    }
    let pass7 = identity_worst <= 1e-10 && report_worst <= 1e-10 && spot_within == spot_checks;
    report(
        7,
        pass7,
        format!(
            "{tuples} tuples, identity residual {identity_worst:.3e}, library vs direct {report_worst:.3e} (tol 1e-10); \
             {spot_within}/{spot_checks} spot checks within 5 SE over {replicates} corruption seeds"
        ),
    );

    let quadruples = 100_000u64;
    let mut lemma2_worst = f64::INFINITY;
    for loss in [LossFn::Hinge, LossFn::Logistic] {
        let mut rng = stream(8, &[loss as u64]);
        let mut done = 0;
        while done < quadruples {
            let a = rng.random_range(-0.45..0.45);
            let b = rng.random_range(-0.45..0.45);
            let c = rng.random_range(-0.45..0.45);
            let d: f64 = -(a + b + c);
            if d.abs() >= 0.45 {
                continue;
            }
            lemma2_worst = lemma2_worst.min(lemma2_check(a, b, c, d, loss).unwrap().slack);
            done += 1;
        }
    }
    let pass8 = bound_worst >= -1e-10 && lemma2_worst >= -1e-12;
    report(
        8,
        pass8,
        format!(
            "penalty minus lower bound ≥ {bound_worst:.3e} (tol -1e-10); \
             min quarter-sum slack {lemma2_worst:.3e} over {quadruples} quadruples per loss (tol -1e-12)"
        ),
    );
    assert!(pass7 && pass8);
}

/// The fixed small-N task: 20 entangled two-qubit items with a margin gap,
/// logistic loss, bit-flip probability 0.1.
fn regularization_setup() -> RegularizationSetup {
    RegularizationSetup {
        data: DatasetSpec {
            n_qubits: 2,
            n_items: 20,
            planted_theta: vec![0.4, 1.1, -0.3, 0.2, 0.5, 0.9],
            margin_gap: 0.15,
            entangle: true,
        },
        test_items: 200,
        loss: LossFn::Logistic,
        p: 0.1,
        fit: FitConfig {
            step_size: 0.5,
            iterations: 200,
            restarts: 3,
            ..FitConfig::default()
        },
        fit_regularized: false,
    }
}

#[test]
fn criterion_09_noisy_fit_shrinks_training_margins() {
    let start = Instant::now();
    let setup = regularization_setup();
    let seeds = 50u64;
    let mut wins = 0;
    let (mut clean_sum, mut noisy_sum) = (0.0, 0.0);
    for seed in 0..seeds {
        let o = run_regularization_trial(&setup, seed).unwrap();
        clean_sum += o.clean.mean_abs_train_margin;
        noisy_sum += o.noisy.mean_abs_train_margin;
        if o.noisy.mean_abs_train_margin < o.clean.mean_abs_train_margin {
            wins += 1;
        }
    }
    let frac = wins as f64 / seeds as f64;
    let elapsed = start.elapsed().as_secs_f64();
    let pass = frac >= 0.9 && elapsed < 600.0;
    report(
        9,
        pass,
        format!(
            "noisy < clean on {wins}/{seeds} seeds (need ≥ 90%); mean |margin| clean {:.4}, noisy {:.4}; {elapsed:.1}s",
            clean_sum / seeds as f64,
            noisy_sum / seeds as f64
        ),
    );
    assert!(pass);
}

// Kronecker oracle: plain row-major complex matrices, built without the
// library's strided kernels.

type Mat = Vec<Vec<Complex64>>;

fn eye(dim: usize) -> Mat {
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
                .collect()
        })
        .collect()
}

fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![Complex64::new(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn matvec(a: &Mat, v: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

fn single_mat(g: &SingleQubitGate) -> Mat {
    g.matrix().iter().map(|r| r.to_vec()).collect()
}

fn two_mat(g: &TwoQubitGate) -> Mat {
    g.matrix().iter().map(|r| r.to_vec()).collect()
}

/// `I ⊗ … ⊗ G ⊗ … ⊗ I` with `G` starting at 1-based `wire` (MSB first).
fn embed(g: &Mat, wire: usize, span: usize, n: usize) -> Mat {
    let left = eye(1 << (wire - 1));
    let right = eye(1 << (n + 1 - wire - span));
    kron(&kron(&left, g), &right)
}

/// Permutation matrix `P` with `P|b_1 … b_n⟩ = |b_{π(1)} … b_{π(n)}⟩`, where
/// `perm[k]` is the source wire (0-based) of target wire `k`.
fn permutation(perm: &[usize]) -> Mat {
    let n = perm.len();
    let dim = 1 << n;
    let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for src in 0..dim {
        let bit = |idx: usize, w: usize| (idx >> (n - 1 - w)) & 1;
        let dst = (0..n).fold(0, |acc, k| (acc << 1) | bit(src, perm[k]));
        out[dst][src] = Complex64::new(1.0, 0.0);
    }
    out
}

fn transpose(a: &Mat) -> Mat {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| a[j][i]).collect()).collect()
}

/// Full matrix of a two-qubit gate on `(a, b)`: move `a, b` to wires 1, 2,
/// apply `G ⊗ I`, move back.
fn two_qubit_full(g: &TwoQubitGate, a: usize, b: usize, n: usize) -> Mat {
    let mut perm = vec![a - 1, b - 1];
    perm.extend((0..n).filter(|&w| w != a - 1 && w != b - 1));
    let p = permutation(&perm);
    matmul(&transpose(&p), &matmul(&embed(&two_mat(g), 1, 2, n), &p))
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn criterion_10_engine_oracles() {
    let cases = 10_000u64;
    let (mut single_worst, mut two_worst) = (0.0f64, 0.0f64);
    for c in 0..cases {
        let mut rng = stream(10, &[c]);
        let n = rng.random_range(1..=4);
        let state: StateVector = random_state(n, &mut rng).unwrap();
        let g = random_su2(&mut rng);
        let wire = rng.random_range(1..=n);
        let expected = matvec(&embed(&single_mat(&g), wire, 1, n), state.amplitudes());
        let got = state.apply_single(&g, wire).unwrap();
        single_worst = single_worst.max(max_diff(got.amplitudes(), &expected));
        if n >= 2 {
            let g2 = random_unitary4(&mut rng);
            let a = rng.random_range(1..=n);
            let b = loop {
                let b = rng.random_range(1..=n);
                if b != a {
                    break b;
                }
            };
            let expected = matvec(&two_qubit_full(&g2, a, b, n), state.amplitudes());
            let got = state.apply_two(&g2, (a, b)).unwrap();
            two_worst = two_worst.max(max_diff(got.amplitudes(), &expected));
        }
    }

    let configs = 1_000u64;
    let mut grad_worst = 0.0f64;
    for c in 0..configs {
        let mut rng = stream(11, &[c]);
        let n = rng.random_range(1..=3);
        let ansatz = Ansatz::product(n).unwrap();
        let theta = random_theta(&ansatz, &mut rng);
        let data = random_dataset(n, rng.random_range(1..=6), &mut rng);
        let objective = RiskObjective::empirical(&ansatz, &data, LossFn::Logistic).unwrap();
        let ps = objective
            .gradient(&theta, GradientMethod::ParameterShift)
            .unwrap();
        let fd = objective
            .gradient(&theta, GradientMethod::FiniteDifference { h: 1e-5 })
            .unwrap();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = ps.iter().zip(&fd).map(|(a, b)| a - b).collect();
        grad_worst = grad_worst.max(norm(&diff) / norm(&ps));
    }
    let pass = single_worst <= 1e-12 && two_worst <= 1e-12 && grad_worst <= 1e-5;
    report(
        10,
        pass,
        format!(
            "{cases} cases: single-qubit {single_worst:.3e}, two-qubit {two_worst:.3e} (tol 1e-12); \
             {configs} logistic configs: max relative gradient error {grad_worst:.3e} (tol 1e-5)"
        ),
    );
    assert!(pass);
}
