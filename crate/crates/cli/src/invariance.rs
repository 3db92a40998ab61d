//! `verify-theorem1`: the first-qubit readout must not depend on noise acting
//! on wires 2..n, draw by draw.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use qnoise::analysis::{
    negative_control, random_entangled_circuit, random_product_circuit, verify_theorem1,
    InvarianceSetting, NegativeControl, NoiseDraw, LINALG_TOL,
};
use qnoise::gates::random_state;
use qnoise::rng::stream;

use crate::config::{options, require};
use crate::error::RunError;
use crate::output::{real, Outcome, Table};

/// A negative control counts as having shown a violation above this.
const VIOLATION_THRESHOLD: f64 = 1e-3;

options! {
    /// Options for `verify-theorem1`.
    Options {
        trials: "Noise draws per circuit [default: 100].",
        /// Register size, at least 2 [default: 4].
        n_qubits: usize,
        /// Entangling layers in each random circuit [default: 2].
        layers: usize,
        /// Random circuits, each with its own input state [default: 10].
        circuits: usize,
        /// Include a two-qubit gate among wires 2..n in every noise draw [default: true].
        entangle_noise: bool,
        /// Hypothesis violations to run as expected failures:
        /// none, entangled-circuit, first-wire-noise or both [default: both].
        negative_control: String,
    }
}

#[derive(Debug, Serialize)]
pub struct Config {
    pub seed: u64,
    pub draws: usize,
    pub n_qubits: usize,
    pub layers: usize,
    pub circuits: usize,
    pub entangle_noise: bool,
    pub negative_controls: Vec<NegativeControl>,
}

impl Config {
    pub fn resolve(o: Options, seed: u64) -> Result<Self, RunError> {
        let cfg = Self {
            seed,
            draws: o.trials.unwrap_or(100),
            n_qubits: o.n_qubits.unwrap_or(4),
            layers: o.layers.unwrap_or(2),
            circuits: o.circuits.unwrap_or(10),
            entangle_noise: o.entangle_noise.unwrap_or(true),
            negative_controls: match o.negative_control.as_deref().unwrap_or("both") {
                "none" => vec![],
                "entangled-circuit" => vec![NegativeControl::EntangledCircuitWithEncoderNoise],
                "first-wire-noise" => vec![NegativeControl::EntanglingNoiseOnFirstWire],
                "both" => vec![
                    NegativeControl::EntangledCircuitWithEncoderNoise,
                    NegativeControl::EntanglingNoiseOnFirstWire,
                ],
                other => {
                    return Err(RunError::Usage(format!(
                        "`negative_control` must be none, entangled-circuit, first-wire-noise or both, not `{other}`"
                    )))
                }
            },
        };
        require(
            (2..=qnoise::statevec::MAX_QUBITS).contains(&cfg.n_qubits),
            "n_qubits",
            "must be between 2 and 20",
        )?;
        require(cfg.draws >= 1, "trials", "must be ≥ 1")?;
        require(cfg.layers >= 1, "layers", "must be ≥ 1")?;
        require(cfg.circuits >= 1, "circuits", "must be ≥ 1")?;
        Ok(cfg)
    }
}

fn control_name(kind: NegativeControl) -> &'static str {
    match kind {
        NegativeControl::EntangledCircuitWithEncoderNoise => "entangled-circuit",
        NegativeControl::EntanglingNoiseOnFirstWire => "first-wire-noise",
    }
}

struct CircuitRun {
    circuit_noise: Vec<f64>,
    encoder_noise: Vec<f64>,
    controls: Vec<Vec<f64>>,
}

fn run_circuit(cfg: &Config, index: usize) -> qnoise::Result<CircuitRun> {
    let n = cfg.n_qubits;
    let mut rng = stream(cfg.seed, &[index as u64]);
    let entangled = random_entangled_circuit(n, cfg.layers, &mut rng);
    let product = random_product_circuit(n, &mut rng);
    let state = random_state(n, &mut rng)?;
    let draws: Vec<NoiseDraw> = (0..cfg.draws)
        .map(|_| NoiseDraw::random(n, cfg.entangle_noise, &mut rng))
        .collect();
    let circuit_noise =
        verify_theorem1(&entangled, &state, InvarianceSetting::CircuitNoise, &draws)?;
    let encoder_noise = verify_theorem1(
        &product,
        &state,
        InvarianceSetting::EncoderAndCircuitNoise,
        &draws,
    )?;
    let controls = cfg
        .negative_controls
        .iter()
        .map(|&kind| negative_control(&entangled, &state, kind, &draws).map(|r| r.deviations))
        .collect::<qnoise::Result<_>>()?;
    Ok(CircuitRun {
        circuit_noise: circuit_noise.deviations,
        encoder_noise: encoder_noise.deviations,
        controls,
    })
}

fn max(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

pub fn run(cfg: &Config) -> Result<Outcome, RunError> {
    let runs = (0..cfg.circuits)
        .into_par_iter()
        .map(|c| run_circuit(cfg, c))
        .collect::<qnoise::Result<Vec<_>>>()?;

    let mut table = Table::new(&["circuit", "case", "draw", "deviation", "hypothesis_holds"]);
    for (c, r) in runs.iter().enumerate() {
        let mut cases = vec![
            ("circuit-noise", &r.circuit_noise, true),
            ("encoder-and-circuit-noise", &r.encoder_noise, true),
        ];
        for (kind, devs) in cfg.negative_controls.iter().zip(&r.controls) {
            cases.push((control_name(*kind), devs, false));
        }
        for (case, devs, holds) in cases {
            for (d, dev) in devs.iter().enumerate() {
                table.push(vec![
                    c.to_string(),
                    case.to_string(),
                    d.to_string(),
                    real(*dev),
                    holds.to_string(),
                ]);
            }
        }
    }

    let worst_circuit = runs.iter().map(|r| max(&r.circuit_noise)).fold(0.0, f64::max);
    let worst_encoder = runs.iter().map(|r| max(&r.encoder_noise)).fold(0.0, f64::max);
    let controls: Vec<_> = cfg
        .negative_controls
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let worst = runs.iter().map(|r| max(&r.controls[k])).fold(0.0, f64::max);
            json!({
                "case": control_name(kind),
                "expected_violation": true,
                "max_deviation": worst,
                "violation_detected": worst > VIOLATION_THRESHOLD,
            })
        })
        .collect();
    let passed = worst_circuit <= LINALG_TOL && worst_encoder <= LINALG_TOL;
    Ok(Outcome {
        passed,
        summary: json!({
            "tolerance": LINALG_TOL,
            "draws_per_circuit": cfg.draws,
            "circuit_noise": { "max_deviation": worst_circuit, "holds": worst_circuit <= LINALG_TOL },
            "encoder_and_circuit_noise": { "max_deviation": worst_encoder, "holds": worst_encoder <= LINALG_TOL },
            "negative_controls": controls,
        }),
        table,
        artifacts: vec![],
    })
}
