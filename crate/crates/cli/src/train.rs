//! `train`: clean, noisy-data and regularized fits on a synthetic or loaded
//! dataset, with the corrupted-risk identity checked at every iterate.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use qnoise::dataset_io::{read_dataset, write_dataset};
use qnoise::rng::derive_seed;
use qnoise::training::{
    run_regularization_on, run_regularization_trial, DatasetSpec, FitConfig, FitSummary,
    GradientMethod, LossFn, QuantumDataset, RegularizationOutcome, RegularizationSetup,
};

use crate::config::{options, require};
use crate::error::RunError;
use crate::output::{real, Outcome, Table};

const IDENTITY_TOL: f64 = 1e-10;

/// Planted parameters used when `n_qubits = 2` and none are given.
const DEFAULT_PLANTED: [f64; 6] = [0.4, 1.1, -0.3, 0.2, 0.5, 0.9];

options! {
    /// Options for `train`.
    Options {
        trials: "Independent repetitions of the experiment [default: 1].",
        /// Read training data from this file instead of generating it.
        dataset: PathBuf,
        /// Register size of generated data [default: 2].
        n_qubits: usize,
        /// Training items to generate [default: 20].
        n_items: usize,
        /// Parameters of the labelling classifier, 3 per qubit
        /// [default for 2 qubits: 0.4,1.1,-0.3,0.2,0.5,0.9].
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        planted_theta: Vec<f64>,
        /// Reject generated states whose planted |margin| is below this [default: 0.15].
        margin_gap: f64,
        /// Pass generated states through a random entangling layer [default: true].
        entangle: bool,
        /// Held-out items drawn from the same generator; 0 disables [default: 200].
        test_items: usize,
        /// hinge or logistic [default: logistic].
        loss: String,
        /// Bit-flip probability of the data corruption, in [0, 1/4) [default: 0.1].
        p: f64,
        /// Gradient-descent step size [default: 0.5].
        step_size: f64,
        /// Gradient steps per restart [default: 200].
        iterations: usize,
        /// Restarts; the first starts at θ = 0 [default: 3].
        restarts: usize,
        /// Standard deviation of the random restart points [default: 1.0].
        init_scale: f64,
        /// parameter-shift or finite-difference [default: parameter-shift].
        gradient: String,
        /// Step of the central finite differences [default: 1e-5].
        fd_step: f64,
        /// Also minimize R̂ + λ·P̂ directly [default: true].
        fit_regularized: bool,
    }
}

#[derive(Debug, Serialize)]
pub struct Config {
    pub seed: u64,
    pub trials: usize,
    pub dataset: Option<PathBuf>,
    pub setup: RegularizationSetup,
    #[serde(skip)]
    loaded: Option<QuantumDataset>,
}

impl Config {
    pub fn resolve(o: Options, seed: u64) -> Result<Self, RunError> {
        let n_qubits = o.n_qubits.unwrap_or(2);
        require(
            (1..=qnoise::statevec::MAX_ORACLE_QUBITS).contains(&n_qubits),
            "n_qubits",
            "must be between 1 and 10",
        )?;
        let planted_theta = match (o.planted_theta, n_qubits) {
            (Some(t), _) => t,
            (None, 2) => DEFAULT_PLANTED.to_vec(),
            (None, _) => {
                return Err(RunError::Usage(
                    "missing required key `planted_theta` (no default for n_qubits ≠ 2)".into(),
                ))
            }
        };
        require(
            planted_theta.len() == 3 * n_qubits,
            "planted_theta",
            "must have 3 entries per qubit",
        )?;
        let loss = LossFn::parse(o.loss.as_deref().unwrap_or("logistic"))
            .map_err(|e| RunError::Usage(format!("`loss`: {e}")))?;
        let fd_step = o.fd_step.unwrap_or(1e-5);
        require(fd_step > 0.0 && fd_step.is_finite(), "fd_step", "must be > 0")?;
        let gradient = match o.gradient.as_deref().unwrap_or("parameter-shift") {
            "parameter-shift" => GradientMethod::ParameterShift,
            "finite-difference" => GradientMethod::FiniteDifference { h: fd_step },
            other => {
                return Err(RunError::Usage(format!(
                    "`gradient` must be parameter-shift or finite-difference, not `{other}`"
                )))
            }
        };
        let fit = FitConfig {
            step_size: o.step_size.unwrap_or(0.5),
            iterations: o.iterations.unwrap_or(200),
            gradient,
            restarts: o.restarts.unwrap_or(3),
            seed: 0,
            init_scale: o.init_scale.unwrap_or(1.0),
        };
        fit.validate()
            .map_err(|e| RunError::Usage(format!("fit settings: {e}")))?;
        let p = o.p.unwrap_or(0.1);
        require((0.0..0.25).contains(&p), "p", "must lie in [0, 1/4)")?;
        let margin_gap = o.margin_gap.unwrap_or(0.15);
        require(margin_gap >= 0.0, "margin_gap", "must be ≥ 0")?;
        let n_items = o.n_items.unwrap_or(20);
        require(n_items >= 1, "n_items", "must be ≥ 1")?;
        let trials = o.trials.unwrap_or(1);
        require(trials >= 1, "trials", "must be ≥ 1")?;

        let loaded = o
            .dataset
            .as_ref()
            .map(|path| {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    RunError::Usage(format!("cannot read dataset {}: {e}", path.display()))
                })?;
                read_dataset(&text).map_err(|e| {
                    RunError::Usage(format!("invalid dataset {}: {e}", path.display()))
                })
            })
            .transpose()?;
        if let Some(data) = &loaded {
            require(
                data.n_qubits() <= qnoise::statevec::MAX_ORACLE_QUBITS,
                "dataset",
                "has more than 10 qubits",
            )?;
        }

        Ok(Self {
            seed,
            trials,
            dataset: o.dataset,
            setup: RegularizationSetup {
                data: DatasetSpec {
                    n_qubits,
                    n_items,
                    planted_theta,
                    margin_gap,
                    entangle: o.entangle.unwrap_or(true),
                },
                test_items: o.test_items.unwrap_or(200),
                loss,
                p,
                fit,
                fit_regularized: o.fit_regularized.unwrap_or(true),
            },
            loaded,
        })
    }
}

fn fit_json(f: &FitSummary) -> serde_json::Value {
    json!({
        "theta": f.theta,
        "objective": f.objective,
        "train_risk": f.train_risk,
        "test_risk": f.test_risk,
        "train_accuracy": f.train_accuracy,
        "test_accuracy": f.test_accuracy,
        "mean_abs_train_margin": f.mean_abs_train_margin,
        "max_identity_residual": f.max_identity_residual,
        "iterations_logged": f.trace.len(),
    })
}

fn fits(o: &RegularizationOutcome) -> Vec<(&'static str, &FitSummary)> {
    let mut out = vec![("clean", &o.clean), ("noisy", &o.noisy)];
    if let Some(r) = &o.regularized {
        out.push(("regularized", r));
    }
    out
}

pub fn run(cfg: &Config) -> Result<Outcome, RunError> {
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(cfg.seed, &[t as u64]);
            match &cfg.loaded {
                Some(data) => run_regularization_on(&cfg.setup, data.clone(), None, seed),
                None => run_regularization_trial(&cfg.setup, seed),
            }
        })
        .collect::<qnoise::Result<Vec<_>>>()?;

    let n_params = outcomes[0].clean.theta.len();
    let mut header: Vec<String> = ["trial", "fit", "iteration", "objective"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..n_params).map(|k| format!("theta_{k}")));
    let mut table = Table::new(&header);
    let mut trials_json = Vec::new();
    let (mut shrunk, mut worst_residual) = (0usize, 0.0f64);
    let (mut clean_margin, mut noisy_margin) = (0.0, 0.0);
    for (t, o) in outcomes.iter().enumerate() {
        for (name, f) in fits(o) {
            worst_residual = worst_residual.max(f.max_identity_residual);
            for (i, (obj, theta)) in f.trace.iter().zip(&f.theta_trace).enumerate() {
                let mut row = vec![t.to_string(), name.to_string(), i.to_string(), real(*obj)];
                row.extend(theta.iter().map(|x| real(*x)));
                table.push(row);
            }
        }
        let below = o.noisy.mean_abs_train_margin < o.clean.mean_abs_train_margin;
        shrunk += usize::from(below);
        clean_margin += o.clean.mean_abs_train_margin;
        noisy_margin += o.noisy.mean_abs_train_margin;
        trials_json.push(json!({
            "trial": t,
            "seed": derive_seed(cfg.seed, &[t as u64]),
            "train_items": o.train.len(),
            "corruption_outcomes": o.corrupted.realizations(),
            "fits": fits(o).into_iter().map(|(n, f)| (n.to_string(), fit_json(f))).collect::<serde_json::Map<_, _>>(),
            "noisy_margin_below_clean": below,
        }));
    }
    let n = outcomes.len() as f64;
    let identity_ok = worst_residual <= IDENTITY_TOL;
    Ok(Outcome {
        passed: identity_ok,
        summary: json!({
            "identity": { "max_residual": worst_residual, "tolerance": IDENTITY_TOL, "holds": identity_ok },
            "margin_shrinkage": {
                "trials": outcomes.len(),
                "noisy_below_clean": shrunk,
                "mean_abs_train_margin_clean": clean_margin / n,
                "mean_abs_train_margin_noisy": noisy_margin / n,
            },
            "trials": trials_json,
        }),
        table,
        artifacts: vec![("dataset.txt", write_dataset(&outcomes[0].train))],
    })
}
