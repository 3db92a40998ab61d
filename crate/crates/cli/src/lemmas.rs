//! `verify-lemmas`: the conditional-margin table identities over random
//! instances, and the quarter-sum loss inequality over random zero-sum
//! quadruples.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use qnoise::analysis::{lemma1_table, LemmaChecks, CHANNEL_TOL};
use qnoise::classifier::Ansatz;
use qnoise::gates::random_state;
use qnoise::rng::stream;
use qnoise::statevec::MAX_ORACLE_QUBITS;
use qnoise::training::{lemma2_check, LossFn};

use crate::config::{options, require};
use crate::error::RunError;
use crate::output::{real, Outcome, Table};

const QUADRUPLE_TOL: f64 = 1e-12;
/// Quadruple entries are drawn from `(−BOUND, BOUND)`.
const QUADRUPLE_BOUND: f64 = 0.45;

options! {
    /// Options for `verify-lemmas`.
    Options {
        trials: "Random (θ, state, μ, τ) instances [default: 1000].",
        /// Largest register size; each instance draws 1..=n_qubits [default: 3].
        n_qubits: usize,
        /// Fix the mean over-rotation angle instead of drawing it from (−π, π).
        #[arg(allow_negative_numbers = true)]
        mu: f64,
        /// Fix the angle jitter instead of drawing it from [0, 2).
        tau: f64,
        /// Random zero-sum quadruples per loss [default: 10000].
        quadruples: usize,
    }
}

#[derive(Debug, Serialize)]
pub struct Config {
    pub seed: u64,
    pub instances: usize,
    pub n_qubits: usize,
    pub mu: Option<f64>,
    pub tau: Option<f64>,
    pub quadruples: usize,
}

impl Config {
    pub fn resolve(o: Options, seed: u64) -> Result<Self, RunError> {
        let cfg = Self {
            seed,
            instances: o.trials.unwrap_or(1000),
            n_qubits: o.n_qubits.unwrap_or(3),
            mu: o.mu,
            tau: o.tau,
            quadruples: o.quadruples.unwrap_or(10_000),
        };
        require(cfg.instances >= 1, "trials", "must be ≥ 1")?;
        require(cfg.quadruples >= 1, "quadruples", "must be ≥ 1")?;
        require(
            (1..=MAX_ORACLE_QUBITS).contains(&cfg.n_qubits),
            "n_qubits",
            "must be between 1 and 10",
        )?;
        require(cfg.mu.is_none_or(f64::is_finite), "mu", "must be finite")?;
        require(
            cfg.tau.is_none_or(|t| t.is_finite() && t >= 0.0),
            "tau",
            "must be finite and ≥ 0",
        )?;
        Ok(cfg)
    }
}

struct Instance {
    n_qubits: usize,
    mu: f64,
    tau: f64,
    margin: f64,
    checks: LemmaChecks,
}

fn instance(cfg: &Config, index: usize) -> qnoise::Result<Instance> {
    let mut rng = stream(cfg.seed, &[0, index as u64]);
    let n = rng.random_range(1..=cfg.n_qubits);
    let ansatz = Ansatz::product(n)?;
    let theta: Vec<f64> = (0..ansatz.n_params())
        .map(|_| rng.random_range(-PI..PI))
        .collect();
    let state = random_state(n, &mut rng)?;
    let mu = cfg.mu.unwrap_or_else(|| rng.random_range(-PI..PI));
    let tau = cfg.tau.unwrap_or_else(|| rng.random_range(0.0..2.0));
    let table = lemma1_table(&ansatz, &theta, &state, mu, tau)?;
    Ok(Instance {
        n_qubits: n,
        mu,
        tau,
        margin: table.margin,
        checks: table.checks,
    })
}

/// Slack distribution of the quarter-sum inequality for one loss.
fn quadruple_slacks(cfg: &Config, loss: LossFn, stream_id: u64) -> qnoise::Result<Vec<f64>> {
    let mut rng = stream(cfg.seed, &[1, stream_id]);
    let mut slacks = Vec::with_capacity(cfg.quadruples);
    while slacks.len() < cfg.quadruples {
        let a = rng.random_range(-QUADRUPLE_BOUND..QUADRUPLE_BOUND);
        let b = rng.random_range(-QUADRUPLE_BOUND..QUADRUPLE_BOUND);
        let c = rng.random_range(-QUADRUPLE_BOUND..QUADRUPLE_BOUND);
        let d: f64 = -(a + b + c);
        if d.abs() >= QUADRUPLE_BOUND {
            continue;
        }
        slacks.push(lemma2_check(a, b, c, d, loss)?.slack);
    }
    Ok(slacks)
}

fn distribution(mut values: Vec<f64>) -> Value {
    values.sort_by(f64::total_cmp);
    let q = |f: f64| values[((values.len() - 1) as f64 * f).round() as usize];
    json!({
        "count": values.len(),
        "min": values[0],
        "q01": q(0.01),
        "median": q(0.5),
        "q99": q(0.99),
        "max": values[values.len() - 1],
        "mean": values.iter().sum::<f64>() / values.len() as f64,
    })
}

fn check(name: &str, worst: f64, holds: bool, kind: &str) -> Value {
    json!({ "check": name, kind: worst, "tolerance": CHANNEL_TOL, "holds": holds })
}

pub fn run(cfg: &Config) -> Result<Outcome, RunError> {
    let instances = (0..cfg.instances)
        .into_par_iter()
        .map(|i| instance(cfg, i))
        .collect::<qnoise::Result<Vec<_>>>()?;

    let mut table = Table::new(&[
        "instance", "n_qubits", "mu", "tau", "margin", "column_sum_residual",
        "unrotated_residual", "x_y_residual", "bound_slack", "overlap_slack",
        "closed_form_residual",
    ]);
    for (i, inst) in instances.iter().enumerate() {
        let c = &inst.checks;
        table.push(vec![
            i.to_string(),
            inst.n_qubits.to_string(),
            real(inst.mu),
            real(inst.tau),
            real(inst.margin),
            real(c.column_sum_residual),
            real(c.unrotated_residual),
            real(c.x_y_residual),
            real(c.bound_slack),
            real(c.overlap_slack),
            real(c.closed_form_residual),
        ]);
    }

    let worst = |f: fn(&LemmaChecks) -> f64| {
        instances.iter().map(|i| f(&i.checks)).fold(0.0, f64::max)
    };
    let least = |f: fn(&LemmaChecks) -> f64| {
        instances
            .iter()
            .map(|i| f(&i.checks))
            .fold(f64::INFINITY, f64::min)
    };
    let zero_sum = worst(|c| c.column_sum_residual);
    let unrotated = worst(|c| c.unrotated_residual);
    let x_y = worst(|c| c.x_y_residual);
    let closed_form = worst(|c| c.closed_form_residual);
    let bound = least(|c| c.bound_slack.min(c.overlap_slack));
    let x_y_failures = instances
        .iter()
        .filter(|i| !i.checks.x_y_equality_holds(CHANNEL_TOL))
        .count();
    let table_checks = [
        check("column_zero_sums", zero_sum, zero_sum <= CHANNEL_TOL, "max_residual"),
        check("m00_m03_equal_m", unrotated, unrotated <= CHANNEL_TOL, "max_residual"),
        check("m01_equals_m02", x_y, x_y <= CHANNEL_TOL, "max_residual"),
        check("m01_closed_form", closed_form, closed_form <= CHANNEL_TOL, "max_residual"),
        check("m01_m02_offset_bound", bound, bound >= -CHANNEL_TOL, "min_slack"),
    ];

    let mut loss_reports = Vec::new();
    let mut quadruples_ok = true;
    for (id, loss) in [LossFn::Hinge, LossFn::Logistic].into_iter().enumerate() {
        let slacks = quadruple_slacks(cfg, loss, id as u64)?;
        let min = slacks.iter().copied().fold(f64::INFINITY, f64::min);
        quadruples_ok &= min >= -QUADRUPLE_TOL;
        loss_reports.push(json!({
            "loss": loss.name(),
            "tolerance": -QUADRUPLE_TOL,
            "holds": min >= -QUADRUPLE_TOL,
            "slack": distribution(slacks),
        }));
    }

    let passed = table_checks.iter().all(|c| c["holds"] == true) && quadruples_ok;
    Ok(Outcome {
        passed,
        summary: json!({
            "instances": cfg.instances,
            "table_checks": table_checks,
            "m01_equals_m02_failures": x_y_failures,
            "quarter_sum_inequality": loss_reports,
        }),
        table,
        artifacts: vec![],
    })
}
