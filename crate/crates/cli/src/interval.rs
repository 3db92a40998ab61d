//! `verify-theorem2`: over a grid of noise parameters, the exact corrupted
//! margin must lie in `η·[m − δ, m + δ]`, agree with Monte Carlo, and keep
//! the sign of `m` whenever `|m| > δ` and `η > 0`.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use qnoise::analysis::{
    corrupted_margin_exact, corrupted_margin_mc, sign_preserved, Theorem2Constants, CHANNEL_TOL,
    LINALG_TOL,
};
use qnoise::classifier::{margin, Ansatz};
use qnoise::gates::random_state;
use qnoise::noise::NoiseModel;
use qnoise::rng::{derive_seed, stream};
use qnoise::statevec::MAX_ORACLE_QUBITS;

use crate::config::{options, require};
use crate::error::RunError;
use crate::output::{real, Outcome, Table};

/// Monte Carlo agreement allows this many standard errors…
const MC_SIGMAS: f64 = 5.0;
/// …plus this absolute slack, for noise settings where every trial is
/// identical and the standard error is zero.
const MC_FLOOR: f64 = 1e-12;

options! {
    /// Options for `verify-theorem2`.
    Options {
        trials: "Monte Carlo trials per row [default: 20000].",
        /// Bit-flip probabilities, each in [0, 1/3] [default: 0,0.05,0.1,0.2,0.3].
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        p_values: Vec<f64>,
        /// Rotation-axis probabilities, each in [0, 1/3] [default: 0,0.1,0.2].
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        q_values: Vec<f64>,
        /// Mean over-rotation angles [default: 0,π/6,π/2,π].
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        mu_values: Vec<f64>,
        /// Angle jitter standard deviations, each ≥ 0 [default: 0,0.2].
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        tau_values: Vec<f64>,
        /// Random (θ, state) pairs per grid point [default: 5].
        pairs: usize,
        /// Register size [default: 2].
        n_qubits: usize,
    }
}

#[derive(Debug, Serialize)]
pub struct Config {
    pub seed: u64,
    pub trials: u64,
    pub p_values: Vec<f64>,
    pub q_values: Vec<f64>,
    pub mu_values: Vec<f64>,
    pub tau_values: Vec<f64>,
    pub pairs: usize,
    pub n_qubits: usize,
    #[serde(skip)]
    points: Vec<GridPoint>,
}

#[derive(Clone, Copy, Debug)]
struct GridPoint {
    p: f64,
    q: f64,
    mu: f64,
    tau: f64,
    noise: NoiseModel,
    constants: Theorem2Constants,
}

fn nonempty(values: Option<Vec<f64>>, key: &str, default: &[f64]) -> Result<Vec<f64>, RunError> {
    let v = values.unwrap_or_else(|| default.to_vec());
    require(!v.is_empty(), key, "must list at least one value")?;
    require(v.iter().all(|x| x.is_finite()), key, "must contain finite numbers")?;
    Ok(v)
}

impl Config {
    pub fn resolve(o: Options, seed: u64) -> Result<Self, RunError> {
        let p_values = nonempty(o.p_values, "p_values", &[0.0, 0.05, 0.1, 0.2, 0.3])?;
        let q_values = nonempty(o.q_values, "q_values", &[0.0, 0.1, 0.2])?;
        let mu_values = nonempty(o.mu_values, "mu_values", &[0.0, PI / 6.0, PI / 2.0, PI])?;
        let tau_values = nonempty(o.tau_values, "tau_values", &[0.0, 0.2])?;
        let trials = o.trials.unwrap_or(20_000);
        let pairs = o.pairs.unwrap_or(5);
        let n_qubits = o.n_qubits.unwrap_or(2);
        require(trials >= 2, "trials", "must be ≥ 2")?;
        require(pairs >= 1, "pairs", "must be ≥ 1")?;
        require(
            (1..=MAX_ORACLE_QUBITS).contains(&n_qubits),
            "n_qubits",
            "must be between 1 and 10",
        )?;
        let mut points = Vec::new();
        for &p in &p_values {
            for &q in &q_values {
                for &mu in &mu_values {
                    for &tau in &tau_values {
                        let noise = NoiseModel::new(p, q, mu, tau).map_err(|e| {
                            RunError::Usage(format!("grid point (p={p}, q={q}, mu={mu}, tau={tau}): {e}"))
                        })?;
                        let constants = Theorem2Constants::from_noise(&noise).map_err(|e| {
                            RunError::Usage(format!("grid point (p={p}, q={q}, mu={mu}, tau={tau}): {e}"))
                        })?;
                        points.push(GridPoint { p, q, mu, tau, noise, constants });
                    }
                }
            }
        }
        Ok(Self {
            seed,
            trials: trials as u64,
            p_values,
            q_values,
            mu_values,
            tau_values,
            pairs,
            n_qubits,
            points,
        })
    }
}

enum SignCheck {
    Pass,
    Fail,
    Skipped(&'static str),
}

struct Row {
    m: f64,
    m_tilde: f64,
    slack: f64,
    mc_estimate: f64,
    mc_stderr: f64,
    mc_ok: bool,
    mu0_residual: Option<f64>,
    sign: SignCheck,
}

fn evaluate(cfg: &Config, point_index: usize, pair: usize) -> qnoise::Result<Row> {
    let point = &cfg.points[point_index];
    let path = [point_index as u64, pair as u64];
    let mut rng = stream(cfg.seed, &path);
    let ansatz = Ansatz::product(cfg.n_qubits)?;
    let theta: Vec<f64> = (0..ansatz.n_params())
        .map(|_| rng.random_range(-PI..PI))
        .collect();
    let state = random_state(cfg.n_qubits, &mut rng)?;
    let m = margin(&ansatz, &theta, &state)?;
    let m_tilde = corrupted_margin_exact(&ansatz, &theta, &state, &point.noise)?.exact;
    let mc = corrupted_margin_mc(
        &ansatz,
        &theta,
        &state,
        &point.noise,
        cfg.trials,
        derive_seed(cfg.seed, &[path[0], path[1], 1]),
    )?;
    let c = point.constants;
    let sign = if c.eta <= 0.0 {
        SignCheck::Skipped("eta <= 0: the shrinkage factor has flipped sign")
    } else {
        match sign_preserved(&c, m, m_tilde) {
            None => SignCheck::Skipped("|m| <= delta"),
            Some(true) => SignCheck::Pass,
            Some(false) => SignCheck::Fail,
        }
    };
    let m = m.value();
    Ok(Row {
        m,
        m_tilde,
        slack: c.containment_slack(m_tilde, m),
        mc_estimate: mc.estimate,
        mc_stderr: mc.stderr,
        mc_ok: (mc.estimate - m_tilde).abs() <= MC_SIGMAS * mc.stderr + MC_FLOOR,
        mu0_residual: (point.mu == 0.0).then(|| (m_tilde - c.eta * m).abs()),
        sign,
    })
}

pub fn run(cfg: &Config) -> Result<Outcome, RunError> {
    let jobs: Vec<(usize, usize)> = (0..cfg.points.len())
        .flat_map(|i| (0..cfg.pairs).map(move |j| (i, j)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(i, j)| evaluate(cfg, i, j))
        .collect::<qnoise::Result<Vec<_>>>()?;

    let mut table = Table::new(&[
        "point", "pair", "p", "q", "mu", "tau", "eta", "delta", "m", "m_tilde", "lower", "upper",
        "containment_slack", "mc_estimate", "mc_stderr", "mc_ok", "mu0_residual", "sign_check",
        "sign_skip_reason",
    ]);
    let (mut min_slack, mut mu0_worst) = (f64::INFINITY, 0.0f64);
    let (mut mc_failures, mut sign_checked, mut sign_violations, mut sign_skipped) = (0, 0, 0, 0);
    for (&(i, j), r) in jobs.iter().zip(&rows) {
        let pt = &cfg.points[i];
        let (lo, hi) = pt.constants.interval(r.m);
        min_slack = min_slack.min(r.slack);
        if let Some(res) = r.mu0_residual {
            mu0_worst = mu0_worst.max(res);
        }
        mc_failures += usize::from(!r.mc_ok);
        let (sign, reason) = match r.sign {
            SignCheck::Pass => ("pass", ""),
            SignCheck::Fail => ("fail", ""),
            SignCheck::Skipped(why) => ("skipped", why),
        };
        match r.sign {
            SignCheck::Pass => sign_checked += 1,
            SignCheck::Fail => {
                sign_checked += 1;
                sign_violations += 1
            }
            SignCheck::Skipped(_) => sign_skipped += 1,
        }
        table.push(vec![
            i.to_string(),
            j.to_string(),
            real(pt.p),
            real(pt.q),
            real(pt.mu),
            real(pt.tau),
            real(pt.constants.eta),
            real(pt.constants.delta),
            real(r.m),
            real(r.m_tilde),
            real(lo),
            real(hi),
            real(r.slack),
            real(r.mc_estimate),
            real(r.mc_stderr),
            r.mc_ok.to_string(),
            r.mu0_residual.map(real).unwrap_or_default(),
            sign.to_string(),
            reason.to_string(),
        ]);
    }
    let sign_flips: Vec<_> = cfg
        .points
        .iter()
        .enumerate()
        .filter(|(_, pt)| pt.constants.eta < 0.0)
        .map(|(i, pt)| json!({ "point": i, "p": pt.p, "q": pt.q, "mu": pt.mu, "tau": pt.tau, "eta": pt.constants.eta }))
        .collect();

    let containment_ok = min_slack >= -CHANNEL_TOL;
    let mu0_ok = mu0_worst <= LINALG_TOL;
    let passed = containment_ok && mu0_ok && mc_failures == 0 && sign_violations == 0;
    Ok(Outcome {
        passed,
        summary: json!({
            "grid_points": cfg.points.len(),
            "rows": rows.len(),
            "containment": { "min_slack": min_slack, "tolerance": -CHANNEL_TOL, "holds": containment_ok },
            "mu_zero_rows": { "max_residual": mu0_worst, "tolerance": LINALG_TOL, "holds": mu0_ok },
            "monte_carlo": {
                "trials": cfg.trials,
                "sigmas": MC_SIGMAS,
                "failures": mc_failures,
                "holds": mc_failures == 0,
            },
            "sign_preservation": {
                "checked": sign_checked,
                "violations": sign_violations,
                "skipped": sign_skipped,
                "holds": sign_violations == 0,
            },
            "eta_sign_flips": sign_flips,
        }),
        table,
        artifacts: vec![],
    })
}
