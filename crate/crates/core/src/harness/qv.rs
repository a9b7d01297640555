//! Finite-`K` checks of the martingale problem at `eta = 1`: the martingale
//! `M^f` has mean zero and variance equal to the mean of its predictable
//! bracket.

use serde::{Deserialize, Serialize};

use super::report::{config_hash, to_csv, ExperimentOutput, Verdict};
use crate::model::{InitialDensity, ModelConfig, ModelParams, RateFn, TestDictionary, TestFunction};
use crate::pde::uniform_times;
use crate::simulator::{ensemble_run, EnsembleSpec, InitialCondition};
use crate::stats::{z_score, Moments};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QvConfig {
    pub model: ModelConfig,
    pub initial: InitialDensity,
    pub k: u64,
    pub replicas: usize,
    pub horizon: f64,
    /// Number of equally spaced output times in `(0, horizon]`.
    pub n_times: usize,
    pub seed: u64,
    pub dictionary: TestDictionary,
}

/// Thresholds shared by every QV check.
pub const MEAN_Z: f64 = 4.0;
pub const VARIANCE_Z: f64 = 3.0;

/// One line of the QV CSV: a function at an output time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvRow {
    pub function: String,
    pub time: f64,
    pub martingale_mean: f64,
    pub martingale_std_error: f64,
    pub mean_z: f64,
    pub martingale_variance: f64,
    pub variance_std_error: f64,
    pub bracket_mean: f64,
    pub bracket_std_error: f64,
    pub variance_z: f64,
}

/// `Var <nu_T, 1>` against `2 r0 T <nu_0, 1>` in the critical case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCheck {
    pub r0: f64,
    pub initial_mass: f64,
    pub predicted: f64,
    pub variance: f64,
    pub variance_std_error: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvReport {
    pub config_hash: String,
    pub seed: u64,
    pub k: u64,
    pub replicas: usize,
    pub rows: Vec<QvRow>,
    pub critical: Option<CriticalCheck>,
    /// Every replica's bracket path is non-decreasing.
    pub brackets_monotone: bool,
    pub extinct: usize,
    /// All replicas died out before the horizon.
    pub degenerate: bool,
    pub verdict: Verdict,
}

/// `b = d = 0`, `p = 0`, `r ≡ r0`: returns `r0`.
fn critical_rate(p: &ModelParams) -> Option<f64> {
    let zero = |r: &RateFn| *r == RateFn::constant(0.0);
    let r0 = p.r.as_constant()?;
    (zero(&p.b) && zero(&p.d) && p.p.is_zero()).then_some(r0)
}

pub fn superprocess_qv(config: &QvConfig) -> Result<QvReport> {
    let params = config.model.build()?.with_k(config.k);
    if params.eta != 1.0 {
        return Err(Error::InvalidParameter(format!(
            "the superprocess regime needs eta = 1, got {}",
            params.eta
        )));
    }
    if config.replicas < 2 || config.n_times == 0 || !(config.horizon > 0.0) {
        return Err(Error::InvalidParameter("need >= 2 replicas, >= 1 output time and T > 0".into()));
    }
    let dict = TestDictionary::new(
        config
            .dictionary
            .iter()
            .map(|e| (e.name.clone(), e.function.clone()))
            .collect(),
    )?;
    let times = uniform_times(config.horizon, config.n_times)[1..].to_vec();
    let spec = EnsembleSpec::new(config.horizon, times.clone(), config.replicas, config.seed, dict.clone())
        .with_martingale(true);
    let stats = ensemble_run(&params, &InitialCondition::Sampled(config.initial.clone()), &spec)?;
    let mart = stats.martingale.as_ref().expect("martingale requested");
    let brk = stats.bracket.as_ref().expect("bracket requested");
    let nt = times.len();
    let mut rows = Vec::new();
    for (j, e) in dict.iter().enumerate() {
        for (t, &time) in times.iter().enumerate() {
            let m = &mart[t][j];
            let b = &brk[t][j];
            let var = m.variance();
            let var_se = m.variance_std_error();
            rows.push(QvRow {
                function: e.name.clone(),
                time,
                martingale_mean: m.mean,
                martingale_std_error: m.std_error(),
                mean_z: z_score(m.mean, m.std_error()),
                martingale_variance: var,
                variance_std_error: var_se,
                bracket_mean: b.mean,
                bracket_std_error: b.std_error(),
                variance_z: z_score(var - b.mean, (var_se.powi(2) + b.std_error().powi(2)).sqrt()),
            });
        }
    }
    let brackets_monotone = stats.replicas.iter().all(|r| {
        let b = r.bracket.as_ref().expect("bracket requested");
        (0..dict.len()).all(|j| b.windows(2).all(|w| w[1][j] >= w[0][j] && w[0][j] >= 0.0))
    });
    let one = dict
        .iter()
        .position(|e| matches!(e.function, TestFunction::Constant { value } if value == 1.0));
    let critical = match (critical_rate(&params), one) {
        (Some(r0), Some(j)) => {
            let masses: Vec<f64> = stats.replicas.iter().map(|r| r.pairings[nt - 1][j]).collect();
            let m = Moments::from_slice(&masses);
            let m0 = Moments::from_slice(&stats.replicas.iter().map(|r| r.initial_mass).collect::<Vec<_>>()).mean;
            let predicted = 2.0 * r0 * config.horizon * m0;
            Some(CriticalCheck {
                r0,
                initial_mass: m0,
                predicted,
                variance: m.variance(),
                variance_std_error: m.variance_std_error(),
                z: z_score(m.variance() - predicted, m.variance_std_error()),
            })
        }
        _ => None,
    };
    let degenerate = stats.extinct == stats.n_replicas();
    let mut failures = Vec::new();
    if let Some(r) = rows.iter().find(|r| r.mean_z.abs() >= MEAN_Z) {
        failures.push(format!("mean of M^{} at t = {} has z = {:.2}", r.function, r.time, r.mean_z));
    }
    if let Some(r) = rows
        .iter()
        .filter(|r| r.time == config.horizon)
        .find(|r| r.variance_z.abs() >= VARIANCE_Z)
    {
        failures.push(format!("Var M^{} vs bracket at T has z = {:.2}", r.function, r.variance_z));
    }
    if let Some(c) = &critical {
        if c.z.abs() >= VARIANCE_Z {
            failures.push(format!("critical variance z = {:.2}", c.z));
        }
    }
    if !brackets_monotone {
        failures.push("a bracket path decreased".into());
    }
    let verdict = if degenerate {
        Verdict::fail("every replica went extinct before T; degenerate sample")
    } else if failures.is_empty() {
        Verdict::pass(format!(
            "{} functions x {} times: |z| < {MEAN_Z} for means, < {VARIANCE_Z} for variances",
            dict.len(),
            nt
        ))
    } else {
        Verdict::fail(failures.join("; "))
    };
    Ok(QvReport {
        config_hash: config_hash(config)?,
        seed: config.seed,
        k: config.k,
        replicas: config.replicas,
        rows,
        critical,
        brackets_monotone,
        extinct: stats.extinct,
        degenerate,
        verdict,
    })
}

pub fn qv_output(config: &QvConfig) -> Result<ExperimentOutput> {
    let report = superprocess_qv(config)?;
    ExperimentOutput::new(
        "qv-check",
        report.config_hash.clone(),
        vec![report.seed],
        to_csv(&report.rows)?,
        &report,
        report.verdict.passed,
    )
}
