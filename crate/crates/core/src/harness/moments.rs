//! Uniform moment bounds on the total mass and control of the mass that
//! escapes to large traits.

use serde::{Deserialize, Serialize};

use super::report::{config_hash, to_csv, ExperimentOutput, Verdict};
use crate::model::{InitialDensity, ModelConfig, TestDictionary, TestFunction};
use crate::simulator::{ensemble_run, EnsembleSpec, EnsembleStats, InitialCondition};
use crate::stats::Moments;
use crate::{Error, Result};

/// Relative growth in `K` tolerated for a moment estimate.
pub const MOMENT_GROWTH_TOLERANCE: f64 = 0.2;

/// The escaped mass must end below this fraction of the initial mass.
pub const ESCAPE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentConfig {
    pub model: ModelConfig,
    pub initial: InitialDensity,
    pub k_list: Vec<u64>,
    pub replicas: usize,
    pub horizon: f64,
    /// Moment orders, each in `{2, 3, 4}`.
    pub orders: Vec<u32>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub k: u64,
    pub order: u32,
    pub seed: u64,
    /// Ensemble mean of `sup_{t <= T} <nu_t, 1>^order`.
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<MomentRow>,
    /// A single replica gives no error bar.
    pub underpowered: bool,
    pub verdict: Verdict,
}

fn mass_only() -> TestDictionary {
    TestDictionary::new(vec![("one".into(), TestFunction::Constant { value: 1.0 })]).expect("valid dictionary")
}

fn run(
    model: &ModelConfig,
    initial: &InitialDensity,
    k: u64,
    replicas: usize,
    horizon: f64,
    seed: u64,
    dict: TestDictionary,
) -> Result<EnsembleStats> {
    initial.validate()?;
    let params = model.build()?.with_k(k);
    let spec = EnsembleSpec::new(horizon, vec![horizon], replicas, seed, dict);
    ensemble_run(&params, &InitialCondition::Sampled(initial.clone()), &spec)
}

/// No moment may exceed its value at the previous `K` by more than
/// [`MOMENT_GROWTH_TOLERANCE`].
pub fn moment_verdict(rows: &[MomentRow], orders: &[u32]) -> Verdict {
    let mut fails = Vec::new();
    for &p in orders {
        let est: Vec<&MomentRow> = rows.iter().filter(|r| r.order == p).collect();
        for w in est.windows(2) {
            if w[1].estimate > (1.0 + MOMENT_GROWTH_TOLERANCE) * w[0].estimate {
                fails.push(format!(
                    "order {p}: {:.4} at K = {} vs {:.4} at K = {}",
                    w[1].estimate, w[1].k, w[0].estimate, w[0].k
                ));
            }
        }
    }
    if fails.is_empty() {
        Verdict::pass(format!("no growth beyond {MOMENT_GROWTH_TOLERANCE} across K"))
    } else {
        Verdict::fail(fails.join("; "))
    }
}

pub fn moment_bound_check(config: &MomentConfig) -> Result<MomentReport> {
    if config.orders.is_empty() || config.orders.iter().any(|p| !(2..=4).contains(p)) {
        return Err(Error::InvalidParameter("moment orders must lie in {2, 3, 4}".into()));
    }
    if config.k_list.is_empty() || config.replicas == 0 {
        return Err(Error::InvalidParameter("need at least one K and one replica".into()));
    }
    let seeds: Vec<u64> = (0..config.k_list.len()).map(|i| config.seed.wrapping_add(i as u64)).collect();
    let mut rows = Vec::new();
    for (i, &k) in config.k_list.iter().enumerate() {
        let stats = run(&config.model, &config.initial, k, config.replicas, config.horizon, seeds[i], mass_only())?;
        for &p in &config.orders {
            let vals: Vec<f64> = stats.replicas.iter().map(|r| r.suprema[0].powi(p as i32)).collect();
            let m = Moments::from_slice(&vals);
            rows.push(MomentRow {
                k,
                order: p,
                seed: seeds[i],
                estimate: m.mean,
                std_error: m.std_error(),
            });
        }
    }
    let underpowered = config.replicas < 2;
    let mut verdict = moment_verdict(&rows, &config.orders);
    if underpowered {
        verdict.insufficient = true;
        verdict.detail = format!("single replica, underpowered; {}", verdict.detail);
    }
    Ok(MomentReport {
        config_hash: config_hash(config)?,
        seeds,
        rows,
        underpowered,
        verdict,
    })
}

pub fn moment_output(config: &MomentConfig) -> Result<ExperimentOutput> {
    let report = moment_bound_check(config)?;
    ExperimentOutput::new(
        "moments",
        report.config_hash.clone(),
        report.seeds.clone(),
        to_csv(&report.rows)?,
        &report,
        report.verdict.passed,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassEscapeConfig {
    pub model: ModelConfig,
    pub initial: InitialDensity,
    /// The check runs at the largest of these.
    pub k_list: Vec<u64>,
    pub replicas: usize,
    pub horizon: f64,
    pub n_list: Vec<u32>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeRow {
    pub n: u32,
    /// Ensemble mean of `sup_{t <= T} <nu_t, f_n>`.
    pub estimate: f64,
    pub std_error: f64,
    /// `f_n` does not vanish on the initial support; excluded from the
    /// verdict.
    pub baseline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassEscapeReport {
    pub config_hash: String,
    pub seed: u64,
    pub k: u64,
    pub initial_mass: f64,
    pub support_radius: f64,
    pub rows: Vec<EscapeRow>,
    pub verdict: Verdict,
}

/// Radius beyond which the initial density carries no mass (eight widths
/// for a Gaussian, below `1e-15` of the mass).
fn support_radius(d: &InitialDensity) -> f64 {
    match (d.support(), d) {
        (Some((lo, hi)), _) => lo.abs().max(hi.abs()),
        (None, &InitialDensity::Gaussian { center, width, .. }) => center.abs() + 8.0 * width,
        (None, _) => f64::INFINITY,
    }
}

/// Non-increasing in `n` over the rows that count, and the last of them
/// below [`ESCAPE_FRACTION`] of the initial mass.
pub fn escape_verdict(rows: &[EscapeRow], initial_mass: f64) -> Verdict {
    let counted: Vec<&EscapeRow> = rows.iter().filter(|r| !r.baseline).collect();
    let Some(last) = counted.last() else {
        return Verdict::insufficient("every n lies inside the initial support");
    };
    let monotone = counted.windows(2).all(|w| w[1].estimate <= w[0].estimate);
    let small = last.estimate < ESCAPE_FRACTION * initial_mass;
    let detail = format!(
        "monotone: {monotone}; at n = {}: {:.4e} vs {:.4e}",
        last.n,
        last.estimate,
        ESCAPE_FRACTION * initial_mass
    );
    if monotone && small {
        Verdict::pass(detail)
    } else {
        Verdict::fail(detail)
    }
}

pub fn mass_escape_check(config: &MassEscapeConfig, n_list: &[u32]) -> Result<MassEscapeReport> {
    let k = *config
        .k_list
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidParameter("empty K list".into()))?;
    if n_list.is_empty() || n_list.iter().any(|&n| n < 1) || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n list must be increasing and >= 1".into()));
    }
    let radius = support_radius(&config.initial);
    let mut entries = vec![("one".to_string(), TestFunction::Constant { value: 1.0 })];
    entries.extend(n_list.iter().map(|&n| (format!("f_{n}"), TestFunction::cutoff(n))));
    let stats = run(
        &config.model,
        &config.initial,
        k,
        config.replicas,
        config.horizon,
        config.seed,
        TestDictionary::new(entries)?,
    )?;
    let initial_mass = Moments::from_slice(&stats.replicas.iter().map(|r| r.initial_mass).collect::<Vec<_>>()).mean;
    let rows: Vec<EscapeRow> = n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let m = &stats.suprema[i + 1];
            EscapeRow {
                n,
                estimate: m.mean,
                std_error: m.std_error(),
                baseline: (n as f64 - 1.0) < radius,
            }
        })
        .collect();
    let verdict = escape_verdict(&rows, initial_mass);
    Ok(MassEscapeReport {
        config_hash: config_hash(config)?,
        seed: config.seed,
        k,
        initial_mass,
        support_radius: radius,
        rows,
        verdict,
    })
}

pub fn mass_escape_output(config: &MassEscapeConfig) -> Result<ExperimentOutput> {
    let report = mass_escape_check(config, &config.n_list)?;
    ExperimentOutput::new(
        "mass-escape",
        report.config_hash.clone(),
        vec![report.seed],
        to_csv(&report.rows)?,
        &report,
        report.verdict.passed,
    )
}
