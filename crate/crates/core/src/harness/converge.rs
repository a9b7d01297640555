//! Convergence of the particle system to the deterministic limit: the
//! dictionary distance between the cross-replica mean measure and the PDE
//! solution at the final time, for increasing `K`.

use serde::{Deserialize, Serialize};

use super::report::{config_hash, to_csv, ExperimentOutput, Verdict};
use crate::model::{distance_from_pairings, InitialDensity, ModelConfig, Pairing, TestDictionary};
use crate::pde::{solve, GridFunction, GridSpec};
use crate::simulator::{ensemble_run, EnsembleSpec, InitialCondition};
use crate::model::TestFn;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSettings {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub model: ModelConfig,
    pub initial: InitialDensity,
    pub k_list: Vec<u64>,
    pub replicas: usize,
    pub horizon: f64,
    pub seed: u64,
    pub dictionary: TestDictionary,
    pub pde: PdeSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_ceiling: Option<u64>,
}

impl ConvergenceConfig {
    /// Seed of the ensemble at position `i` of `k_list`.
    pub fn seed_for(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }
}

/// One line of the convergence CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub k: u64,
    pub replicas: usize,
    pub seed: u64,
    /// Dictionary distance between the mean measure and the PDE solution.
    pub error: f64,
    /// Standard error of the distance, from the maximising function.
    pub std_error: f64,
    pub worst_function: String,
    pub mean_mass: f64,
    pub mass_std_error: f64,
    pub pde_mass: f64,
    pub extinct: usize,
    pub mean_events: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub k_list: Vec<u64>,
    pub rows: Vec<ConvergenceRow>,
    pub pde_leaked_mass: f64,
    /// Set when a run stopped early; `rows` holds what was finished.
    pub failure: Option<String>,
    pub verdict: Verdict,
}

/// Errors must drop by more than this many combined standard errors
/// between consecutive `K`.
pub const DECREASE_Z: f64 = 2.0;

/// Monotonicity verdict from the CSV rows alone.
pub fn convergence_verdict(rows: &[ConvergenceRow]) -> Verdict {
    if rows.len() < 2 {
        return Verdict::insufficient("fewer than two K values, no trend to test");
    }
    let mut notes = Vec::new();
    let mut ok = true;
    for w in rows.windows(2) {
        let drop = w[0].error - w[1].error;
        let bar = DECREASE_Z * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        let step_ok = drop > bar;
        ok &= step_ok;
        notes.push(format!(
            "K {} -> {}: drop {:.4e} vs {:.4e} ({})",
            w[0].k,
            w[1].k,
            drop,
            bar,
            if step_ok { "ok" } else { "not significant" }
        ));
    }
    let detail = notes.join("; ");
    if ok {
        Verdict::pass(detail)
    } else {
        Verdict::fail(detail)
    }
}

pub fn converge_deterministic(config: &ConvergenceConfig) -> Result<ConvergenceReport> {
    let base = config.model.build()?;
    if !(base.eta > 0.0 && base.eta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "the deterministic limit needs eta in (0, 1), got {}",
            base.eta
        )));
    }
    if config.k_list.is_empty() || config.replicas == 0 {
        return Err(Error::InvalidParameter("need at least one K and one replica".into()));
    }
    config.initial.validate()?;
    let dict = TestDictionary::new(
        config
            .dictionary
            .iter()
            .map(|e| (e.name.clone(), e.function.clone()))
            .collect(),
    )?;
    let hash = config_hash(config)?;
    let seeds: Vec<u64> = (0..config.k_list.len()).map(|i| config.seed_for(i)).collect();
    let mut report = ConvergenceReport {
        config_hash: hash,
        seeds: seeds.clone(),
        k_list: config.k_list.clone(),
        rows: Vec::new(),
        pde_leaked_mass: 0.0,
        failure: None,
        verdict: Verdict::insufficient("no rows"),
    };
    let s = config.pde;
    let grid = GridSpec::new(s.x_min, s.x_max, s.n_points)?;
    let xi0 = GridFunction::from_density(grid, &config.initial)?;
    let pde = match solve(&xi0, &base, config.horizon, s.dt, &[config.horizon]) {
        Ok(run) => run,
        Err(e) => {
            report.failure = Some(format!("PDE: {e}"));
            report.verdict = Verdict::fail("PDE solve failed");
            return Ok(report);
        }
    };
    report.pde_leaked_mass = pde.diagnostics.leaked_mass;
    let target = pde.last().pair_all(&dict);
    let init = InitialCondition::Sampled(config.initial.clone());
    for (i, &k) in config.k_list.iter().enumerate() {
        let params = base.with_k(k);
        let mut spec = EnsembleSpec::new(config.horizon, vec![config.horizon], config.replicas, seeds[i], dict.clone());
        if let Some(c) = config.event_ceiling {
            spec.event_ceiling = c;
        }
        let stats = match ensemble_run(&params, &init, &spec) {
            Ok(s) => s,
            Err(e) => {
                report.failure = Some(format!("K = {k}: {e}"));
                break;
            }
        };
        let mean = stats.mean_pairings(0);
        let se = stats.std_errors(0);
        let error = distance_from_pairings(&mean, &target, &dict);
        // The maximiser of the normalised gap carries the error bar.
        let (worst, _) = dict
            .iter()
            .enumerate()
            .map(|(j, e)| (j, (mean[j] - target[j]).abs() / e.function.sup_norm().max(1.0)))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let scale = dict.entries[worst].function.sup_norm().max(1.0);
        let one = dict
            .iter()
            .position(|e| matches!(e.function, crate::model::TestFunction::Constant { value } if value == 1.0));
        report.rows.push(ConvergenceRow {
            k,
            replicas: config.replicas,
            seed: seeds[i],
            error,
            std_error: se[worst] / scale,
            worst_function: dict.entries[worst].name.clone(),
            mean_mass: one.map_or(f64::NAN, |j| mean[j]),
            mass_std_error: one.map_or(f64::NAN, |j| se[j]),
            pde_mass: pde.last().mass(),
            extinct: stats.extinct,
            mean_events: stats.events.mean,
        });
    }
    report.verdict = if report.failure.is_some() {
        let mut v = convergence_verdict(&report.rows);
        v.passed = false;
        v.detail = format!("partial report; {}", v.detail);
        v
    } else {
        convergence_verdict(&report.rows)
    };
    Ok(report)
}

pub fn converge_output(config: &ConvergenceConfig) -> Result<ExperimentOutput> {
    let report = converge_deterministic(config)?;
    let csv = to_csv(&report.rows)?;
    ExperimentOutput::new(
        "converge",
        report.config_hash.clone(),
        report.seeds.clone(),
        csv,
        &report,
        report.verdict.passed,
    )
}

/// Rebuilds the rows from a convergence CSV, for re-deriving the verdict.
pub fn rows_from_csv(text: &str) -> Result<Vec<ConvergenceRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?)
}
