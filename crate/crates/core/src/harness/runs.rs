//! Configs and runners for the single-module commands: simulation, kernel
//! and cutoff checks, PDE solves, SDE ensembles and mild-form residuals.

use serde::{Deserialize, Serialize};

use super::report::{config_hash, to_csv, ExperimentOutput, Verdict};
use crate::fractional::{kernel_limit_error, mass_control_bound_check, CutoffBoundReport, QuadratureSpec};
use crate::model::{InitialDensity, ModelConfig, TestDictionary, TraitFn};
use crate::pde::{solve, uniform_times, GridFunction, GridSpec, PdeDiagnostics, PdeRun};
use crate::sde::{mild_residual, path_statistics, simulate_paths, JumpSchemeSpec, MildResidual, MildSpec, PathStatistics};
use crate::simulator::{ensemble_run, EnsembleSpec, InitialCondition, RunSummary};
use crate::{Error, Result};

/// Rebuilds a dictionary so its entries are validated.
fn checked(dict: &TestDictionary) -> Result<TestDictionary> {
    TestDictionary::new(dict.iter().map(|e| (e.name.clone(), e.function.clone())).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: ModelConfig,
    pub initial: InitialCondition,
    pub horizon: f64,
    pub output_times: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub dictionary: TestDictionary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_ceiling: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRow {
    pub replica: usize,
    pub time: f64,
    pub statistic_name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub replica: usize,
    pub initial_mass: f64,
    #[serde(flatten)]
    pub summary: RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub config_hash: String,
    pub seed: u64,
    pub total_events: u64,
    pub extinct: usize,
    pub replicas: Vec<ReplicaSummary>,
}

pub fn simulate_output(config: &SimulateConfig) -> Result<ExperimentOutput> {
    let params = config.model.build()?;
    let dict = checked(&config.dictionary)?;
    let mut spec = EnsembleSpec::new(
        config.horizon,
        config.output_times.clone(),
        config.replicas,
        config.seed,
        dict.clone(),
    );
    if let Some(c) = config.event_ceiling {
        spec.event_ceiling = c;
    }
    let stats = ensemble_run(&params, &config.initial, &spec)?;
    let names = dict.names();
    let mut rows = Vec::new();
    for r in &stats.replicas {
        for (t, vals) in r.pairings.iter().enumerate() {
            for (name, &value) in names.iter().zip(vals) {
                rows.push(SimulateRow {
                    replica: r.replica,
                    time: config.output_times[t],
                    statistic_name: name.clone(),
                    value,
                });
            }
        }
    }
    let report = SimulateReport {
        config_hash: config_hash(config)?,
        seed: config.seed,
        total_events: stats.replicas.iter().map(|r| r.summary.events).sum(),
        extinct: stats.extinct,
        replicas: stats
            .replicas
            .iter()
            .map(|r| ReplicaSummary {
                replica: r.replica,
                initial_mass: r.initial_mass,
                summary: r.summary,
            })
            .collect(),
    };
    ExperimentOutput::new(
        "simulate",
        report.config_hash.clone(),
        vec![config.seed],
        to_csv(&rows)?,
        &report,
        true,
    )
}

/// Evaluation points `x_min + i dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl PointGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        Ok(GridSpec::new(self.x_min, self.x_max, self.n_points)?.points())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyKernelConfig {
    pub model: ModelConfig,
    pub k_list: Vec<u64>,
    pub dictionary: TestDictionary,
    /// Name of the dictionary entry to test.
    pub function: String,
    pub grid: PointGrid,
    #[serde(default)]
    pub quad: QuadratureSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    #[serde(rename = "K")]
    pub k: u64,
    pub sup_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyKernelReport {
    pub config_hash: String,
    pub function: String,
    pub eta: f64,
    pub max_limit: f64,
    pub rows: Vec<KernelRow>,
    pub verdict: Verdict,
}

/// Strict decrease of the sup error along the `K` list.
pub fn kernel_verdict(rows: &[KernelRow]) -> Verdict {
    if rows.len() < 2 {
        return Verdict::insufficient("fewer than two K values");
    }
    let detail = rows
        .iter()
        .map(|r| format!("K = {}: {:.4e}", r.k, r.sup_error))
        .collect::<Vec<_>>()
        .join("; ");
    if rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error) {
        Verdict::pass(detail)
    } else {
        Verdict::fail(detail)
    }
}

pub fn verify_kernel(config: &VerifyKernelConfig) -> Result<VerifyKernelReport> {
    let params = config.model.build()?;
    let dict = checked(&config.dictionary)?;
    let f = dict
        .iter()
        .find(|e| e.name == config.function)
        .ok_or_else(|| Error::Config(format!("no test function named {}", config.function)))?;
    let xs = config.grid.points()?;
    let mut rows = Vec::new();
    let mut max_limit: f64 = 0.0;
    for &k in &config.k_list {
        let r = kernel_limit_error(&params.kernel, &f.function, &xs, k, params.eta, &config.quad)?;
        max_limit = max_limit.max(r.max_limit);
        rows.push(KernelRow { k, sup_error: r.sup_error });
    }
    let verdict = kernel_verdict(&rows);
    Ok(VerifyKernelReport {
        config_hash: config_hash(config)?,
        function: config.function.clone(),
        eta: params.eta,
        max_limit,
        rows,
        verdict,
    })
}

pub fn verify_kernel_output(config: &VerifyKernelConfig) -> Result<ExperimentOutput> {
    let report = verify_kernel(config)?;
    ExperimentOutput::new(
        "verify-kernel",
        report.config_hash.clone(),
        Vec::new(),
        to_csv(&report.rows)?,
        &report,
        report.verdict.passed,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassControlConfig {
    pub n_list: Vec<u32>,
    pub alpha: f64,
    /// Points per `n`, spread over `(-(n-1), n-1)`.
    #[serde(default = "default_cutoff_points")]
    pub n_points: usize,
    #[serde(default)]
    pub quad: QuadratureSpec,
}

fn default_cutoff_points() -> usize {
    200
}

/// `n_points` cell midpoints of `(-(n-1), n-1)`.
pub fn cutoff_grid(n: u32, n_points: usize) -> Vec<f64> {
    let edge = n as f64 - 1.0;
    (0..n_points)
        .map(|i| -edge + edge * (2 * i + 1) as f64 / n_points as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffRow {
    pub n: u32,
    pub alpha: f64,
    pub global_bound: f64,
    pub max_abs: f64,
    pub local_violations: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MassControlReport {
    pub config_hash: String,
    pub checks: Vec<CutoffBoundReport>,
    pub verdict: Verdict,
}

pub fn masscontrol_bounds(config: &MassControlConfig) -> Result<MassControlReport> {
    let checks = config
        .n_list
        .iter()
        .map(|&n| mass_control_bound_check(n, config.alpha, &cutoff_grid(n, config.n_points), &config.quad))
        .collect::<Result<Vec<_>>>()?;
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.n.to_string()).collect();
    let verdict = if failed.is_empty() {
        Verdict::pass(format!("both bounds hold for n in {:?}", config.n_list))
    } else {
        Verdict::fail(format!("bounds violated for n = {}", failed.join(", ")))
    };
    Ok(MassControlReport {
        config_hash: config_hash(config)?,
        checks,
        verdict,
    })
}

pub fn masscontrol_output(config: &MassControlConfig) -> Result<ExperimentOutput> {
    let report = masscontrol_bounds(config)?;
    let rows: Vec<CutoffRow> = report
        .checks
        .iter()
        .map(|c| CutoffRow {
            n: c.n,
            alpha: c.alpha,
            global_bound: c.global_bound,
            max_abs: c.max_abs,
            local_violations: c.points.iter().filter(|p| !p.passed).count(),
            passed: c.passed,
        })
        .collect();
    ExperimentOutput::new(
        "masscontrol-bounds",
        report.config_hash.clone(),
        Vec::new(),
        to_csv(&rows)?,
        &report,
        report.verdict.passed,
    )
}

/// Largest per-step clipped mass tolerated, relative to the mass.
pub const CLIP_FRACTION_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeConfig {
    pub model: ModelConfig,
    pub initial: InitialDensity,
    pub grid: GridSpec,
    pub horizon: f64,
    pub dt: f64,
    /// Equally spaced snapshots after the initial one.
    pub n_outputs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeRow {
    pub time: f64,
    pub x: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeReport {
    pub config_hash: String,
    pub diagnostics: PdeDiagnostics,
    pub verdict: Verdict,
}

pub fn run_pde(config: &PdeConfig) -> Result<PdeRun> {
    let params = config.model.build()?;
    let xi0 = GridFunction::from_density(config.grid, &config.initial)?;
    let times = uniform_times(config.horizon, config.n_outputs.max(1));
    solve(&xi0, &params, config.horizon, config.dt, &times[1..])
}

/// The CSV, diagnostics and the stored run (attachment `run.json`, the
/// input of `mild-check`).
pub fn pde_output(config: &PdeConfig) -> Result<ExperimentOutput> {
    let run = run_pde(config)?;
    let mut rows = Vec::new();
    for (t, snap) in run.times.iter().zip(&run.snapshots) {
        for (i, &value) in snap.values.iter().enumerate() {
            rows.push(PdeRow {
                time: *t,
                x: run.grid.x(i),
                value,
            });
        }
    }
    let d = run.diagnostics.clone();
    let verdict = if d.max_step_clip_fraction < CLIP_FRACTION_LIMIT {
        Verdict::pass(format!("largest clipped fraction {:.2e}", d.max_step_clip_fraction))
    } else {
        Verdict::fail(format!(
            "clipped fraction {:.2e} above {CLIP_FRACTION_LIMIT:e}",
            d.max_step_clip_fraction
        ))
    };
    let report = PdeReport {
        config_hash: config_hash(config)?,
        diagnostics: d,
        verdict,
    };
    let stored = serde_json::to_string(&run.to_stored()?)?;
    Ok(ExperimentOutput::new(
        "pde",
        report.config_hash.clone(),
        Vec::new(),
        to_csv(&rows)?,
        &report,
        report.verdict.passed,
    )?
    .with_attachment("run.json", stored))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeConfig {
    pub x0: f64,
    pub sigma_hat: TraitFn,
    pub alpha: f64,
    pub horizon: f64,
    /// Defaults to the standard scheme for `alpha`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<JumpSchemeSpec>,
    pub n_paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalRow {
    pub path: usize,
    pub terminal: f64,
    pub jumps: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SdeReport {
    pub config_hash: String,
    pub scheme: JumpSchemeSpec,
    pub statistics: PathStatistics,
    pub verdict: Verdict,
}

/// Displacement threshold and chi-squared level of the path checks.
pub const PATH_MEAN_Z: f64 = 4.0;
pub const JUMP_LEVEL: f64 = 0.999;

pub fn sde_output(config: &SdeConfig) -> Result<ExperimentOutput> {
    let scheme = config.scheme.unwrap_or_else(|| JumpSchemeSpec::default_for(config.alpha));
    let sig = config.sigma_hat.clone();
    let ens = simulate_paths(
        config.x0,
        &move |x| sig.eval(x),
        config.alpha,
        config.horizon,
        &scheme,
        config.n_paths,
        config.seed,
    )?;
    let rows: Vec<TerminalRow> = ens
        .terminal
        .iter()
        .zip(&ens.jump_counts)
        .enumerate()
        .map(|(path, (&terminal, &jumps))| TerminalRow {
            path,
            terminal,
            jumps,
        })
        .collect();
    let statistics = path_statistics(&ens);
    let m = statistics.martingale_passes(PATH_MEAN_Z);
    let j = statistics.jump_counts_pass(JUMP_LEVEL);
    let detail = format!(
        "martingale z = {:.2}, jump-count p = {:.4}",
        statistics.martingale_z, statistics.jump_count_test.p_value
    );
    let report = SdeReport {
        config_hash: config_hash(config)?,
        scheme,
        statistics,
        verdict: if m && j { Verdict::pass(detail) } else { Verdict::fail(detail) },
    };
    ExperimentOutput::new(
        "sde",
        report.config_hash.clone(),
        vec![config.seed],
        to_csv(&rows)?,
        &report,
        report.verdict.passed,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MildCheckConfig {
    /// Path of a stored run written by `pde`, relative to the config file.
    pub run: String,
    pub dictionary: TestDictionary,
    /// Output times of the stored run to test.
    pub times: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MildRow {
    pub function: String,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub std_error: f64,
    pub budget: f64,
    pub passed: bool,
}

impl MildRow {
    fn new(function: &str, r: &MildResidual) -> Self {
        MildRow {
            function: function.to_string(),
            t: r.t,
            lhs: r.lhs,
            rhs: r.rhs,
            residual: r.residual,
            std_error: r.std_error,
            budget: r.budget,
            passed: r.passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MildReport {
    pub config_hash: String,
    pub functions: Vec<String>,
    pub residuals: Vec<MildResidual>,
    /// `sigma_hat` failed the Lipschitz probe; the mild form is then
    /// outside the setting where it was derived.
    pub lipschitz_caveat: bool,
    pub verdict: Verdict,
}

pub fn mild_check(config: &MildCheckConfig, run: &PdeRun) -> Result<MildReport> {
    let dict = checked(&config.dictionary)?;
    let alpha = run.params.alpha();
    let (mut functions, mut residuals) = (Vec::new(), Vec::new());
    for (j, e) in dict.iter().enumerate() {
        for (i, &t) in config.times.iter().enumerate() {
            let seed = config.seed.wrapping_add((j * config.times.len() + i) as u64);
            let spec = MildSpec::new(alpha, config.n_samples, seed);
            functions.push(e.name.clone());
            residuals.push(mild_residual(run, &e.function, t, &spec)?);
        }
    }
    let bad: Vec<String> = functions
        .iter()
        .zip(&residuals)
        .filter(|(_, r)| !r.passed)
        .map(|(f, r)| format!("{f} at t = {}", r.t))
        .collect();
    let verdict = if bad.is_empty() {
        Verdict::pass("every residual within its error budget")
    } else {
        Verdict::fail(format!("over budget: {}", bad.join(", ")))
    };
    Ok(MildReport {
        config_hash: config_hash(config)?,
        lipschitz_caveat: residuals.iter().any(|r| !r.sigma_hat_lipschitz),
        functions,
        residuals,
        verdict,
    })
}

pub fn mild_output(config: &MildCheckConfig, run: &PdeRun) -> Result<ExperimentOutput> {
    let report = mild_check(config, run)?;
    let rows: Vec<MildRow> = report
        .functions
        .iter()
        .zip(&report.residuals)
        .map(|(f, r)| MildRow::new(f, r))
        .collect();
    let mut out = ExperimentOutput::new(
        "mild-check",
        report.config_hash.clone(),
        vec![config.seed],
        to_csv(&rows)?,
        &report,
        report.verdict.passed,
    )?;
    if report.lipschitz_caveat {
        out = out.with_note("sigma_hat is not Lipschitz; residuals carry a caveat");
    }
    Ok(out)
}
