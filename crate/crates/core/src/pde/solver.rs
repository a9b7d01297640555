//! Explicit RK4 time stepping with clipping and mass bookkeeping.

use serde::{Deserialize, Serialize};

use super::grid::{GridFunction, GridSpec};
use super::operator::PdeOperator;
use crate::model::{ModelConfig, ModelParams};
use crate::{Error, Result};

/// A run aborts once the mass exceeds this multiple of the initial mass.
pub const BLOW_UP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PdeDiagnostics {
    pub steps: u64,
    pub initial_mass: f64,
    pub final_mass: f64,
    /// Total mass removed by clipping negative values.
    pub clipped_mass: f64,
    /// Largest clipped mass of a single step relative to the mass then.
    pub max_step_clip_fraction: f64,
    /// Mass carried out of the window by the nonlocal term.
    pub leaked_mass: f64,
    pub dt_nonlocal_limit: f64,
    pub dt_reaction_limit: f64,
}

#[derive(Debug, Clone)]
pub struct PdeRun {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub dt: f64,
    /// Output times, starting with 0.
    pub times: Vec<f64>,
    pub snapshots: Vec<GridFunction>,
    pub diagnostics: PdeDiagnostics,
}

/// Serializable form of a [`PdeRun`]; needs a model expressible as a config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoredPdeRun {
    pub model: ModelConfig,
    pub grid: GridSpec,
    pub dt: f64,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub diagnostics: PdeDiagnostics,
}

impl PdeRun {
    pub fn at(&self, t: f64) -> Option<&GridFunction> {
        self.times.iter().position(|&s| s == t).map(|i| &self.snapshots[i])
    }

    pub fn last(&self) -> &GridFunction {
        self.snapshots.last().expect("a run has at least its initial state")
    }

    pub fn to_stored(&self) -> Result<StoredPdeRun> {
        let model = self
            .params
            .to_config()
            .ok_or_else(|| Error::Config("custom kernels cannot be stored".into()))?;
        Ok(StoredPdeRun {
            model,
            grid: self.grid,
            dt: self.dt,
            times: self.times.clone(),
            values: self.snapshots.iter().map(|s| s.values.clone()).collect(),
            diagnostics: self.diagnostics.clone(),
        })
    }

    pub fn from_stored(stored: StoredPdeRun) -> Result<Self> {
        let params = stored.model.build()?;
        let snapshots = stored
            .values
            .into_iter()
            .map(|v| GridFunction::new(stored.grid, v))
            .collect::<Result<Vec<_>>>()?;
        if snapshots.len() != stored.times.len() {
            return Err(Error::Config("stored run has mismatched times and snapshots".into()));
        }
        Ok(PdeRun {
            params,
            grid: stored.grid,
            dt: stored.dt,
            times: stored.times,
            snapshots,
            diagnostics: stored.diagnostics,
        })
    }
}

/// `n + 1` equally spaced times from 0 to `t`.
pub fn uniform_times(t: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| if i == n { t } else { t * i as f64 / n as f64 }).collect()
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

/// Integrates from `xi0` to `horizon`, recording the state at 0 and at every
/// output time. Steps of size `dt` are shortened to land on output times.
pub fn solve(
    xi0: &GridFunction,
    params: &ModelParams,
    horizon: f64,
    dt: f64,
    output_times: &[f64],
) -> Result<PdeRun> {
    if !(horizon > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("need T > 0 and dt > 0, got {horizon} and {dt}")));
    }
    if output_times.windows(2).any(|w| w[0] >= w[1])
        || output_times.iter().any(|&t| !(t > 0.0 && t <= horizon))
    {
        return Err(Error::InvalidParameter("output times must increase and lie in (0, T]".into()));
    }
    let op = PdeOperator::new(params, xi0.grid)?;
    let m0 = op.integral(&xi0.values);
    let dt_nonlocal = op.nonlocal_dt_limit();
    let dt_reaction = op.reaction_dt_limit(m0);
    let limit = dt_nonlocal.min(dt_reaction);
    if dt > limit {
        return Err(Error::Unstable { dt, limit });
    }
    let mut diag = PdeDiagnostics {
        initial_mass: m0,
        dt_nonlocal_limit: dt_nonlocal,
        dt_reaction_limit: dt_reaction,
        ..Default::default()
    };
    let mut times = vec![0.0];
    let mut snapshots = vec![xi0.clone()];
    let mut xi = xi0.values.clone();
    let mut t = 0.0;
    let weights = op.grid().weights();
    let mut stops: Vec<f64> = output_times.to_vec();
    if stops.last() != Some(&horizon) {
        stops.push(horizon);
    }
    for &stop in &stops {
        while t < stop {
            let h = if stop - t <= dt * (1.0 + 1e-9) { stop - t } else { dt };
            // Leak rate: minus the window integral of the nonlocal term.
            let leak = |parts: &super::operator::RhsParts| -op.integral(&parts.nonlocal);
            let p1 = op.parts(&xi);
            let k1 = p1.total();
            let p2 = op.parts(&axpy(&xi, 0.5 * h, &k1));
            let k2 = p2.total();
            let p3 = op.parts(&axpy(&xi, 0.5 * h, &k2));
            let k3 = p3.total();
            let p4 = op.parts(&axpy(&xi, h, &k3));
            let k4 = p4.total();
            diag.leaked_mass += h / 6.0 * (leak(&p1) + 2.0 * leak(&p2) + 2.0 * leak(&p3) + leak(&p4));
            let mut clipped = 0.0;
            for (i, v) in xi.iter_mut().enumerate() {
                *v += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                if *v < 0.0 {
                    clipped -= *v * weights[i];
                    *v = 0.0;
                }
            }
            diag.clipped_mass += clipped;
            t = if h == stop - t { stop } else { t + h };
            diag.steps += 1;
            let mass = op.integral(&xi);
            if clipped > 0.0 {
                diag.max_step_clip_fraction = diag.max_step_clip_fraction.max(clipped / (mass + clipped));
            }
            if !(mass <= BLOW_UP_FACTOR * m0.max(f64::MIN_POSITIVE)) {
                return Err(Error::BlowUp {
                    time: t,
                    mass,
                    limit: BLOW_UP_FACTOR * m0,
                });
            }
        }
        if output_times.contains(&stop) {
            times.push(stop);
            snapshots.push(GridFunction {
                grid: xi0.grid,
                values: xi.clone(),
            });
        }
    }
    diag.final_mass = op.integral(&xi);
    Ok(PdeRun {
        params: params.clone(),
        grid: xi0.grid,
        dt,
        times,
        snapshots,
        diagnostics: diag,
    })
}
