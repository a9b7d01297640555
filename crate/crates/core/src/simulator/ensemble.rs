//! Independent replicas of the particle system and their cross-replica
//! statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gillespie::{RunSummary, Simulator, DEFAULT_EVENT_CEILING};
use super::martingale::MartingaleTracker;
use crate::fractional::QuadratureSpec;
use crate::model::{InitialDensity, ModelParams, PointMeasure, TestDictionary, TestFunction};
use crate::rng::stream;
use crate::stats::Moments;
use crate::{Error, Result};

/// Initial measure of every replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// The same measure for every replica.
    Fixed(PointMeasure),
    /// `floor(K * mass)` i.i.d. atoms from the density, drawn from the
    /// replica's own stream.
    Sampled(InitialDensity),
}

impl InitialCondition {
    pub fn realise(&self, k: u64, rng: &mut crate::rng::SimRng) -> PointMeasure {
        match self {
            InitialCondition::Fixed(m) => m.clone(),
            InitialCondition::Sampled(d) => d.sample_measure(k, rng),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub horizon: f64,
    pub output_times: Vec<f64>,
    pub replicas: usize,
    pub base_seed: u64,
    pub dictionary: TestDictionary,
    /// Also accumulate `M^f` and its bracket (costs two kernel integrals per
    /// new trait when mutations are on).
    pub martingale: bool,
    pub quad: QuadratureSpec,
    pub event_ceiling: u64,
}

impl EnsembleSpec {
    pub fn new(horizon: f64, output_times: Vec<f64>, replicas: usize, base_seed: u64, dictionary: TestDictionary) -> Self {
        EnsembleSpec {
            horizon,
            output_times,
            replicas,
            base_seed,
            dictionary,
            martingale: false,
            quad: QuadratureSpec::default(),
            event_ceiling: DEFAULT_EVENT_CEILING,
        }
    }

    pub fn with_martingale(mut self, on: bool) -> Self {
        self.martingale = on;
        self
    }
}

/// Everything recorded for one replica. Indexed `[time][function]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicaResult {
    pub replica: usize,
    pub pairings: Vec<Vec<f64>>,
    pub martingale: Option<Vec<Vec<f64>>>,
    pub bracket: Option<Vec<Vec<f64>>>,
    /// `sup_{t <= T} <nu_t, f>` per function, taken over every event.
    pub suprema: Vec<f64>,
    pub initial_mass: f64,
    pub summary: RunSummary,
}

/// Cross-replica moments, indexed `[time][function]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    pub pairings: Vec<Vec<Moments>>,
    pub martingale: Option<Vec<Vec<Moments>>>,
    pub bracket: Option<Vec<Vec<Moments>>>,
    pub suprema: Vec<Moments>,
    pub events: Moments,
    pub extinct: usize,
    pub replicas: Vec<ReplicaResult>,
}

impl EnsembleStats {
    pub fn n_replicas(&self) -> usize {
        self.replicas.len()
    }

    /// Mean pairings at output index `t`, one per dictionary entry.
    pub fn mean_pairings(&self, t: usize) -> Vec<f64> {
        self.pairings[t].iter().map(|m| m.mean).collect()
    }

    pub fn std_errors(&self, t: usize) -> Vec<f64> {
        self.pairings[t].iter().map(|m| m.std_error()).collect()
    }

    fn from_replicas(spec: &EnsembleSpec, replicas: Vec<ReplicaResult>) -> Self {
        let nt = spec.output_times.len();
        let nf = spec.dictionary.len();
        let grid = || vec![vec![Moments::new(); nf]; nt];
        let mut pairings = grid();
        let mut martingale = spec.martingale.then(grid);
        let mut bracket = spec.martingale.then(grid);
        let mut suprema = vec![Moments::new(); nf];
        let mut events = Moments::new();
        let mut extinct = 0;
        let fill = |acc: &mut Vec<Vec<Moments>>, v: &[Vec<f64>]| {
            for (row, vals) in acc.iter_mut().zip(v) {
                for (m, &x) in row.iter_mut().zip(vals) {
                    m.push(x);
                }
            }
        };
        for r in &replicas {
            fill(&mut pairings, &r.pairings);
            if let (Some(acc), Some(v)) = (martingale.as_mut(), r.martingale.as_ref()) {
                fill(acc, v);
            }
            if let (Some(acc), Some(v)) = (bracket.as_mut(), r.bracket.as_ref()) {
                fill(acc, v);
            }
            for (m, &s) in suprema.iter_mut().zip(&r.suprema) {
                m.push(s);
            }
            events.push(r.summary.events as f64);
            if r.summary.extinction_time.is_some() {
                extinct += 1;
            }
        }
        EnsembleStats {
            times: spec.output_times.clone(),
            names: spec.dictionary.names(),
            pairings,
            martingale,
            bracket,
            suprema,
            events,
            extinct,
            replicas,
        }
    }
}

/// Runs replica `index` on stream `(base_seed, index)`.
pub fn run_replica(
    params: &ModelParams,
    init: &InitialCondition,
    spec: &EnsembleSpec,
    index: usize,
) -> Result<ReplicaResult> {
    let mut rng = stream(spec.base_seed, index as u64);
    let nu0 = init.realise(params.k, &mut rng);
    let initial_mass = nu0.mass();
    let sim = Simulator::new(params).with_event_ceiling(spec.event_ceiling);
    let functions: Vec<TestFunction> = spec.dictionary.iter().map(|e| e.function.clone()).collect();
    let mut tracker = MartingaleTracker::new(functions, spec.martingale, spec.quad);
    let summary = sim.run_observed(nu0, spec.horizon, &spec.output_times, &mut rng, &mut tracker)?;
    let outputs = std::mem::take(&mut tracker.outputs);
    let pairings = outputs.iter().map(|o| o.pairing.clone()).collect();
    let (martingale, bracket) = if spec.martingale {
        (
            Some(outputs.iter().map(|o| o.martingale.clone()).collect()),
            Some(outputs.into_iter().map(|o| o.bracket).collect()),
        )
    } else {
        (None, None)
    };
    Ok(ReplicaResult {
        replica: index,
        pairings,
        martingale,
        bracket,
        suprema: tracker.suprema().to_vec(),
        initial_mass,
        summary,
    })
}

/// Runs `spec.replicas` independent replicas in parallel. Results are
/// gathered in replica order, so the statistics do not depend on thread
/// scheduling.
pub fn ensemble_run(params: &ModelParams, init: &InitialCondition, spec: &EnsembleSpec) -> Result<EnsembleStats> {
    if spec.replicas == 0 {
        return Err(Error::InvalidParameter("an ensemble needs at least one replica".into()));
    }
    let results: Vec<Result<ReplicaResult>> = (0..spec.replicas)
        .into_par_iter()
        .map(|i| run_replica(params, init, spec, i))
        .collect();
    let replicas = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(EnsembleStats::from_replicas(spec, replicas))
}
