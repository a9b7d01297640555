//! Exact event-driven (Gillespie) simulation of the rescaled population.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::{AtomChange, Dynamics, RateMode, SimState};
use crate::model::{ModelParams, PointMeasure};
use crate::rng::{exponential, SimRng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    CloneBirth,
    MutantBirth,
    Death,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub time: f64,
    pub parent_trait: f64,
    /// Trait of the newborn; `None` for deaths.
    pub offspring_trait: Option<f64>,
}

/// Result of a single [`Simulator::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Event(Event, AtomChange),
    /// The population is empty; the state is absorbing.
    Extinct,
    /// Every rate is zero; no event will ever occur.
    Stalled,
}

/// Hooks called by [`Simulator::run_observed`]. The state is constant on
/// every interval passed to `advance`.
pub trait Observer {
    fn start(&mut self, _dynamics: &Dynamics, _state: &SimState) -> Result<()> {
        Ok(())
    }
    fn advance(&mut self, _dynamics: &Dynamics, _state: &SimState, _dt: f64) {}
    fn event(
        &mut self,
        _dynamics: &Dynamics,
        _state: &SimState,
        _event: &Event,
        _change: AtomChange,
    ) -> Result<()> {
        Ok(())
    }
    /// Called after a full cache rebuild.
    fn rebuilt(&mut self, _dynamics: &Dynamics, _state: &SimState) {}
    fn output(&mut self, _index: usize, _state: &SimState) {}
}

impl Observer for () {}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn start(&mut self, d: &Dynamics, s: &SimState) -> Result<()> {
        self.0.start(d, s)?;
        self.1.start(d, s)
    }
    fn advance(&mut self, d: &Dynamics, s: &SimState, dt: f64) {
        self.0.advance(d, s, dt);
        self.1.advance(d, s, dt);
    }
    fn event(&mut self, d: &Dynamics, s: &SimState, e: &Event, c: AtomChange) -> Result<()> {
        self.0.event(d, s, e, c)?;
        self.1.event(d, s, e, c)
    }
    fn rebuilt(&mut self, d: &Dynamics, s: &SimState) {
        self.0.rebuilt(d, s);
        self.1.rebuilt(d, s);
    }
    fn output(&mut self, i: usize, s: &SimState) {
        self.0.output(i, s);
        self.1.output(i, s);
    }
}

/// Summary of a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub events: u64,
    pub extinction_time: Option<f64>,
}

/// Time-sampled states of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<PointMeasure>,
    pub initial: PointMeasure,
    pub events: Option<Vec<Event>>,
    pub summary: RunSummary,
    pub seed: Option<u64>,
    pub horizon: f64,
}

pub const DEFAULT_EVENT_CEILING: u64 = 100_000_000;
pub const DEFAULT_REBUILD_EVERY: u64 = 10_000;

#[derive(Debug, Clone)]
pub struct Simulator {
    dynamics: Dynamics,
    pub event_ceiling: u64,
    pub rebuild_every: u64,
}

impl Simulator {
    pub fn new(params: &ModelParams) -> Self {
        Simulator {
            dynamics: Dynamics::new(params),
            event_ceiling: DEFAULT_EVENT_CEILING,
            rebuild_every: DEFAULT_REBUILD_EVERY,
        }
    }

    pub fn with_event_ceiling(mut self, ceiling: u64) -> Self {
        self.event_ceiling = ceiling;
        self
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn params(&self) -> &ModelParams {
        &self.dynamics.params
    }

    pub fn mode(&self) -> RateMode {
        self.dynamics.mode()
    }

    pub fn init(&self, nu0: PointMeasure) -> Result<SimState> {
        SimState::new(&self.dynamics, nu0)
    }

    /// Chooses and applies one event given that one occurs now.
    fn fire(&self, state: &mut SimState, total: f64, rng: &mut SimRng) -> Result<(Event, AtomChange)> {
        let d = &self.dynamics;
        let i = state.select(d, rng.random::<f64>() * total);
        let x = state.atoms()[i].trait_value;
        let (birth, death) = state.rates(d, i);
        let time = state.time;
        let (event, change) = if rng.random::<f64>() * (birth + death) < birth {
            let p = state.mutation_probability(i);
            if p > 0.0 && rng.random::<f64>() < p {
                let h = d.params.kernel.sample_step(x, d.params.k, d.params.eta, rng);
                let y = x + h;
                let change = state.add_individual(d, y)?;
                (
                    Event {
                        kind: EventKind::MutantBirth,
                        time,
                        parent_trait: x,
                        offspring_trait: Some(y),
                    },
                    change,
                )
            } else {
                let change = state.add_individual(d, x)?;
                (
                    Event {
                        kind: EventKind::CloneBirth,
                        time,
                        parent_trait: x,
                        offspring_trait: Some(x),
                    },
                    change,
                )
            }
        } else {
            let change = state.remove_individual(d, i);
            (
                Event {
                    kind: EventKind::Death,
                    time,
                    parent_trait: x,
                    offspring_trait: None,
                },
                change,
            )
        };
        state.event_count += 1;
        if self.rebuild_every > 0 && state.event_count % self.rebuild_every == 0 {
            state.rebuild(d);
        }
        Ok((event, change))
    }

    /// Advances to the next event: exponential waiting time with the total
    /// rate, then an individual and an event type chosen proportionally to
    /// their rates.
    pub fn step(&self, state: &mut SimState, rng: &mut SimRng) -> Result<StepOutcome> {
        if state.is_extinct() {
            return Ok(StepOutcome::Extinct);
        }
        let total = state.total_rate(&self.dynamics)?;
        if total <= 0.0 {
            return Ok(StepOutcome::Stalled);
        }
        state.time += exponential(rng, total);
        let (e, c) = self.fire(state, total, rng)?;
        Ok(StepOutcome::Event(e, c))
    }

    /// Runs to `horizon`, calling `observer.output(i, ..)` at each output
    /// time (which must be sorted and lie in `[0, horizon]`).
    pub fn run_observed<O: Observer>(
        &self,
        nu0: PointMeasure,
        horizon: f64,
        output_times: &[f64],
        rng: &mut SimRng,
        observer: &mut O,
    ) -> Result<RunSummary> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon T = {horizon} must be positive")));
        }
        if output_times.windows(2).any(|w| w[0] > w[1])
            || output_times.iter().any(|&t| !(0.0..=horizon).contains(&t))
        {
            return Err(Error::InvalidParameter(
                "output times must be sorted and lie in [0, T]".into(),
            ));
        }
        let d = &self.dynamics;
        let mut state = self.init(nu0)?;
        observer.start(d, &state)?;
        let mut extinction_time = if state.is_extinct() { Some(0.0) } else { None };
        let stops = output_times.iter().copied().map(Some).chain(std::iter::once(None));
        for (index, stop) in stops.enumerate() {
            let limit = stop.unwrap_or(horizon);
            loop {
                let total = state.total_rate(d)?;
                let dt = if total > 0.0 {
                    exponential(rng, total)
                } else {
                    f64::INFINITY
                };
                if state.time + dt > limit {
                    // Memorylessness: discarding the overshooting draw is exact.
                    observer.advance(d, &state, limit - state.time);
                    state.time = limit;
                    break;
                }
                if state.event_count >= self.event_ceiling {
                    return Err(Error::EventCeiling {
                        ceiling: self.event_ceiling,
                        time: state.time,
                    });
                }
                debug_assert!(
                    total <= d.params.total_rate_bound(state.population.count()) * (1.0 + 1e-9),
                    "total rate {total} exceeds the declared bound"
                );
                observer.advance(d, &state, dt);
                state.time += dt;
                let (event, change) = self.fire(&mut state, total, rng)?;
                observer.event(d, &state, &event, change)?;
                if self.rebuild_every > 0 && state.event_count % self.rebuild_every == 0 {
                    observer.rebuilt(d, &state);
                }
                if state.is_extinct() && extinction_time.is_none() {
                    extinction_time = Some(state.time);
                }
            }
            if stop.is_some() {
                observer.output(index, &state);
            }
        }
        Ok(RunSummary {
            events: state.event_count,
            extinction_time,
        })
    }

    /// Runs to `horizon`, recording snapshots at `output_times` and,
    /// optionally, every event.
    pub fn run(
        &self,
        nu0: PointMeasure,
        horizon: f64,
        output_times: &[f64],
        rng: &mut SimRng,
        record_events: bool,
    ) -> Result<Trajectory> {
        let mut rec = Recorder {
            snapshots: Vec::with_capacity(output_times.len()),
            events: record_events.then(Vec::new),
        };
        let initial = nu0.clone();
        let summary = self.run_observed(nu0, horizon, output_times, rng, &mut rec)?;
        Ok(Trajectory {
            times: output_times.to_vec(),
            snapshots: rec.snapshots,
            initial,
            events: rec.events,
            summary,
            seed: None,
            horizon,
        })
    }
}

struct Recorder {
    snapshots: Vec<PointMeasure>,
    events: Option<Vec<Event>>,
}

impl Observer for Recorder {
    fn event(&mut self, _: &Dynamics, _: &SimState, event: &Event, _: AtomChange) -> Result<()> {
        if let Some(log) = &mut self.events {
            log.push(*event);
        }
        Ok(())
    }

    fn output(&mut self, _: usize, state: &SimState) {
        self.snapshots.push(state.population().clone());
    }
}
