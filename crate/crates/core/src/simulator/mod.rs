//! Exact stochastic simulation of the individual-based model.

mod ensemble;
mod fenwick;
mod gillespie;
mod martingale;
mod state;

pub use ensemble::{ensemble_run, run_replica, EnsembleSpec, EnsembleStats, InitialCondition, ReplicaResult};
pub use gillespie::{
    Event, EventKind, Observer, RunSummary, Simulator, StepOutcome, Trajectory, DEFAULT_EVENT_CEILING,
    DEFAULT_REBUILD_EVERY,
};
pub use martingale::{martingale_path, MartingalePath, MartingaleTracker, TrackerOutput};
pub use state::{AtomChange, Dynamics, RateMode, SimState};
