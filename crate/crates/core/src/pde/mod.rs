//! Deterministic solver for the limiting nonlocal reaction-diffusion
//! equation on a truncated grid.

mod grid;
mod operator;
mod solver;
mod weak;

pub use grid::{GridFunction, GridSpec};
pub use operator::{rhs, FracLaplacianStencil, PdeOperator, RhsParts};
pub use solver::{solve, uniform_times, PdeDiagnostics, PdeRun, StoredPdeRun, BLOW_UP_FACTOR};
pub use weak::{weak_form_residual, weak_form_sides, WeakResidual};

pub(crate) use weak::time_integral;
