//! The small-jump SDE `dX = sigma_hat(X_-) dZ_t`, its semigroup and
//! generator, and the mild formulation of the limit equation built on them.

mod generator;
mod mild;
mod path;
mod scheme;

pub use generator::{generator_point, generator_squared_point, large_jump_point};
pub use mild::{mild_residual, MildResidual, MildSpec};
pub use path::{
    path_statistics, semigroup_estimate, simulate_path, simulate_paths, JumpRecord, PathEnsemble,
    PathStatistics, SdePath, SemigroupEstimate,
};
pub use scheme::{compensator_drift, lipschitz_probe, looks_lipschitz, JumpSchemeSpec, SmallJumpMode};
