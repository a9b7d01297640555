//! Experiment drivers: each turns a JSON config into a CSV, a JSON report
//! and a manifest.

pub mod benchmarks;
pub mod converge;
pub mod moments;
pub mod qv;
pub mod report;
pub mod runs;

pub use converge::{converge_deterministic, ConvergenceConfig, ConvergenceReport, ConvergenceRow, PdeSettings};
pub use moments::{mass_escape_check, moment_bound_check, MassEscapeConfig, MassEscapeReport, MomentConfig, MomentReport};
pub use qv::{superprocess_qv, QvConfig, QvReport};
pub use report::{config_hash, ExperimentOutput, Manifest, Verdict};
pub use runs::{
    masscontrol_bounds, mild_check, run_pde, verify_kernel, MassControlConfig, MildCheckConfig, PdeConfig, SdeConfig,
    SimulateConfig, VerifyKernelConfig,
};
