//! Model parameters, mutation kernels, point measures and test functions.

mod density;
mod distance;
mod kernel;
mod measure;
mod params;
mod rates;
mod testfn;
mod validate;

pub use density::InitialDensity;
pub use distance::{distance_from_pairings, test_distance, Pairing};
pub use kernel::{pareto_abs, step_scale, CustomKernel, KernelConfig, MutationKernel};
pub use measure::{Atom, PointMeasure, Removal};
pub use params::{Bounds, ModelConfig, ModelParams, RatesConfig};
pub use rates::{RateFn, TraitFn};
pub use testfn::{psi, psi_d1, psi_d2, NamedTestFn, TestDictionary, TestFn, TestFunction, PSI_D2_SUP};
pub use validate::{validate_assumptions, BoundCheck, ValidationReport, Witness};
