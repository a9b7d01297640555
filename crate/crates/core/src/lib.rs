//! Simulation and numerical analysis of birth-death-mutation-competition
//! point processes with heavy-tailed mutation kernels.
//!
//! The crate is split along the objects that appear in the large-population
//! analysis of these processes:
//!
//! - [`model`]: parameters, mutation kernels, point measures, test functions.
//! - [`simulator`]: exact event-driven simulation of the rescaled process and
//!   extraction of the martingale `M^{K,f}` with its predictable bracket.
//! - [`fractional`]: pointwise quadrature of the fractional Laplacian, the
//!   kernel-to-operator limit and the mass-control cutoffs `f_n`.
//! - [`pde`]: explicit solver for the nonlocal reaction-diffusion limit.
//! - [`sde`]: the small-jump SDE whose semigroup enters the mild formulation.
//! - [`harness`]: convergence experiments, reports and run manifests.

pub mod error;
pub mod fractional;
pub mod harness;
pub mod model;
pub mod pde;
pub mod quad;
pub mod rng;
pub mod sde;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
