//! Named parameter sets used by the experiments, the CLI and the tests.

use crate::model::{InitialDensity, ModelParams, MutationKernel, RateFn, TraitFn};
use crate::Result;

/// Pareto mutations with logistic competition: `r = 2`, `p = 0.1`, `b = 1`,
/// `d(x, z) = z`, `U ≡ 1`, `V ≡ 0`.
pub fn logistic_diffusion(alpha: f64, eta: f64, k: u64) -> Result<ModelParams> {
    ModelParams::new(
        TraitFn::constant(2.0),
        RateFn::constant(1.0),
        RateFn::logistic(0.0, 1.0),
        TraitFn::constant(0.1),
        TraitFn::constant(1.0),
        TraitFn::zero(),
        MutationKernel::pareto(alpha)?,
        eta,
        k,
    )
}

/// The reference benchmark: `alpha = 1.5`, `eta = 0.5`.
pub fn full_benchmark(k: u64) -> Result<ModelParams> {
    logistic_diffusion(1.5, 0.5, k)
}

/// Same rates without mutation, so the mass follows `m' = m (1 - m)`.
pub fn logistic_no_mutation(k: u64) -> Result<ModelParams> {
    let mut p = logistic_diffusion(1.5, 0.5, k)?;
    p.p = TraitFn::zero();
    Ok(p)
}

/// Critical branching at `eta = 1`: `b = d = 0`, `p = 0`, `r ≡ r0`.
pub fn critical_branching(r0: f64, k: u64) -> Result<ModelParams> {
    ModelParams::new(
        TraitFn::constant(r0),
        RateFn::constant(0.0),
        RateFn::constant(0.0),
        TraitFn::zero(),
        TraitFn::zero(),
        TraitFn::zero(),
        MutationKernel::pareto(1.5)?,
        1.0,
        k,
    )
}

/// Raised cosine of mass 1 on `[-2, 2]`.
pub fn bump_density() -> InitialDensity {
    InitialDensity::RaisedCosine {
        center: 0.0,
        half_width: 2.0,
        mass: 1.0,
    }
}

/// `1 / (1 + (1/m0 - 1) e^{-t})`, the solution of `m' = m (1 - m)`.
pub fn logistic_mass(m0: f64, t: f64) -> f64 {
    1.0 / (1.0 + (1.0 / m0 - 1.0) * (-t).exp())
}
