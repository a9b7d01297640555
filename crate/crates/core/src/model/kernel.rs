//! Mutation kernels: the law of the symmetric jump `X(x)` and its tail.
//!
//! A mutant born at `x` is placed at `x + X(x) K^{-eta/alpha}`. The tail
//! `P(|X(x)| >= u)` behaves like `(2 sigma(x) / alpha) u^{-alpha}`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{open_unit, SimRng};
use crate::{Error, Result};

type Sampler = dyn Fn(f64, &mut SimRng) -> f64 + Send + Sync;
type TailFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type SigmaFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A user-supplied kernel. `sampler(x, rng)` returns a signed draw of `X(x)`,
/// `tail(x, u)` returns `P(|X(x)| >= u)`.
#[derive(Clone)]
pub struct CustomKernel {
    pub name: String,
    pub alpha: f64,
    pub sampler: Arc<Sampler>,
    pub tail: Arc<TailFn>,
    pub sigma: Arc<SigmaFn>,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum MutationKernel {
    /// Density `(alpha/2) |h|^{-1-alpha}` on `|h| >= 1`.
    Pareto { alpha: f64 },
    /// Constant density `c` on `|h| <= a`, `c (a/|h|)^{1+alpha}` outside, with
    /// `c = alpha / (2 a (alpha + 1))`.
    TruncatedPareto { alpha: f64, a: f64 },
    Custom(CustomKernel),
}

/// Kernel selection as it appears in a model config; `alpha` lives at the
/// top level of the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Pareto {},
    TruncatedPareto { a: f64 },
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 2)")))
    }
}

/// `|X|` for the unit Pareto law from a survival level `v` in `(0, 1]`.
#[inline]
pub fn pareto_abs(v: f64, alpha: f64) -> f64 {
    v.powf(-1.0 / alpha)
}

impl MutationKernel {
    pub fn pareto(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(MutationKernel::Pareto { alpha })
    }

    pub fn truncated_pareto(alpha: f64, a: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("truncation radius a = {a} must be positive")));
        }
        Ok(MutationKernel::TruncatedPareto { alpha, a })
    }

    pub fn custom(kernel: CustomKernel) -> Result<Self> {
        check_alpha(kernel.alpha)?;
        Ok(MutationKernel::Custom(kernel))
    }

    pub fn from_config(config: &KernelConfig, alpha: f64) -> Result<Self> {
        match *config {
            KernelConfig::Pareto {} => Self::pareto(alpha),
            KernelConfig::TruncatedPareto { a } => Self::truncated_pareto(alpha, a),
        }
    }

    pub fn to_config(&self) -> Option<KernelConfig> {
        match *self {
            MutationKernel::Pareto { .. } => Some(KernelConfig::Pareto {}),
            MutationKernel::TruncatedPareto { a, .. } => Some(KernelConfig::TruncatedPareto { a }),
            MutationKernel::Custom(_) => None,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            MutationKernel::Pareto { alpha } | MutationKernel::TruncatedPareto { alpha, .. } => *alpha,
            MutationKernel::Custom(c) => c.alpha,
        }
    }

    /// True when the law of `X(x)` does not depend on `x`.
    pub fn is_homogeneous(&self) -> bool {
        !matches!(self, MutationKernel::Custom(_))
    }

    /// `P(|X(x)| >= u)`.
    pub fn tail(&self, x: f64, u: f64) -> f64 {
        match self {
            MutationKernel::Pareto { alpha } => {
                if u <= 1.0 {
                    1.0
                } else {
                    u.powf(-alpha)
                }
            }
            MutationKernel::TruncatedPareto { alpha, a } => {
                let (alpha, a) = (*alpha, *a);
                if u <= 0.0 {
                    1.0
                } else if u < a {
                    1.0 - alpha * u / (a * (alpha + 1.0))
                } else {
                    (a / u).powf(alpha) / (alpha + 1.0)
                }
            }
            MutationKernel::Custom(c) => (c.tail)(x, u),
        }
    }

    /// `sigma(x) = (alpha/2) lim u^alpha P(|X(x)| >= u)`.
    pub fn sigma(&self, x: f64) -> f64 {
        match self {
            MutationKernel::Pareto { alpha } => alpha / 2.0,
            MutationKernel::TruncatedPareto { alpha, a } => {
                alpha * a.powf(*alpha) / (2.0 * (alpha + 1.0))
            }
            MutationKernel::Custom(c) => (c.sigma)(x),
        }
    }

    /// Points where the tail is not smooth in `u`; quadratures split there.
    pub fn tail_breakpoints(&self) -> Vec<f64> {
        match self {
            MutationKernel::Pareto { .. } => vec![1.0],
            MutationKernel::TruncatedPareto { a, .. } => vec![*a],
            MutationKernel::Custom(_) => Vec::new(),
        }
    }

    /// Smallest `u0` with `tail(u) = (2 sigma / alpha) u^{-alpha}` for all
    /// `u >= u0`, if the kernel has an exact power tail.
    pub fn exact_power_tail_from(&self) -> Option<f64> {
        match self {
            MutationKernel::Pareto { .. } => Some(1.0),
            MutationKernel::TruncatedPareto { a, .. } => Some(*a),
            MutationKernel::Custom(_) => None,
        }
    }

    /// Signed draw of `X(x)`.
    pub fn sample_x(&self, x: f64, rng: &mut SimRng) -> f64 {
        let magnitude = match self {
            MutationKernel::Pareto { alpha } => pareto_abs(open_unit(rng), *alpha),
            MutationKernel::TruncatedPareto { alpha, a } => {
                // Mass alpha/(alpha+1) sits uniformly on [0, a].
                let core = rng.random::<f64>() < alpha / (alpha + 1.0);
                if core {
                    a * rng.random::<f64>()
                } else {
                    a * pareto_abs(open_unit(rng), *alpha)
                }
            }
            MutationKernel::Custom(c) => return (c.sampler)(x, rng),
        };
        if rng.random::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    }

    /// Signed mutation step, distributed as `M_K(x, .)`.
    pub fn sample_step(&self, x: f64, k: u64, eta: f64, rng: &mut SimRng) -> f64 {
        self.sample_x(x, rng) * step_scale(k, eta, self.alpha())
    }
}

/// `K^{-eta/alpha}`.
#[inline]
pub fn step_scale(k: u64, eta: f64, alpha: f64) -> f64 {
    (k as f64).powf(-eta / alpha)
}
