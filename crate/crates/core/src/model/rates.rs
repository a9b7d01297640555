//! Closed registry of the analytic coefficient forms a model may use.
//!
//! Configs select forms by name; arbitrary user code is not accepted.

use serde::{Deserialize, Serialize};

/// A function of the trait alone: `r`, `p`, the interaction kernels `U`, `V`
/// and the SDE coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum TraitFn {
    Constant {
        value: f64,
    },
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `value` on `[lo, hi]`, 0 elsewhere.
    Window {
        value: f64,
        lo: f64,
        hi: f64,
    },
    /// Smooth step from `low` (x -> -inf) to `high` (x -> +inf).
    Sigmoid {
        low: f64,
        high: f64,
        center: f64,
        scale: f64,
    },
}

impl TraitFn {
    pub fn constant(value: f64) -> Self {
        TraitFn::Constant { value }
    }

    pub fn zero() -> Self {
        TraitFn::Constant { value: 0.0 }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TraitFn::Constant { value } => value,
            TraitFn::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let s = (x - center) / width;
                amplitude * (-0.5 * s * s).exp()
            }
            TraitFn::Window { value, lo, hi } => {
                if (lo..=hi).contains(&x) {
                    value
                } else {
                    0.0
                }
            }
            TraitFn::Sigmoid {
                low,
                high,
                center,
                scale,
            } => low + (high - low) / (1.0 + (-(x - center) / scale).exp()),
        }
    }

    /// `Some(c)` when the form is the constant `c`.
    pub fn as_constant(&self) -> Option<f64> {
        match *self {
            TraitFn::Constant { value } => Some(value),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    /// Supremum over the real line.
    pub fn sup(&self) -> f64 {
        match *self {
            TraitFn::Constant { value } => value,
            TraitFn::Gaussian { amplitude, .. } => amplitude.max(0.0),
            TraitFn::Window { value, .. } => value.max(0.0),
            TraitFn::Sigmoid { low, high, .. } => low.max(high),
        }
    }

    /// Infimum over the real line.
    pub fn inf(&self) -> f64 {
        match *self {
            TraitFn::Constant { value } => value,
            TraitFn::Gaussian { amplitude, .. } => amplitude.min(0.0),
            TraitFn::Window { value, .. } => value.min(0.0),
            TraitFn::Sigmoid { low, high, .. } => low.min(high),
        }
    }

    /// Global Lipschitz constant (infinite for the discontinuous window).
    pub fn lipschitz(&self) -> f64 {
        match *self {
            TraitFn::Constant { .. } => 0.0,
            TraitFn::Gaussian {
                amplitude, width, ..
            } => amplitude.abs() / width * (-0.5f64).exp(),
            TraitFn::Window { value, .. } => {
                if value == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            TraitFn::Sigmoid {
                low, high, scale, ..
            } => (high - low).abs() / (4.0 * scale.abs()),
        }
    }

    pub(crate) fn validate(&self, name: &str) -> Result<(), String> {
        let ok = match *self {
            TraitFn::Constant { value } => value.is_finite(),
            TraitFn::Gaussian {
                amplitude,
                center,
                width,
            } => amplitude.is_finite() && center.is_finite() && width > 0.0,
            TraitFn::Window { value, lo, hi } => value.is_finite() && lo <= hi,
            TraitFn::Sigmoid {
                low,
                high,
                center,
                scale,
            } => low.is_finite() && high.is_finite() && center.is_finite() && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("malformed `{name}` form: {self:?}"))
        }
    }
}

/// A birth or death coefficient `(x, z) -> rate`, where `z` is the value of
/// the interaction convolution at `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateFn {
    Constant {
        value: f64,
    },
    /// `intercept + slope * z`: logistic competition when used for deaths.
    Logistic {
        intercept: f64,
        slope: f64,
    },
    /// Trait-dependent, interaction-free profile.
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    Window {
        value: f64,
        lo: f64,
        hi: f64,
    },
}

impl RateFn {
    pub fn constant(value: f64) -> Self {
        RateFn::Constant { value }
    }

    pub fn logistic(intercept: f64, slope: f64) -> Self {
        RateFn::Logistic { intercept, slope }
    }

    #[inline]
    pub fn eval(&self, x: f64, z: f64) -> f64 {
        match *self {
            RateFn::Constant { value } => value,
            RateFn::Logistic { intercept, slope } => intercept + slope * z,
            RateFn::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let s = (x - center) / width;
                amplitude * (-0.5 * s * s).exp()
            }
            RateFn::Window { value, lo, hi } => {
                if (lo..=hi).contains(&x) {
                    value
                } else {
                    0.0
                }
            }
        }
    }

    pub fn depends_on_z(&self) -> bool {
        matches!(self, RateFn::Logistic { slope, .. } if *slope != 0.0)
    }

    pub fn depends_on_x(&self) -> bool {
        matches!(self, RateFn::Gaussian { .. } | RateFn::Window { .. })
    }

    /// Lipschitz constant in `z`.
    pub fn z_lipschitz(&self) -> f64 {
        match *self {
            RateFn::Logistic { slope, .. } => slope.abs(),
            _ => 0.0,
        }
    }

    /// Smallest `c` with `|rate(x, z)| <= c (1 + |z|)` for all `x, z`.
    pub fn linear_growth_bound(&self) -> f64 {
        match *self {
            RateFn::Constant { value } => value.abs(),
            RateFn::Logistic { intercept, slope } => intercept.abs().max(slope.abs()),
            RateFn::Gaussian { amplitude, .. } => amplitude.abs(),
            RateFn::Window { value, .. } => value.abs(),
        }
    }

    /// Supremum over all `(x, z)`; infinite when the form grows in `z`.
    pub fn sup(&self) -> f64 {
        match *self {
            RateFn::Constant { value } => value,
            RateFn::Logistic { intercept, slope } => {
                if slope == 0.0 {
                    intercept
                } else {
                    f64::INFINITY
                }
            }
            RateFn::Gaussian { amplitude, .. } => amplitude.max(0.0),
            RateFn::Window { value, .. } => value.max(0.0),
        }
    }

    pub(crate) fn validate(&self, name: &str) -> Result<(), String> {
        let ok = match *self {
            RateFn::Constant { value } => value.is_finite(),
            RateFn::Logistic { intercept, slope } => intercept.is_finite() && slope.is_finite(),
            RateFn::Gaussian {
                amplitude,
                center,
                width,
            } => amplitude.is_finite() && center.is_finite() && width > 0.0,
            RateFn::Window { value, lo, hi } => value.is_finite() && lo <= hi,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("malformed `{name}` form: {self:?}"))
        }
    }
}
