//! Model parameters and their JSON configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kernel::{step_scale, KernelConfig, MutationKernel};
use super::rates::{RateFn, TraitFn};
use crate::{Error, Result};

/// Declared global bounds `r̄, b̄, d̄, Ū, V̄`.
///
/// `d` is bounded linearly: `d(x, z) <= d̄ (1 + |z|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub r: f64,
    pub b: f64,
    pub d: f64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "V")]
    pub v: f64,
}

#[derive(Debug, Clone)]
pub struct ModelParams {
    pub r: TraitFn,
    pub b: RateFn,
    pub d: RateFn,
    pub p: TraitFn,
    pub u: TraitFn,
    pub v: TraitFn,
    pub kernel: MutationKernel,
    pub eta: f64,
    pub k: u64,
    pub bounds: Bounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub r: TraitFn,
    pub b: RateFn,
    pub d: RateFn,
    pub p: TraitFn,
    #[serde(rename = "U")]
    pub u: TraitFn,
    #[serde(rename = "V")]
    pub v: TraitFn,
}

/// The JSON model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub alpha: f64,
    pub eta: f64,
    #[serde(rename = "K")]
    pub k: u64,
    pub kernel: KernelConfig,
    pub rates: RatesConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<ModelParams> {
        let kernel = MutationKernel::from_config(&self.kernel, self.alpha)?;
        let rates = &self.rates;
        let mut params = ModelParams::new(
            rates.r.clone(),
            rates.b.clone(),
            rates.d.clone(),
            rates.p.clone(),
            rates.u.clone(),
            rates.v.clone(),
            kernel,
            self.eta,
            self.k,
        )?;
        if let Some(bounds) = self.bounds {
            params.bounds = bounds;
        }
        Ok(params)
    }
}

impl ModelParams {
    /// Builds parameters with bounds read off the analytic forms.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        r: TraitFn,
        b: RateFn,
        d: RateFn,
        p: TraitFn,
        u: TraitFn,
        v: TraitFn,
        kernel: MutationKernel,
        eta: f64,
        k: u64,
    ) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!("eta = {eta} must lie in (0, 1]")));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("K must be at least 1".into()));
        }
        for (name, f) in [("r", &r), ("p", &p), ("U", &u), ("V", &v)] {
            f.validate(name).map_err(Error::Config)?;
        }
        for (name, f) in [("b", &b), ("d", &d)] {
            f.validate(name).map_err(Error::Config)?;
        }
        let bounds = Bounds {
            r: r.sup().max(0.0),
            b: b.sup().max(0.0),
            d: d.linear_growth_bound(),
            u: u.sup().max(0.0),
            v: v.sup().max(0.0),
        };
        Ok(ModelParams {
            r,
            b,
            d,
            p,
            u,
            v,
            kernel,
            eta,
            k,
            bounds,
        })
    }

    pub fn to_config(&self) -> Option<ModelConfig> {
        Some(ModelConfig {
            alpha: self.alpha(),
            eta: self.eta,
            k: self.k,
            kernel: self.kernel.to_config()?,
            rates: RatesConfig {
                r: self.r.clone(),
                b: self.b.clone(),
                d: self.d.clone(),
                p: self.p.clone(),
                u: self.u.clone(),
                v: self.v.clone(),
            },
            bounds: Some(self.bounds),
        })
    }

    pub fn with_k(&self, k: u64) -> Self {
        assert!(k >= 1);
        ModelParams { k, ..self.clone() }
    }

    pub fn alpha(&self) -> f64 {
        self.kernel.alpha()
    }

    /// `K^eta`.
    pub fn k_eta(&self) -> f64 {
        (self.k as f64).powf(self.eta)
    }

    /// `K^{-eta/alpha}`, the spatial scale of a mutation step.
    pub fn step_scale(&self) -> f64 {
        step_scale(self.k, self.eta, self.alpha())
    }

    /// `sigma~(x) = p(x) r(x) sigma(x)`, the diffusion coefficient of the
    /// limit equation.
    pub fn sigma_tilde(&self, x: f64) -> f64 {
        self.p.eval(x) * self.r.eval(x) * self.kernel.sigma(x)
    }

    /// `sigma^(x) = sigma~(x)^{1/alpha}`.
    pub fn sigma_hat(&self, x: f64) -> f64 {
        self.sigma_tilde(x).max(0.0).powf(1.0 / self.alpha())
    }

    /// Upper bound on the total event rate of a population of `i`
    /// individuals, from the declared bounds.
    pub fn total_rate_bound(&self, i: u64) -> f64 {
        let b = &self.bounds;
        let i = i as f64;
        (2.0 * b.r * self.k_eta() + b.b + b.d) * i + b.d * b.u * i * i / self.k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"{
        "alpha": 1.5, "eta": 0.5, "K": 100,
        "kernel": {"type": "pareto"},
        "rates": {
            "r": {"form": "constant", "params": {"value": 2}},
            "b": {"form": "constant", "params": {"value": 1}},
            "d": {"form": "logistic", "params": {"intercept": 0, "slope": 1}},
            "p": {"form": "constant", "params": {"value": 0.1}},
            "U": {"form": "constant", "params": {"value": 1}},
            "V": {"form": "constant", "params": {"value": 0}}
        }
    }"#;

    #[test]
    fn builds_from_json() {
        let p = ModelConfig::from_json(CONFIG).unwrap().build().unwrap();
        assert_eq!(p.k, 100);
        assert!((p.k_eta() - 10.0).abs() < 1e-12);
        assert!((p.sigma_tilde(0.0) - 0.15).abs() < 1e-15);
        assert_eq!(p.bounds.d, 1.0);
        let back = p.to_config().unwrap();
        assert_eq!(back.build().unwrap().to_config(), Some(back));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_exponents() {
        let extra = CONFIG.replacen("\"eta\"", "\"gamma\": 1, \"eta\"", 1);
        assert!(ModelConfig::from_json(&extra).is_err());
        let bad_alpha = CONFIG.replacen("1.5", "2.5", 1);
        assert!(ModelConfig::from_json(&bad_alpha).unwrap().build().is_err());
        let bad_eta = CONFIG.replacen("0.5", "1.5", 1);
        assert!(ModelConfig::from_json(&bad_eta).unwrap().build().is_err());
        let bad_kernel = CONFIG.replacen(r#"{"type": "pareto"}"#, r#"{"type": "pareto", "a": 1}"#, 1);
        assert!(ModelConfig::from_json(&bad_kernel).is_err());
    }

    #[test]
    fn declared_bounds_override_derived_ones() {
        let with_bounds = CONFIG.replacen(
            "\"kernel\"",
            r#""bounds": {"r": 3, "b": 1, "d": 1, "U": 1, "V": 0}, "kernel""#,
            1,
        );
        let p = ModelConfig::from_json(&with_bounds).unwrap().build().unwrap();
        assert_eq!(p.bounds.r, 3.0);
    }
}
