//! Mass-control cutoffs `f_n(x) = psi(0 ∨ (|x| - (n-1)) ∧ 1)` and the bounds
//! on their fractional Laplacian.

use serde::Serialize;

use super::laplacian::{check_alpha, laplacian_unchecked, QuadratureSpec};
use crate::model::{TestFn, TestFunction, PSI_D2_SUP};
use crate::{Error, Result};

/// `f_n(x)`.
pub fn mass_control_value(n: u32, x: f64) -> f64 {
    assert!(n >= 1, "cutoff index must be at least 1");
    TestFunction::cutoff(n).value(x)
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffPoint {
    pub x: f64,
    pub value: f64,
    /// `2 / (alpha (n - 1 - |x|)^alpha)`.
    pub local_bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffBoundReport {
    pub n: u32,
    pub alpha: f64,
    /// `sup |psi''| / (2 - alpha) + 2 / alpha`, uniform in `n` and `x`.
    pub global_bound: f64,
    pub max_abs: f64,
    pub points: Vec<CutoffPoint>,
    pub passed: bool,
}

/// Absolute slack granted to the quadrature when comparing with the bounds.
const QUAD_TOL: f64 = 1e-8;

/// Evaluates `D^alpha f_n` on `x_grid` (inside `(-(n-1), n-1)`) and checks
/// it against the local and the global bound.
pub fn mass_control_bound_check(
    n: u32,
    alpha: f64,
    x_grid: &[f64],
    quad: &QuadratureSpec,
) -> Result<CutoffBoundReport> {
    check_alpha(alpha)?;
    quad.validate()?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("cutoff index n = {n} must be at least 2")));
    }
    let edge = n as f64 - 1.0;
    if let Some(x) = x_grid.iter().find(|x| x.abs() >= edge) {
        return Err(Error::InvalidParameter(format!(
            "grid point {x} lies outside (-{edge}, {edge})"
        )));
    }
    let f = TestFunction::cutoff(n);
    let global_bound = PSI_D2_SUP / (2.0 - alpha) + 2.0 / alpha;
    let points: Vec<CutoffPoint> = x_grid
        .iter()
        .map(|&x| {
            let v = laplacian_unchecked(&f, x, alpha, quad);
            let local_bound = 2.0 / (alpha * (edge - x.abs()).powf(alpha));
            let tol = QUAD_TOL + v.tail_bracket;
            let passed = v.value.abs() <= local_bound + tol && v.value.abs() <= global_bound + tol;
            CutoffPoint {
                x,
                value: v.value,
                local_bound,
                passed,
            }
        })
        .collect();
    let max_abs = points.iter().map(|p| p.value.abs()).fold(0.0, f64::max);
    let passed = points.iter().all(|p| p.passed);
    Ok(CutoffBoundReport {
        n,
        alpha,
        global_bound,
        max_abs,
        points,
        passed,
    })
}
