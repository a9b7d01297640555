//! Weak-form residual: the operator is moved onto the test function,
//!
//! ```text
//! <xi_t, f> - <xi_0, f> - ∫_0^t <xi_s, (b - d) f + sigma~ D^alpha f> ds.
//! ```

use super::operator::PdeOperator;
use super::solver::PdeRun;
use crate::fractional::{frac_laplacian_grid, QuadratureSpec};
use crate::model::{TestFn, TestFunction};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakResidual {
    pub lhs: f64,
    pub rhs: f64,
}

impl WeakResidual {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Composite Simpson on uniformly spaced samples with an even number of
/// intervals, trapezoid otherwise.
pub(crate) fn time_integral(times: &[f64], values: &[f64]) -> f64 {
    let n = times.len();
    if n < 2 {
        return 0.0;
    }
    let h = (times[n - 1] - times[0]) / (n - 1) as f64;
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(f64::MIN_POSITIVE));
    if uniform && (n - 1) % 2 == 0 {
        let mut acc = values[0] + values[n - 1];
        for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
            acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        acc * h / 3.0
    } else {
        times
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum()
    }
}

/// Both sides of the weak form at output time `t`, the time integral taken
/// over the output times in `[0, t]`.
pub fn weak_form_sides(run: &PdeRun, f: &TestFunction, t: f64, quad: &QuadratureSpec) -> Result<WeakResidual> {
    let last = run
        .times
        .iter()
        .position(|&s| s == t)
        .ok_or_else(|| Error::InvalidParameter(format!("t = {t} is not an output time of the run")))?;
    let op = PdeOperator::new(&run.params, run.grid)?;
    let points = run.grid.points();
    let fx: Vec<f64> = points.iter().map(|&x| f.value(x)).collect();
    let diffusion: Vec<f64> = if op.sigma_tilde().iter().any(|&s| s != 0.0) {
        let lap = frac_laplacian_grid(f, &points, run.params.alpha(), quad)?;
        lap.iter().zip(op.sigma_tilde()).map(|(l, s)| s * l.value).collect()
    } else {
        vec![0.0; points.len()]
    };
    let integrand: Vec<f64> = run.snapshots[..=last]
        .iter()
        .map(|xi| {
            let growth = op.growth(&xi.values);
            let g: Vec<f64> = (0..points.len())
                .map(|i| xi.values[i] * (growth[i] * fx[i] + diffusion[i]))
                .collect();
            op.integral(&g)
        })
        .collect();
    let pair = |i: usize| {
        let g: Vec<f64> = run.snapshots[i].values.iter().zip(&fx).map(|(v, f)| v * f).collect();
        op.integral(&g)
    };
    Ok(WeakResidual {
        lhs: pair(last) - pair(0),
        rhs: time_integral(&run.times[..=last], &integrand),
    })
}

/// `|LHS - RHS|` of the weak form at output time `t`.
pub fn weak_form_residual(run: &PdeRun, f: &TestFunction, t: f64, quad: &QuadratureSpec) -> Result<f64> {
    Ok(weak_form_sides(run, f, t, quad)?.residual())
}
