//! Residual of the mild formulation
//!
//! ```text
//! <xi_t, f> = <xi_0, P_t f> + ∫_0^t <xi_s, (b - d) P_{t-s} f + J P_{t-s} f> ds,
//! J g(x) = ∫_{|h| >= 1} (g(x + sigma_hat(x) h) - g(x)) dh / |h|^{1+alpha},
//! ```
//!
//! with the left side read off a PDE run and `P_tau f` estimated by Monte
//! Carlo on a grid. All grid points share the same driver realisations, so
//! the estimated `P_tau f` is a smooth function of the starting point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scheme::{looks_lipschitz, DriverPath, JumpSchemeSpec};
use crate::fractional::QuadratureSpec;
use crate::model::{TestFn, TestFunction};
use crate::pde::{time_integral, weak_form_residual, PdeOperator, PdeRun};
use crate::quad::{geometric_panels, gl8};
use crate::rng::stream;
use crate::stats::Moments;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MildSpec {
    pub scheme: JumpSchemeSpec,
    pub n_samples: usize,
    /// Independent batches; their spread gives the Monte Carlo error.
    pub batches: usize,
    /// Extension of the PDE grid on each side for the `P_tau f` grid.
    pub margin: f64,
    pub seed: u64,
    pub quad: QuadratureSpec,
}

impl MildSpec {
    pub fn new(alpha: f64, n_samples: usize, seed: u64) -> Self {
        MildSpec {
            scheme: JumpSchemeSpec {
                epsilon_cut: 0.05,
                ..JumpSchemeSpec::default_for(alpha)
            },
            n_samples,
            batches: 20,
            margin: 5.0,
            seed,
            quad: QuadratureSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MildResidual {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub std_error: f64,
    /// Weak-form residual of the same run, the PDE discretisation error.
    pub weak_residual: f64,
    /// `leaked mass * sup |f|`.
    pub leak_term: f64,
    /// `|Simpson - trapezoid|` of the time integral.
    pub time_quadrature_error: f64,
    pub budget: f64,
    /// False when `sigma_hat` fails the Lipschitz probe on the grid; the
    /// mild formulation is then not guaranteed.
    pub sigma_hat_lipschitz: bool,
    pub passed: bool,
}

/// `J` on the extended grid as a dense matrix plus a far-field offset:
/// `(J u)_i = sum_k w_ik u_k + far_i`.
struct LargeJumpMap {
    weights: Vec<Vec<f64>>,
    far: Vec<f64>,
}

impl LargeJumpMap {
    #[allow(clippy::too_many_arguments)]
    fn new(
        xs: &[f64],
        offset: usize,
        y0: f64,
        dy: f64,
        ny: usize,
        sigma: &[f64],
        alpha: f64,
        far: (f64, f64),
        quad: &QuadratureSpec,
    ) -> Self {
        let y_end = y0 + dy * (ny - 1) as f64;
        let rule = gl8();
        let mut weights = Vec::with_capacity(xs.len());
        let mut far_terms = Vec::with_capacity(xs.len());
        for (i, &x) in xs.iter().enumerate() {
            let mut row = vec![0.0; ny];
            let s = sigma[i];
            if s == 0.0 {
                weights.push(row);
                far_terms.push(0.0);
                continue;
            }
            // In the displacement z = s h the measure is s^alpha |z|^{-1-alpha} dz.
            let scale = s.powf(alpha);
            row[i + offset] -= 2.0 / alpha;
            let mut far_term = 0.0;
            for (dir, reach, far_value) in [(1.0, y_end - x, far.1), (-1.0, x - y0, far.0)] {
                if reach > s {
                    let panels = geometric_panels(s, reach, quad.panels_per_decade(), dy);
                    for &(a, b) in &panels {
                        let half = 0.5 * (b - a);
                        let mid = 0.5 * (a + b);
                        for (&node, &w) in rule.nodes().iter().zip(rule.weights()) {
                            let z = mid + half * node;
                            let weight = w * half * scale * z.powf(-1.0 - alpha);
                            let pos = ((x + dir * z - y0) / dy).clamp(0.0, (ny - 1) as f64);
                            let k = (pos.floor() as usize).min(ny - 2);
                            let frac = pos - k as f64;
                            row[k] += weight * (1.0 - frac);
                            row[k + 1] += weight * frac;
                        }
                    }
                }
                far_term += far_value * scale * reach.max(s).powf(-alpha) / alpha;
            }
            weights.push(row);
            far_terms.push(far_term);
        }
        LargeJumpMap {
            weights,
            far: far_terms,
        }
    }

    fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.far)
            .map(|(row, far)| row.iter().zip(u).map(|(w, v)| w * v).sum::<f64>() + far)
            .collect()
    }
}

/// Both sides of the mild formulation at output time `t` of `run`, with a
/// Monte Carlo error and a discretisation budget.
pub fn mild_residual(run: &PdeRun, f: &TestFunction, t: f64, spec: &MildSpec) -> Result<MildResidual> {
    spec.scheme.validate()?;
    spec.quad.validate()?;
    if spec.batches < 2 || spec.n_samples < spec.batches || !(spec.margin >= 0.0) {
        return Err(Error::InvalidParameter(
            "mild residual needs at least 2 batches, one sample per batch and a margin >= 0".into(),
        ));
    }
    let last = run
        .times
        .iter()
        .position(|&s| s == t)
        .ok_or_else(|| Error::InvalidParameter(format!("t = {t} is not an output time of the run")))?;
    let params = &run.params;
    let alpha = params.alpha();
    let op = PdeOperator::new(params, run.grid)?;
    let xs = run.grid.points();
    let nx = xs.len();
    let dx = run.grid.dx();
    let offset = (spec.margin / dx).ceil() as usize;
    let ny = nx + 2 * offset;
    let y0 = run.grid.x_min - offset as f64 * dx;
    // The interior coincides with the PDE grid point for point.
    let ys: Vec<f64> = (0..ny)
        .map(|k| match k.checked_sub(offset).filter(|&i| i < nx) {
            Some(i) => xs[i],
            None => y0 + dx * k as f64,
        })
        .collect();
    let sigma_x: Vec<f64> = xs.iter().map(|&x| params.sigma_hat(x)).collect();
    let sigma_y: Vec<f64> = ys.iter().map(|&y| params.sigma_hat(y)).collect();
    let lipschitz = looks_lipschitz(&|x| params.sigma_hat(x), ys[0], ys[ny - 1]);

    let pair = |xi: &[f64], g: &[f64]| -> f64 {
        let v: Vec<f64> = xi.iter().zip(g).map(|(a, b)| a * b).collect();
        op.integral(&v)
    };
    let fx: Vec<f64> = xs.iter().map(|&x| f.value(x)).collect();
    let lhs = pair(&run.snapshots[last].values, &fx);

    // tau_j = t - s_j; marks must increase, so they are stored reversed.
    let taus: Vec<f64> = run.times[..=last].iter().map(|&s| (t - s).max(0.0)).collect();
    let marks: Vec<f64> = taus.iter().rev().copied().collect();
    let m = marks.len();
    let horizon = marks[m - 1];

    let growth: Vec<Vec<f64>> = run.snapshots[..=last].iter().map(|xi| op.growth(&xi.values)).collect();
    let jmap = LargeJumpMap::new(&xs, offset, y0, dx, ny, &sigma_x, alpha, f.far_values(), &spec.quad);

    let constant_sigma = sigma_y.iter().all(|&s| s == sigma_y[0]);
    let per_batch = spec.n_samples / spec.batches;
    let mut rhs_batches = Vec::with_capacity(spec.batches);
    let mut mean_integrand = vec![0.0; last + 1];
    let mut mean_initial = 0.0;
    for b in 0..spec.batches {
        let drivers: Vec<DriverPath> = (0..per_batch)
            .map(|i| {
                let id = (b * per_batch + i) as u64;
                DriverPath::sample(&spec.scheme, alpha, horizon, &marks, &mut stream(spec.seed, id))
            })
            .collect();
        // u[k][y]: batch mean of f(X^y_{marks[k]}).
        let columns: Vec<Vec<f64>> = ys
            .par_iter()
            .map(|&y| {
                // Running means, exact when every path agrees.
                let mut mean = vec![0.0; m];
                for (n, d) in drivers.iter().enumerate() {
                    let w = 1.0 / (n + 1) as f64;
                    let visit = |k: usize, x: f64| mean[k] += (f.value(x) - mean[k]) * w;
                    if constant_sigma {
                        let s = sigma_y[0];
                        d.drive(y, &|_| s, visit);
                    } else {
                        d.drive(y, &|x| params.sigma_hat(x), visit);
                    }
                }
                mean
            })
            .collect();
        let u_at = |k: usize| -> Vec<f64> { columns.iter().map(|c| c[k]).collect() };
        let integrand: Vec<f64> = (0..=last)
            .map(|j| {
                let u = u_at(m - 1 - j);
                let ju = jmap.apply(&u);
                let g: Vec<f64> = (0..nx).map(|i| growth[j][i] * u[i + offset] + ju[i]).collect();
                pair(&run.snapshots[j].values, &g)
            })
            .collect();
        let u_t = u_at(m - 1);
        let initial = pair(&run.snapshots[0].values, &u_t[offset..offset + nx]);
        rhs_batches.push(initial + time_integral(&run.times[..=last], &integrand));
        mean_initial += initial / spec.batches as f64;
        for (a, v) in mean_integrand.iter_mut().zip(&integrand) {
            *a += v / spec.batches as f64;
        }
    }
    let stats = Moments::from_slice(&rhs_batches);
    let rhs = stats.mean;
    let trapezoid: f64 = run.times[..=last]
        .windows(2)
        .zip(mean_integrand.windows(2))
        .map(|(s, v)| 0.5 * (s[1] - s[0]) * (v[0] + v[1]))
        .sum();
    let time_quadrature_error = (mean_initial + trapezoid - rhs).abs();
    let weak_residual = if last == 0 {
        0.0
    } else {
        weak_form_residual(run, f, t, &spec.quad)?
    };
    let leak_term = run.diagnostics.leaked_mass * f.sup_norm();
    let std_error = stats.std_error();
    let residual = (lhs - rhs).abs();
    let budget = weak_residual + leak_term + time_quadrature_error + 3.0 * std_error;
    Ok(MildResidual {
        t,
        lhs,
        rhs,
        residual,
        std_error,
        weak_residual,
        leak_term,
        time_quadrature_error,
        budget,
        sigma_hat_lipschitz: lipschitz,
        passed: residual <= budget,
    })
}
