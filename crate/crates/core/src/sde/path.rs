//! Paths of `dX = sigma_hat(X_-) dZ_t` and Monte Carlo estimates of the
//! semigroup `P_t f(x) = E f(X^x_t)`.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Discrete, Poisson};

use super::scheme::{compensator_drift, DriverPath, Increment, JumpSchemeSpec};
use crate::fractional::check_alpha;
use crate::model::TestFn;
use crate::rng::{stream, SimRng};
use crate::stats::{chi_squared_gof, ChiSquaredTest, Moments};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpRecord {
    pub time: f64,
    /// Jump of the driver.
    pub size: f64,
    /// Resulting jump of `X`.
    pub dx: f64,
}

/// A path, piecewise constant between the recorded times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdePath {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub jumps: Vec<JumpRecord>,
}

impl SdePath {
    pub fn terminal(&self) -> f64 {
        *self.states.last().expect("a path has at least its initial state")
    }
}

fn check_inputs(alpha: f64, horizon: f64, scheme: &JumpSchemeSpec) -> Result<()> {
    check_alpha(alpha)?;
    scheme.validate()?;
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    let drift = compensator_drift(alpha, scheme.epsilon_cut);
    debug_assert!(drift.abs() < 1e-9, "compensator drift {drift}");
    if drift.abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("jump measure is not symmetric: drift {drift}")));
    }
    Ok(())
}

/// One path from `x0` on `[0, horizon]`.
pub fn simulate_path<S>(
    x0: f64,
    sigma_hat: &S,
    alpha: f64,
    horizon: f64,
    scheme: &JumpSchemeSpec,
    rng: &mut SimRng,
) -> Result<SdePath>
where
    S: Fn(f64) -> f64 + ?Sized,
{
    check_inputs(alpha, horizon, scheme)?;
    let driver = DriverPath::sample(scheme, alpha, horizon, &[], rng);
    let mut path = SdePath {
        times: vec![0.0],
        states: vec![x0],
        jumps: Vec::new(),
    };
    let mut x = x0;
    for inc in &driver.increments {
        match *inc {
            Increment::Jump { time, h } => {
                let dx = sigma_hat(x) * h;
                x += dx;
                path.jumps.push(JumpRecord { time, size: h, dx });
                path.times.push(time);
                path.states.push(x);
            }
            Increment::Gauss { time, dz } => {
                x += sigma_hat(x) * dz;
                path.times.push(time);
                path.states.push(x);
            }
            Increment::Mark { .. } => {}
        }
    }
    if path.times.last() != Some(&horizon) {
        path.times.push(horizon);
        path.states.push(x);
    }
    Ok(path)
}

/// Terminal states and jump counts of `n` independent paths.
#[derive(Debug, Clone, Serialize)]
pub struct PathEnsemble {
    pub x0: f64,
    pub horizon: f64,
    pub alpha: f64,
    pub scheme: JumpSchemeSpec,
    pub seed: u64,
    pub terminal: Vec<f64>,
    pub jump_counts: Vec<u64>,
}

/// Path `i` draws from `stream(seed, i)`.
pub fn simulate_paths<S>(
    x0: f64,
    sigma_hat: &S,
    alpha: f64,
    horizon: f64,
    scheme: &JumpSchemeSpec,
    n: usize,
    seed: u64,
) -> Result<PathEnsemble>
where
    S: Fn(f64) -> f64 + Sync + ?Sized,
{
    check_inputs(alpha, horizon, scheme)?;
    let out: Vec<(f64, u64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let driver = DriverPath::sample(scheme, alpha, horizon, &[], &mut stream(seed, i));
            let jumps = driver
                .increments
                .iter()
                .filter(|inc| matches!(inc, Increment::Jump { .. }))
                .count() as u64;
            (driver.drive(x0, sigma_hat, |_, _| {}), jumps)
        })
        .collect();
    let (terminal, jump_counts) = out.into_iter().unzip();
    Ok(PathEnsemble {
        x0,
        horizon,
        alpha,
        scheme: *scheme,
        seed,
        terminal,
        jump_counts,
    })
}

/// Checks on a [`PathEnsemble`]: the mean displacement of a martingale and
/// the Poisson law of the jump count.
#[derive(Debug, Clone, Serialize)]
pub struct PathStatistics {
    pub n_paths: usize,
    pub mean_displacement: f64,
    pub displacement_std_error: f64,
    pub martingale_z: f64,
    pub expected_jumps: f64,
    pub mean_jumps: f64,
    pub jump_count_test: ChiSquaredTest,
}

impl PathStatistics {
    pub fn martingale_passes(&self, z_max: f64) -> bool {
        self.martingale_z.abs() < z_max
    }

    pub fn jump_counts_pass(&self, level: f64) -> bool {
        self.jump_count_test.p_value > 1.0 - level
    }
}

pub fn path_statistics(ens: &PathEnsemble) -> PathStatistics {
    let disp = Moments::from_slice(&ens.terminal.iter().map(|x| x - ens.x0).collect::<Vec<_>>());
    let mean = ens.scheme.jump_rate(ens.alpha) * ens.horizon;
    let max = ens.jump_counts.iter().copied().max().unwrap_or(0) as usize;
    let mut observed = vec![0u64; max + 2];
    for &c in &ens.jump_counts {
        observed[c as usize] += 1;
    }
    let n = ens.jump_counts.len() as f64;
    let mut expected: Vec<f64> = match Poisson::new(mean) {
        Ok(law) => (0..=max).map(|k| n * law.pmf(k as u64)).collect(),
        Err(_) => vec![0.0; max + 1],
    };
    // Last bin collects the upper tail beyond the largest observed count.
    let tail = (n - expected.iter().sum::<f64>()).max(0.0);
    expected.push(tail);
    let se = disp.std_error();
    PathStatistics {
        n_paths: ens.terminal.len(),
        mean_displacement: disp.mean,
        displacement_std_error: se,
        martingale_z: if se > 0.0 { disp.mean / se } else { 0.0 },
        expected_jumps: mean,
        mean_jumps: ens.jump_counts.iter().sum::<u64>() as f64 / n.max(1.0),
        jump_count_test: chi_squared_gof(&observed, &expected),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemigroupEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Monte Carlo `P_t f(x)` over `n_samples >= 100` paths, path `i` on
/// `stream(seed, i)`.
#[allow(clippy::too_many_arguments)]
pub fn semigroup_estimate<F, S>(
    f: &F,
    x: f64,
    t: f64,
    sigma_hat: &S,
    alpha: f64,
    scheme: &JumpSchemeSpec,
    n_samples: usize,
    seed: u64,
) -> Result<SemigroupEstimate>
where
    F: TestFn + ?Sized,
    S: Fn(f64) -> f64 + Sync + ?Sized,
{
    if n_samples < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 samples, got {n_samples}")));
    }
    let ens = simulate_paths(x, sigma_hat, alpha, t, scheme, n_samples, seed)?;
    let values: Vec<f64> = ens.terminal.iter().map(|&y| f.value(y)).collect();
    let m = Moments::from_slice(&values);
    Ok(SemigroupEstimate {
        estimate: m.mean,
        std_error: m.std_error(),
        n_samples,
    })
}
