//! Discretisation of the driver `Z_t = ∫ h (N(dt, dh) - dt dh / |h|^{1+alpha})`
//! restricted to jumps in `(-1, 1)`.
//!
//! Jumps with `epsilon_cut < |h| < 1` form a compound Poisson process. The
//! jumps below the cut are either dropped or replaced by a Brownian motion
//! of matching variance.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::quad::{geometric_panels, gl8};
use crate::rng::{exponential, open_unit, SimRng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallJumpMode {
    Drop,
    GaussianMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSchemeSpec {
    pub epsilon_cut: f64,
    pub small_jump_mode: SmallJumpMode,
    /// Longest Gaussian sub-step between two jumps.
    pub dt_max: f64,
}

impl JumpSchemeSpec {
    /// Gaussian matching for `alpha >= 1`; below 1 the small jumps are
    /// summable and are dropped.
    pub fn default_for(alpha: f64) -> Self {
        JumpSchemeSpec {
            epsilon_cut: 0.01,
            small_jump_mode: if alpha >= 1.0 {
                SmallJumpMode::GaussianMatch
            } else {
                SmallJumpMode::Drop
            },
            dt_max: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_cut > 0.0 && self.epsilon_cut < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon_cut must lie in (0, 1), got {}",
                self.epsilon_cut
            )));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::InvalidParameter(format!("dt_max must be positive, got {}", self.dt_max)));
        }
        Ok(())
    }

    /// Intensity of jumps with `epsilon_cut < |h| < 1`: `2 (eps^{-alpha} - 1) / alpha`.
    pub fn jump_rate(&self, alpha: f64) -> f64 {
        2.0 * (self.epsilon_cut.powf(-alpha) - 1.0) / alpha
    }

    /// Variance per unit time of the jumps below the cut, `2 eps^{2-alpha} / (2 - alpha)`.
    pub fn small_jump_variance(&self, alpha: f64) -> f64 {
        2.0 * self.epsilon_cut.powf(2.0 - alpha) / (2.0 - alpha)
    }

    /// A jump size with density proportional to `|h|^{-1-alpha}` on
    /// `epsilon_cut < |h| < 1`, by inversion.
    pub fn sample_jump(&self, alpha: f64, rng: &mut SimRng) -> f64 {
        let top = self.epsilon_cut.powf(-alpha);
        let u = 1.0 - open_unit(rng);
        let size = (top - u * (top - 1.0)).powf(-1.0 / alpha);
        if rng.random::<bool>() {
            size
        } else {
            -size
        }
    }
}

/// `∫_{eps < |h| < 1} h dh / |h|^{1+alpha}` by quadrature, each half
/// integrated on its own side. The scheme adds no drift, which is correct
/// only if this vanishes.
pub fn compensator_drift(alpha: f64, epsilon_cut: f64) -> f64 {
    let panels = geometric_panels(epsilon_cut, 1.0, 16, 1.0);
    let rule = gl8();
    let right = rule.integrate_panels(&panels, |h| h * h.abs().powf(-1.0 - alpha));
    let mirrored: Vec<(f64, f64)> = panels.iter().map(|&(a, b)| (-b, -a)).collect();
    let left = rule.integrate_panels(&mirrored, |h| h * h.abs().powf(-1.0 - alpha));
    right + left
}

/// One step of the driver, applied to every starting point alike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Increment {
    /// A jump of `Z` of size `h` at `time`.
    Jump { time: f64, h: f64 },
    /// A Gaussian increment of the small-jump part, already scaled.
    Gauss { time: f64, dz: f64 },
    /// Marks the requested observation time with this index.
    Mark { time: f64, index: usize },
}

/// A realisation of the driver on `[0, horizon]`, as a list of increments.
/// Independent of the starting point, so one realisation can drive a whole
/// family of paths (common random numbers).
#[derive(Debug, Clone)]
pub(crate) struct DriverPath {
    pub increments: Vec<Increment>,
}

impl DriverPath {
    /// Samples the driver, inserting a mark at each of `marks` (sorted, in
    /// `[0, horizon]`).
    pub fn sample(
        scheme: &JumpSchemeSpec,
        alpha: f64,
        horizon: f64,
        marks: &[f64],
        rng: &mut SimRng,
    ) -> Self {
        let rate = scheme.jump_rate(alpha);
        let var = match scheme.small_jump_mode {
            SmallJumpMode::GaussianMatch => scheme.small_jump_variance(alpha),
            SmallJumpMode::Drop => 0.0,
        };
        let mut increments = Vec::new();
        let mut t = 0.0;
        let mut next_mark = 0;
        loop {
            let jump_at = t + exponential(rng, rate);
            let target = jump_at.min(horizon);
            // Gaussian sub-steps up to the next jump, broken at marks.
            while t < target {
                while next_mark < marks.len() && marks[next_mark] <= t {
                    increments.push(Increment::Mark {
                        time: marks[next_mark],
                        index: next_mark,
                    });
                    next_mark += 1;
                }
                let mut stop = target;
                if next_mark < marks.len() && marks[next_mark] < stop {
                    stop = marks[next_mark];
                }
                if var > 0.0 {
                    let n = ((stop - t) / scheme.dt_max).ceil().max(1.0) as usize;
                    let h = (stop - t) / n as f64;
                    for k in 0..n {
                        let z: f64 = StandardNormal.sample(rng);
                        let time = if k + 1 == n { stop } else { t + h * (k + 1) as f64 };
                        increments.push(Increment::Gauss {
                            time,
                            dz: (var * h).sqrt() * z,
                        });
                    }
                }
                t = stop;
            }
            while next_mark < marks.len() && marks[next_mark] <= t {
                increments.push(Increment::Mark {
                    time: marks[next_mark],
                    index: next_mark,
                });
                next_mark += 1;
            }
            if jump_at > horizon {
                break;
            }
            increments.push(Increment::Jump {
                time: jump_at,
                h: scheme.sample_jump(alpha, rng),
            });
        }
        while next_mark < marks.len() {
            increments.push(Increment::Mark {
                time: marks[next_mark],
                index: next_mark,
            });
            next_mark += 1;
        }
        DriverPath { increments }
    }

    /// Runs `dX = sigma_hat(X_-) dZ` from `x0`, calling `visit(index, x)` at
    /// every mark.
    pub fn drive<S, V>(&self, x0: f64, sigma_hat: &S, mut visit: V) -> f64
    where
        S: Fn(f64) -> f64 + ?Sized,
        V: FnMut(usize, f64),
    {
        let mut x = x0;
        for inc in &self.increments {
            match *inc {
                Increment::Jump { h, .. } => x += sigma_hat(x) * h,
                Increment::Gauss { dz, .. } => x += sigma_hat(x) * dz,
                Increment::Mark { index, .. } => visit(index, x),
            }
        }
        x
    }
}

/// Largest difference quotient of `sigma_hat` on `n` equally spaced points
/// of `[lo, hi]`.
pub fn lipschitz_probe<S: Fn(f64) -> f64 + ?Sized>(sigma_hat: &S, lo: f64, hi: f64, n: usize) -> f64 {
    let n = n.max(2);
    let dx = (hi - lo) / (n - 1) as f64;
    let mut prev = sigma_hat(lo);
    let mut worst: f64 = 0.0;
    for i in 1..n {
        let v = sigma_hat(lo + dx * i as f64);
        worst = worst.max((v - prev).abs() / dx);
        prev = v;
    }
    worst
}

/// Probes at two resolutions; a quotient that keeps growing under
/// refinement points at a non-Lipschitz coefficient.
pub fn looks_lipschitz<S: Fn(f64) -> f64 + ?Sized>(sigma_hat: &S, lo: f64, hi: f64) -> bool {
    let coarse = lipschitz_probe(sigma_hat, lo, hi, 1001);
    let fine = lipschitz_probe(sigma_hat, lo, hi, 16001);
    fine.is_finite() && fine <= 2.0 * coarse + 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn symmetric_measure_has_no_drift() {
        for alpha in [0.5, 1.0, 1.5, 1.9] {
            assert!(compensator_drift(alpha, 1e-3).abs() < 1e-12);
        }
    }

    #[test]
    fn jump_sizes_stay_in_range_with_the_right_law() {
        let s = JumpSchemeSpec::default_for(1.5);
        let mut rng = stream(3, 0);
        let mut below = 0;
        let n = 100_000;
        let mid: f64 = 0.1;
        for _ in 0..n {
            let h = s.sample_jump(1.5, &mut rng);
            assert!(h.abs() > s.epsilon_cut && h.abs() < 1.0);
            if h.abs() < mid {
                below += 1;
            }
        }
        let top = s.epsilon_cut.powf(-1.5);
        let p = (top - mid.powf(-1.5)) / (top - 1.0);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((below as f64 / n as f64 - p).abs() < 4.0 * se);
    }

    #[test]
    fn marks_are_visited_in_order() {
        let s = JumpSchemeSpec::default_for(1.5);
        let marks = [0.0, 0.25, 0.5, 1.0];
        let d = DriverPath::sample(&s, 1.5, 1.0, &marks, &mut stream(1, 4));
        let mut seen = Vec::new();
        d.drive(0.0, &|_| 1.0, |i, _| seen.push(i));
        assert_eq!(seen, vec![0, 1, 2, 3]);
        let mut last = 0.0;
        for inc in &d.increments {
            let t = match *inc {
                Increment::Jump { time, .. } | Increment::Gauss { time, .. } | Increment::Mark { time, .. } => time,
            };
            assert!(t >= last && t <= 1.0);
            last = t;
        }
    }

    #[test]
    fn lipschitz_probe_flags_a_root_singularity() {
        assert!(looks_lipschitz(&|x: f64| x.sin(), -3.0, 3.0));
        assert!(!looks_lipschitz(&|x: f64| x.max(0.0).sqrt(), -1.0, 1.0));
    }
}
