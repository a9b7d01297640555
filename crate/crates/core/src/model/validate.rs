//! Probe-based checks of the boundedness and tail assumptions.

use serde::Serialize;

use super::params::ModelParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub x: f64,
    pub z: Option<f64>,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub passed: bool,
    /// First probe at which the check failed.
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<BoundCheck>,
    /// `max |u^alpha tail(x, u) - 2 sigma(x) / alpha|` over the probe traits
    /// and the largest probe levels `u`.
    pub tail_residual: f64,
    pub tail_residual_at: (f64, f64),
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Number of largest `u` levels entering the tail residual.
const TAIL_LEVELS: usize = 5;

fn run_check<I>(name: &str, probes: I) -> BoundCheck
where
    I: IntoIterator<Item = (f64, Option<f64>, f64, f64, f64)>,
{
    // Each probe is (x, z, value, lower, upper).
    for (x, z, value, lower, upper) in probes {
        let bad = !value.is_finite() || value < lower || value > upper;
        if bad {
            let bound = if value < lower { lower } else { upper };
            return BoundCheck {
                name: name.into(),
                passed: false,
                witness: Some(Witness { x, z, value, bound }),
            };
        }
    }
    BoundCheck {
        name: name.into(),
        passed: true,
        witness: None,
    }
}

/// Checks every declared bound on the probe grid and measures how closely
/// the kernel tail follows its power law. Violations are reported, never
/// raised.
pub fn validate_assumptions(
    params: &ModelParams,
    probe_traits: &[f64],
    probe_z: &[f64],
    u_grid: &[f64],
) -> Result<ValidationReport> {
    if probe_traits.is_empty() || probe_z.is_empty() || u_grid.is_empty() {
        return Err(Error::InvalidParameter("probe sets must be non-empty".into()));
    }
    let bd = params.bounds;
    let xs = probe_traits;
    let xz = || {
        xs.iter()
            .flat_map(move |&x| probe_z.iter().map(move |&z| (x, z)))
    };
    let mut checks = vec![
        run_check("r", xs.iter().map(|&x| (x, None, params.r.eval(x), 0.0, bd.r))),
        run_check(
            "b",
            xz().map(|(x, z)| (x, Some(z), params.b.eval(x, z), 0.0, bd.b)),
        ),
        run_check(
            "d",
            xz().map(|(x, z)| (x, Some(z), params.d.eval(x, z), 0.0, bd.d * (1.0 + z.abs()))),
        ),
        run_check("p", xs.iter().map(|&x| (x, None, params.p.eval(x), 0.0, 1.0))),
        run_check("U", xs.iter().map(|&x| (x, None, params.u.eval(x), 0.0, bd.u))),
        run_check("V", xs.iter().map(|&x| (x, None, params.v.eval(x), 0.0, bd.v))),
    ];

    let mut us: Vec<f64> = u_grid.iter().copied().filter(|u| *u >= 0.0).collect();
    us.sort_by(f64::total_cmp);
    let kernel = &params.kernel;
    let mut monotone = BoundCheck {
        name: "tail".into(),
        passed: true,
        witness: None,
    };
    'probe: for &x in xs {
        let at_zero = kernel.tail(x, 0.0);
        if at_zero != 1.0 {
            monotone.passed = false;
            monotone.witness = Some(Witness {
                x,
                z: Some(0.0),
                value: at_zero,
                bound: 1.0,
            });
            break;
        }
        let mut prev = at_zero;
        for &u in &us {
            let t = kernel.tail(x, u);
            if t > prev || !(0.0..=1.0).contains(&t) {
                monotone.passed = false;
                monotone.witness = Some(Witness {
                    x,
                    z: Some(u),
                    value: t,
                    bound: prev.min(1.0),
                });
                break 'probe;
            }
            prev = t;
        }
    }
    checks.push(monotone);

    let alpha = kernel.alpha();
    let mut tail_residual = 0.0;
    let mut tail_residual_at = (xs[0], us.last().copied().unwrap_or(0.0));
    for &x in xs {
        let target = 2.0 * kernel.sigma(x) / alpha;
        for &u in us.iter().rev().take(TAIL_LEVELS) {
            let res = (u.powf(alpha) * kernel.tail(x, u) - target).abs();
            if res > tail_residual || res.is_nan() {
                tail_residual = res;
                tail_residual_at = (x, u);
            }
        }
    }

    Ok(ValidationReport {
        checks,
        tail_residual,
        tail_residual_at,
    })
}
