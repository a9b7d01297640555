//! Initial densities `xi_0` and the matched particle initial conditions
//! sampled from them.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::measure::PointMeasure;
use crate::rng::SimRng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDensity {
    Uniform {
        lo: f64,
        hi: f64,
        mass: f64,
    },
    Gaussian {
        center: f64,
        width: f64,
        mass: f64,
    },
    /// `(mass / 2w) (1 + cos(pi (x - c) / w))` on `|x - c| < w`.
    RaisedCosine {
        center: f64,
        half_width: f64,
        mass: f64,
    },
}

impl InitialDensity {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            InitialDensity::Uniform { lo, hi, mass } => lo < hi && mass >= 0.0,
            InitialDensity::Gaussian {
                center,
                width,
                mass,
            } => center.is_finite() && width > 0.0 && mass >= 0.0,
            InitialDensity::RaisedCosine {
                center,
                half_width,
                mass,
            } => center.is_finite() && half_width > 0.0 && mass >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("malformed initial density {self:?}")))
        }
    }

    pub fn mass(&self) -> f64 {
        match *self {
            InitialDensity::Uniform { mass, .. }
            | InitialDensity::Gaussian { mass, .. }
            | InitialDensity::RaisedCosine { mass, .. } => mass,
        }
    }

    /// Density value (integrates to `mass`).
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            InitialDensity::Uniform { lo, hi, mass } => {
                if (lo..=hi).contains(&x) {
                    mass / (hi - lo)
                } else {
                    0.0
                }
            }
            InitialDensity::Gaussian {
                center,
                width,
                mass,
            } => {
                let s = (x - center) / width;
                mass * (-0.5 * s * s).exp() / (width * (2.0 * PI).sqrt())
            }
            InitialDensity::RaisedCosine {
                center,
                half_width,
                mass,
            } => {
                let s = (x - center) / half_width;
                if s.abs() < 1.0 {
                    mass * (1.0 + (PI * s).cos()) / (2.0 * half_width)
                } else {
                    0.0
                }
            }
        }
    }

    /// Closed support, `None` for the Gaussian.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            InitialDensity::Uniform { lo, hi, .. } => Some((lo, hi)),
            InitialDensity::Gaussian { .. } => None,
            InitialDensity::RaisedCosine {
                center, half_width, ..
            } => Some((center - half_width, center + half_width)),
        }
    }

    /// One draw from the normalised density.
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match *self {
            InitialDensity::Uniform { lo, hi, .. } => lo + (hi - lo) * rng.random::<f64>(),
            InitialDensity::Gaussian { center, width, .. } => {
                let z: f64 = StandardNormal.sample(rng);
                center + width * z
            }
            InitialDensity::RaisedCosine {
                center, half_width, ..
            } => loop {
                // Rejection from the uniform envelope; acceptance rate 1/2.
                let s = 2.0 * rng.random::<f64>() - 1.0;
                if rng.random::<f64>() < 0.5 * (1.0 + (PI * s).cos()) {
                    break center + half_width * s;
                }
            },
        }
    }

    /// `floor(K * mass)` i.i.d. draws, each carrying weight `1/K`.
    pub fn sample_measure(&self, k: u64, rng: &mut SimRng) -> PointMeasure {
        let n = (k as f64 * self.mass()).floor() as u64;
        let mut m = PointMeasure::new(k);
        for _ in 0..n {
            m.add(self.sample(rng), 1);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{gl16, uniform_panels};
    use crate::rng::stream;
    use crate::stats::{kolmogorov_critical_999, ks_statistic};

    #[test]
    fn densities_integrate_to_mass() {
        for d in [
            InitialDensity::Uniform {
                lo: -1.0,
                hi: 2.0,
                mass: 0.7,
            },
            InitialDensity::Gaussian {
                center: 0.3,
                width: 0.5,
                mass: 1.2,
            },
            InitialDensity::RaisedCosine {
                center: 0.0,
                half_width: 2.0,
                mass: 1.0,
            },
        ] {
            let total = gl16().integrate_panels(&uniform_panels(-10.0, 10.0, 400), |x| d.pdf(x));
            assert!((total - d.mass()).abs() < 1e-6, "{d:?}: {total}");
        }
    }

    #[test]
    fn raised_cosine_sampler_matches_cdf() {
        let d = InitialDensity::RaisedCosine {
            center: 0.5,
            half_width: 2.0,
            mass: 1.0,
        };
        let mut rng = stream(11, 0);
        let mut xs: Vec<f64> = (0..50_000).map(|_| d.sample(&mut rng)).collect();
        let cdf = |x: f64| {
            let s = ((x - 0.5) / 2.0).clamp(-1.0, 1.0);
            0.5 * (s + 1.0 + (PI * s).sin() / PI)
        };
        let ks = ks_statistic(&mut xs, cdf);
        assert!(ks * (xs.len() as f64).sqrt() < kolmogorov_critical_999());
    }

    #[test]
    fn sampled_measure_has_floor_count() {
        let d = InitialDensity::Uniform {
            lo: 0.0,
            hi: 1.0,
            mass: 0.55,
        };
        let m = d.sample_measure(1000, &mut stream(1, 1));
        assert_eq!(m.count(), 550);
    }
}
