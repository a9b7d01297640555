//! Bounded C² test functions and named dictionaries of them.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A bounded C² function with its first two derivatives.
///
/// Quadratures use [`TestFn::variation_interval`] to stop integrating where
/// `f` has become constant.
pub trait TestFn: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn deriv(&self, x: f64) -> f64;
    fn second_deriv(&self, x: f64) -> f64;
    /// `sup |f|`.
    fn sup_norm(&self) -> f64;
    /// `sup |f''|`.
    fn second_deriv_bound(&self) -> f64;
    /// `[lo, hi]` such that `f` is constant on each side of it, or `None` if
    /// `f` never settles (e.g. sinusoids).
    fn variation_interval(&self) -> Option<(f64, f64)>;
    /// Values of `f` left and right of the variation interval.
    fn far_values(&self) -> (f64, f64);

    /// Points where `f''` is not smooth; quadratures split panels there.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    fn is_compactly_supported(&self) -> bool {
        self.variation_interval().is_some() && self.far_values() == (0.0, 0.0)
    }
}

/// The mass-control polynomial `psi(s) = 6 s^5 - 15 s^4 + 10 s^3`.
#[inline]
pub fn psi(s: f64) -> f64 {
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

#[inline]
pub fn psi_d1(s: f64) -> f64 {
    let t = s * (s - 1.0);
    30.0 * t * t
}

#[inline]
pub fn psi_d2(s: f64) -> f64 {
    60.0 * s * (2.0 * s - 1.0) * (s - 1.0)
}

/// `sup_[0,1] |psi''| = 10 / sqrt(3)`, attained at `s = (3 ± sqrt 3)/6`.
pub const PSI_D2_SUP: f64 = 5.773_502_691_896_258;

/// Gaussians are treated as exactly zero beyond this many widths; the
/// neglected value is below `exp(-800)`, i.e. 0 in double precision.
const GAUSS_RADIUS: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    Constant {
        value: f64,
    },
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `amplitude * sin(wavenumber * x + phase)`.
    Sine {
        amplitude: f64,
        wavenumber: f64,
        phase: f64,
    },
    /// Mass-control cutoff `f_n(x) = psi(0 ∨ (|x| - (n-1)) ∧ 1)`.
    Cutoff {
        n: u32,
    },
    /// 1 on `|x - center| <= inner`, 0 beyond `outer`, joined by `1 - psi`.
    SmoothWindow {
        center: f64,
        inner: f64,
        outer: f64,
    },
}

impl TestFunction {
    pub fn gaussian(amplitude: f64, center: f64, width: f64) -> Self {
        TestFunction::Gaussian {
            amplitude,
            center,
            width,
        }
    }

    pub fn sine(wavenumber: f64) -> Self {
        TestFunction::Sine {
            amplitude: 1.0,
            wavenumber,
            phase: 0.0,
        }
    }

    pub fn cosine(wavenumber: f64) -> Self {
        TestFunction::Sine {
            amplitude: 1.0,
            wavenumber,
            phase: std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn cutoff(n: u32) -> Self {
        TestFunction::Cutoff { n }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            TestFunction::Constant { value } => value.is_finite(),
            TestFunction::Gaussian {
                amplitude,
                center,
                width,
            } => amplitude.is_finite() && center.is_finite() && width > 0.0,
            TestFunction::Sine {
                amplitude,
                wavenumber,
                phase,
            } => amplitude.is_finite() && wavenumber.is_finite() && phase.is_finite(),
            TestFunction::Cutoff { n } => n >= 1,
            TestFunction::SmoothWindow {
                center,
                inner,
                outer,
            } => center.is_finite() && inner >= 0.0 && outer > inner,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("malformed test function {self:?}")))
        }
    }
}

impl TestFn for TestFunction {
    fn value(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Constant { value } => value,
            TestFunction::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let s = (x - center) / width;
                amplitude * (-0.5 * s * s).exp()
            }
            TestFunction::Sine {
                amplitude,
                wavenumber,
                phase,
            } => amplitude * (wavenumber * x + phase).sin(),
            TestFunction::Cutoff { n } => psi((x.abs() - (n as f64 - 1.0)).clamp(0.0, 1.0)),
            TestFunction::SmoothWindow {
                center,
                inner,
                outer,
            } => 1.0 - psi(((x - center).abs() - inner).clamp(0.0, outer - inner) / (outer - inner)),
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Constant { .. } => 0.0,
            TestFunction::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let s = (x - center) / width;
                -amplitude * s / width * (-0.5 * s * s).exp()
            }
            TestFunction::Sine {
                amplitude,
                wavenumber,
                phase,
            } => amplitude * wavenumber * (wavenumber * x + phase).cos(),
            TestFunction::Cutoff { n } => {
                let s = (x.abs() - (n as f64 - 1.0)).clamp(0.0, 1.0);
                x.signum() * psi_d1(s)
            }
            TestFunction::SmoothWindow {
                center,
                inner,
                outer,
            } => {
                let w = outer - inner;
                let s = (((x - center).abs() - inner) / w).clamp(0.0, 1.0);
                -(x - center).signum() * psi_d1(s) / w
            }
        }
    }

    fn second_deriv(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Constant { .. } => 0.0,
            TestFunction::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let s = (x - center) / width;
                amplitude * (s * s - 1.0) / (width * width) * (-0.5 * s * s).exp()
            }
            TestFunction::Sine {
                amplitude,
                wavenumber,
                phase,
            } => -amplitude * wavenumber * wavenumber * (wavenumber * x + phase).sin(),
            TestFunction::Cutoff { n } => {
                let s = (x.abs() - (n as f64 - 1.0)).clamp(0.0, 1.0);
                psi_d2(s)
            }
            TestFunction::SmoothWindow {
                center,
                inner,
                outer,
            } => {
                let w = outer - inner;
                let s = (((x - center).abs() - inner) / w).clamp(0.0, 1.0);
                -psi_d2(s) / (w * w)
            }
        }
    }

    fn sup_norm(&self) -> f64 {
        match *self {
            TestFunction::Constant { value } => value.abs(),
            TestFunction::Gaussian { amplitude, .. } => amplitude.abs(),
            TestFunction::Sine { amplitude, .. } => amplitude.abs(),
            TestFunction::Cutoff { .. } | TestFunction::SmoothWindow { .. } => 1.0,
        }
    }

    fn second_deriv_bound(&self) -> f64 {
        match *self {
            TestFunction::Constant { .. } => 0.0,
            TestFunction::Gaussian {
                amplitude, width, ..
            } => amplitude.abs() / (width * width),
            TestFunction::Sine {
                amplitude,
                wavenumber,
                ..
            } => amplitude.abs() * wavenumber * wavenumber,
            TestFunction::Cutoff { .. } => PSI_D2_SUP,
            TestFunction::SmoothWindow { inner, outer, .. } => {
                PSI_D2_SUP / ((outer - inner) * (outer - inner))
            }
        }
    }

    fn variation_interval(&self) -> Option<(f64, f64)> {
        match *self {
            TestFunction::Constant { .. } => Some((0.0, 0.0)),
            TestFunction::Gaussian { center, width, .. } => {
                Some((center - GAUSS_RADIUS * width, center + GAUSS_RADIUS * width))
            }
            TestFunction::Sine {
                amplitude,
                wavenumber,
                ..
            } => {
                if amplitude == 0.0 || wavenumber == 0.0 {
                    Some((0.0, 0.0))
                } else {
                    None
                }
            }
            TestFunction::Cutoff { n } => Some((-(n as f64), n as f64)),
            TestFunction::SmoothWindow { center, outer, .. } => Some((center - outer, center + outer)),
        }
    }

    fn far_values(&self) -> (f64, f64) {
        match *self {
            TestFunction::Constant { value } => (value, value),
            TestFunction::Sine {
                amplitude, phase, ..
            } => {
                let v = amplitude * phase.sin();
                (v, v)
            }
            TestFunction::Cutoff { .. } => (1.0, 1.0),
            TestFunction::Gaussian { .. } | TestFunction::SmoothWindow { .. } => (0.0, 0.0),
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match *self {
            TestFunction::Cutoff { n } => {
                let n = n as f64;
                vec![-n, 1.0 - n, n - 1.0, n]
            }
            TestFunction::SmoothWindow {
                center,
                inner,
                outer,
            } => vec![center - outer, center - inner, center + inner, center + outer],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedTestFn {
    pub name: String,
    pub function: TestFunction,
}

/// Ordered, named list of test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TestDictionary {
    pub entries: Vec<NamedTestFn>,
}

impl TestDictionary {
    pub fn new(entries: Vec<(String, TestFunction)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("test dictionary is empty".into()));
        }
        for (_, f) in &entries {
            f.validate()?;
        }
        Ok(TestDictionary {
            entries: entries
                .into_iter()
                .map(|(name, function)| NamedTestFn { name, function })
                .collect(),
        })
    }

    /// `f ≡ 1` followed by Gaussian bumps of the given width centred on
    /// `centers`.
    pub fn mass_and_bumps(centers: &[f64], width: f64) -> Result<Self> {
        let mut entries = vec![("one".to_string(), TestFunction::Constant { value: 1.0 })];
        for &c in centers {
            entries.push((format!("bump({c})"), TestFunction::gaussian(1.0, c, width)));
        }
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &NamedTestFn> {
        self.entries.iter()
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }
}
