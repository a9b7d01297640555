use serde::{Deserialize, Serialize};

use crate::model::{InitialDensity, Pairing, TestFn, TestFunction};
use crate::{Error, Result};

/// Uniform grid `x_min = x_0 < ... < x_{n-1} = x_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        let g = GridSpec { x_min, x_max, n_points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) || self.n_points < 3 {
            return Err(Error::InvalidParameter(format!(
                "grid [{}, {}] with {} points is degenerate",
                self.x_min, self.x_max, self.n_points
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Trapezoid weights.
    pub fn weights(&self) -> Vec<f64> {
        let dx = self.dx();
        let mut w = vec![dx; self.n_points];
        w[0] = 0.5 * dx;
        w[self.n_points - 1] = 0.5 * dx;
        w
    }
}

/// Density values on a uniform grid; zero outside `[x_min, x_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n_points {
            return Err(Error::InvalidParameter(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.n_points
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter("grid values must be finite and non-negative".into()));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        GridFunction {
            values: vec![0.0; grid.n_points],
            grid,
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: GridSpec, f: F) -> Result<Self> {
        Self::new(grid, grid.points().into_iter().map(f).collect())
    }

    pub fn from_density(grid: GridSpec, density: &InitialDensity) -> Result<Self> {
        Self::from_fn(grid, |x| density.pdf(x))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `∫ g xi dx` by the trapezoid rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        let dx = self.grid.dx();
        let n = self.values.len();
        let mut acc = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let w = if i == 0 || i + 1 == n { 0.5 * dx } else { dx };
            acc += w * v * g(self.grid.x(i));
        }
        acc
    }

    pub fn mass(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

impl Pairing for GridFunction {
    fn pair(&self, f: &TestFunction) -> f64 {
        self.integrate(|x| f.value(x))
    }
}
