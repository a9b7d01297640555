//! Right-hand side `(b(x, V*xi) - d(x, U*xi)) xi + D^alpha(sigma~ xi)` on a
//! grid, with `xi` extended by zero outside it.

use rayon::prelude::*;

use super::grid::{GridFunction, GridSpec};
use crate::fractional::c_alpha;
use crate::model::{ModelParams, RateFn, TraitFn};
use crate::quad::gl16;
use crate::Result;

/// Dimensionless weights of the discrete fractional Laplacian.
///
/// With `g` piecewise linear between nodes beyond the first cell and locally
/// quadratic inside it,
///
/// ```text
/// (L g)_i = dx^{-alpha} [ c (g_{i+1} + g_{i-1} - 2 g_i)
///                         + sum_{m >= 1} w_m (g_{i+m} + g_{i-m}) - 2 g_i / alpha ]
/// ```
///
/// where `w_m` is the integral of the hat function at `m` against
/// `s^{-1-alpha}` over `s >= 1`. The `w_m` sum to `1/alpha`, so linear `g`
/// is annihilated. Linear interpolation overestimates a convex `g` by
/// `g'' dx^2 (s - m)(m + 1 - s) / 2` on cell `[m, m+1]`; subtracting that
/// bias from the inner coefficient `1/(2 - alpha)` makes the stencil exact
/// on quadratics.
#[derive(Debug, Clone)]
pub struct FracLaplacianStencil {
    alpha: f64,
    dx: f64,
    inner: f64,
    weights: Vec<f64>,
}

/// Cells integrated numerically for the interpolation bias before the
/// asymptotic tail `M^{-alpha} / (6 alpha)`.
const BIAS_CELLS: usize = 4096;

impl FracLaplacianStencil {
    pub fn new(alpha: f64, dx: f64, n: usize) -> Self {
        let rule = gl16();
        let k = |s: f64| s.powf(-1.0 - alpha);
        let mut weights = vec![0.0; n];
        for (m, w) in weights.iter_mut().enumerate().skip(1) {
            let mf = m as f64;
            let right = rule.integrate(mf, mf + 1.0, |s| (mf + 1.0 - s) * k(s));
            let left = if m >= 2 {
                rule.integrate(mf - 1.0, mf, |s| (s - mf + 1.0) * k(s))
            } else {
                0.0
            };
            *w = left + right;
        }
        let mut bias = 0.0;
        for m in (1..BIAS_CELLS).rev() {
            let mf = m as f64;
            bias += rule.integrate(mf, mf + 1.0, |s| (s - mf) * (mf + 1.0 - s) * k(s));
        }
        bias += (BIAS_CELLS as f64).powf(-alpha) / (6.0 * alpha);
        FracLaplacianStencil {
            alpha,
            dx,
            inner: 1.0 / (2.0 - alpha) - bias,
            weights,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `(L g)_i` with `g = 0` outside the grid.
    #[inline]
    pub fn apply_at(&self, g: &[f64], i: usize) -> f64 {
        let n = g.len();
        let at = |j: isize| if j >= 0 && (j as usize) < n { g[j as usize] } else { 0.0 };
        let ii = i as isize;
        let mut acc = self.inner * (at(ii + 1) + at(ii - 1) - 2.0 * g[i]) - 2.0 * g[i] / self.alpha;
        let up = n - 1 - i;
        for m in 1..=up.max(i) {
            let mut s = 0.0;
            if m <= up {
                s += g[i + m];
            }
            if m <= i {
                s += g[i - m];
            }
            acc += self.weights[m] * s;
        }
        acc * self.dx.powf(-self.alpha)
    }

    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        (0..g.len()).into_par_iter().map(|i| self.apply_at(g, i)).collect()
    }
}

/// How `W * xi` enters a rate.
#[derive(Debug, Clone)]
enum Convolution {
    Unused,
    Constant(f64),
    /// `W(m dx)` for `m = -(n-1) .. n-1`, offset by `n - 1`.
    Toeplitz(Vec<f64>),
}

impl Convolution {
    fn new(w: &TraitFn, rate: &RateFn, grid: &GridSpec) -> Self {
        if !rate.depends_on_z() {
            return Convolution::Unused;
        }
        if let Some(c) = w.as_constant() {
            return Convolution::Constant(c);
        }
        let n = grid.n_points as isize;
        let dx = grid.dx();
        Convolution::Toeplitz((-(n - 1)..n).map(|m| w.eval(m as f64 * dx)).collect())
    }

    fn evaluate(&self, xi: &[f64], weights: &[f64]) -> Vec<f64> {
        let n = xi.len();
        match self {
            Convolution::Unused => vec![0.0; n],
            Convolution::Constant(c) => {
                let mass: f64 = xi.iter().zip(weights).map(|(v, w)| v * w).sum();
                vec![c * mass; n]
            }
            Convolution::Toeplitz(k) => {
                let wx: Vec<f64> = xi.iter().zip(weights).map(|(v, w)| v * w).collect();
                (0..n)
                    .into_par_iter()
                    .map(|i| wx.iter().enumerate().map(|(j, v)| k[i + n - 1 - j] * v).sum())
                    .collect()
            }
        }
    }
}

/// Precomputed pieces of the right-hand side for one grid.
#[derive(Debug, Clone)]
pub struct PdeOperator {
    params: ModelParams,
    grid: GridSpec,
    points: Vec<f64>,
    weights: Vec<f64>,
    sigma_tilde: Vec<f64>,
    stencil: Option<FracLaplacianStencil>,
    conv_u: Convolution,
    conv_v: Convolution,
}

/// One evaluation of the right-hand side, split by term.
#[derive(Debug, Clone)]
pub struct RhsParts {
    pub reaction: Vec<f64>,
    pub nonlocal: Vec<f64>,
}

impl RhsParts {
    pub fn total(&self) -> Vec<f64> {
        self.reaction.iter().zip(&self.nonlocal).map(|(a, b)| a + b).collect()
    }
}

impl PdeOperator {
    pub fn new(params: &ModelParams, grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        let points = grid.points();
        let sigma_tilde: Vec<f64> = points.iter().map(|&x| params.sigma_tilde(x)).collect();
        let stencil = sigma_tilde
            .iter()
            .any(|&s| s != 0.0)
            .then(|| FracLaplacianStencil::new(params.alpha(), grid.dx(), grid.n_points));
        Ok(PdeOperator {
            params: params.clone(),
            grid,
            weights: grid.weights(),
            conv_u: Convolution::new(&params.u, &params.d, &grid),
            conv_v: Convolution::new(&params.v, &params.b, &grid),
            points,
            sigma_tilde,
            stencil,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn sigma_tilde(&self) -> &[f64] {
        &self.sigma_tilde
    }

    /// Net per-capita growth `b(x_i, (V*xi)_i) - d(x_i, (U*xi)_i)`.
    pub fn growth(&self, xi: &[f64]) -> Vec<f64> {
        let zv = self.conv_v.evaluate(xi, &self.weights);
        let zu = self.conv_u.evaluate(xi, &self.weights);
        self.points
            .iter()
            .enumerate()
            .map(|(i, &x)| self.params.b.eval(x, zv[i]) - self.params.d.eval(x, zu[i]))
            .collect()
    }

    pub fn parts(&self, xi: &[f64]) -> RhsParts {
        let growth = self.growth(xi);
        let reaction = growth.iter().zip(xi).map(|(g, v)| g * v).collect();
        let nonlocal = match &self.stencil {
            Some(s) => {
                let g: Vec<f64> = self.sigma_tilde.iter().zip(xi).map(|(s, v)| s * v).collect();
                s.apply(&g)
            }
            None => vec![0.0; xi.len()],
        };
        RhsParts { reaction, nonlocal }
    }

    pub fn rhs(&self, xi: &[f64]) -> Vec<f64> {
        self.parts(xi).total()
    }

    /// Trapezoid integral of grid values.
    pub fn integral(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// Largest stable step for the nonlocal part, `0.5 dx^alpha / (max sigma~
    /// C_alpha pi^alpha)`: the continuous symbol at the grid's Nyquist
    /// frequency. Infinite without diffusion.
    pub fn nonlocal_dt_limit(&self) -> f64 {
        let smax = self.sigma_tilde.iter().copied().fold(0.0, f64::max);
        if self.stencil.is_none() || smax == 0.0 {
            return f64::INFINITY;
        }
        let alpha = self.params.alpha();
        let scale = c_alpha(alpha) * std::f64::consts::PI.powf(alpha);
        0.5 * self.grid.dx().powf(alpha) / (smax * scale)
    }

    /// `0.1 / L` with `L` a Lipschitz bound of the reaction term on
    /// densities of mass at most `mass_scale`.
    pub fn reaction_dt_limit(&self, mass_scale: f64) -> f64 {
        let p = &self.params;
        let m = mass_scale.max(1.0);
        let (zv, zu) = (p.bounds.v * m, p.bounds.u * m);
        let l = p.b.linear_growth_bound() * (1.0 + zv)
            + p.d.linear_growth_bound() * (1.0 + zu)
            + p.b.z_lipschitz() * zv
            + p.d.z_lipschitz() * zu;
        if l > 0.0 {
            0.1 / l
        } else {
            f64::INFINITY
        }
    }
}

/// `rhs` as a free function, for one-off evaluations. The returned values
/// are a time derivative and may be negative.
pub fn rhs(xi: &GridFunction, params: &ModelParams) -> Result<GridFunction> {
    let op = PdeOperator::new(params, xi.grid)?;
    Ok(GridFunction {
        grid: xi.grid,
        values: op.rhs(&xi.values),
    })
}
