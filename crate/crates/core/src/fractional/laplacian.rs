//! Pointwise quadrature of
//! `D^alpha f(x) = ∫ (f(x+h) - f(x) - f'(x) h 1_{|h|<=1}) dh / |h|^{1+alpha}`.
//!
//! The integral is folded onto `h > 0` and split in three zones:
//!
//! - `(0, inner_cut)`: integrated by parts once, so only the bounded
//!   quotient `(f'(x+h) - f'(x-h)) / h` is sampled.
//! - `[inner_cut, 1]`: the second difference `f(x+h) + f(x-h) - 2f(x)`
//!   against `h^{-1-alpha}` on log-spaced Gauss-Legendre panels.
//! - `(1, inf)`: uncompensated, up to the point where `f` becomes constant
//!   (exact far field) or up to `outer_cut` (bracketed truncation).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::TestFn;
use crate::quad::{geometric_panels, gl8, split_panels};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub inner_cut: f64,
    pub outer_cut: f64,
    pub nodes_per_decade: usize,
    /// Upper bound on a panel width, keeps oscillatory integrands resolved.
    pub max_panel: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            inner_cut: 1e-4,
            outer_cut: 1e4,
            nodes_per_decade: 64,
            max_panel: 0.25,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_cut > 0.0 && self.inner_cut < 1.0 && self.outer_cut > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quadrature cuts must satisfy 0 < inner_cut < 1 < outer_cut, got {} and {}",
                self.inner_cut, self.outer_cut
            )));
        }
        if self.nodes_per_decade < 8 || !(self.max_panel > 0.0) {
            return Err(Error::InvalidParameter(
                "nodes_per_decade must be at least 8 and max_panel positive".into(),
            ));
        }
        Ok(())
    }

    /// Gauss-Legendre panels per decade (each panel carries 8 nodes).
    pub(crate) fn panels_per_decade(&self) -> usize {
        (self.nodes_per_decade / 8).max(1)
    }
}

/// A quadrature value with a bound on the truncated far tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplacianValue {
    pub value: f64,
    /// `|exact - value|` is bounded by this plus the quadrature error. Zero
    /// when the far field was integrated exactly.
    pub tail_bracket: f64,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 2)")))
    }
}

/// Distances from `x` to the kinks of `f`.
fn kink_offsets<F: TestFn + ?Sized>(f: &F, x: f64) -> Vec<f64> {
    f.kinks().into_iter().map(|k| (k - x).abs()).collect()
}

/// `∫_0^{delta} g(h) h^{-1-alpha} dh` with `g(h) = f(x+h) + f(x-h) - 2f(x)`.
///
/// One integration by parts leaves `∫_0^delta phi(h) h^{1-alpha} dh` with the
/// even, smooth quotient `phi(h) = (f'(x+h) - f'(x-h)) / h`. `phi` is
/// interpolated by a quadratic in `h^2` through `h = delta/3, 2delta/3, delta`
/// and integrated exactly against the weight; sampling `phi` at tiny `h`
/// would lose every digit to cancellation.
pub(crate) fn inner_zone<F: TestFn + ?Sized>(f: &F, x: f64, alpha: f64, delta: f64) -> f64 {
    let fx = f.value(x);
    let g = f.value(x + delta) + f.value(x - delta) - 2.0 * fx;
    let t: [f64; 3] = [1.0 / 9.0, 4.0 / 9.0, 1.0];
    let mut phi = [0.0; 3];
    for (p, &tj) in phi.iter_mut().zip(&t) {
        let h = delta * tj.sqrt();
        let (xp, xm) = (x + h, x - h);
        *p = 2.0 * (f.deriv(xp) - f.deriv(xm)) / (xp - xm);
    }
    // Moments of the weight in the scaled variable tau = (h/delta)^2:
    // ∫_0^delta (h/delta)^{2m} h^{1-alpha} dh = delta^{2-alpha} / (2m + 2 - alpha).
    let mom = [0.0, 1.0, 2.0].map(|m: f64| 1.0 / (2.0 * m + 2.0 - alpha));
    let mut integral = 0.0;
    for j in 0..3 {
        // Lagrange basis L_j(tau) = (tau - a)(tau - b) / ((t_j - a)(t_j - b)).
        let (a, b) = (t[(j + 1) % 3], t[(j + 2) % 3]);
        let w = (mom[2] - (a + b) * mom[1] + a * b * mom[0]) / ((t[j] - a) * (t[j] - b));
        integral += w * phi[j];
    }
    -g * delta.powf(-alpha) / alpha + delta.powf(2.0 - alpha) / alpha * integral
}

/// `∫_{delta}^1 g(h) h^{-1-alpha} dh`.
pub(crate) fn middle_zone<F: TestFn + ?Sized>(
    f: &F,
    x: f64,
    alpha: f64,
    quad: &QuadratureSpec,
) -> f64 {
    let fx = f.value(x);
    let panels = geometric_panels(quad.inner_cut, 1.0, quad.panels_per_decade(), quad.max_panel);
    let panels = split_panels(&panels, &kink_offsets(f, x));
    gl8().integrate_panels(&panels, |h| {
        (f.value(x + h) + f.value(x - h) - 2.0 * fx) * h.powf(-1.0 - alpha)
    })
}

/// `∫_1^inf (f(x+h) + f(x-h)) h^{-1-alpha} dh`, plus the tail bracket.
pub(crate) fn outer_zone<F: TestFn + ?Sized>(
    f: &F,
    x: f64,
    alpha: f64,
    quad: &QuadratureSpec,
) -> (f64, f64) {
    let r = quad.outer_cut;
    let truncation = 4.0 * f.sup_norm() / (alpha * r.powf(alpha));
    let (end, far, bracket) = match f.variation_interval() {
        Some((lo, hi)) => {
            let settled = (hi - x).max(x - lo).max(1.0);
            let (far_l, far_r) = f.far_values();
            if settled <= r {
                (settled, (far_l + far_r) / (alpha * settled.powf(alpha)), 0.0)
            } else {
                (r, (far_l + far_r) / (alpha * r.powf(alpha)), truncation)
            }
        }
        None => (r, 0.0, truncation),
    };
    if end <= 1.0 {
        return (far, bracket);
    }
    let panels = geometric_panels(1.0, end, quad.panels_per_decade(), quad.max_panel);
    let panels = split_panels(&panels, &kink_offsets(f, x));
    let near = gl8().integrate_panels(&panels, |h| (f.value(x + h) + f.value(x - h)) * h.powf(-1.0 - alpha));
    (near + far, bracket)
}

/// Fractional Laplacian of `f` at `x`.
pub fn frac_laplacian_point<F: TestFn + ?Sized>(
    f: &F,
    x: f64,
    alpha: f64,
    quad: &QuadratureSpec,
) -> Result<LaplacianValue> {
    check_alpha(alpha)?;
    quad.validate()?;
    Ok(laplacian_unchecked(f, x, alpha, quad))
}

pub(crate) fn laplacian_unchecked<F: TestFn + ?Sized>(
    f: &F,
    x: f64,
    alpha: f64,
    quad: &QuadratureSpec,
) -> LaplacianValue {
    let inner = inner_zone(f, x, alpha, quad.inner_cut);
    let middle = middle_zone(f, x, alpha, quad);
    let (outer, tail_bracket) = outer_zone(f, x, alpha, quad);
    LaplacianValue {
        value: inner + middle + outer - 2.0 * f.value(x) / alpha,
        tail_bracket,
    }
}

/// [`frac_laplacian_point`] at every point of `xs`.
pub fn frac_laplacian_grid<F: TestFn + ?Sized>(
    f: &F,
    xs: &[f64],
    alpha: f64,
    quad: &QuadratureSpec,
) -> Result<Vec<LaplacianValue>> {
    check_alpha(alpha)?;
    quad.validate()?;
    Ok(xs.par_iter().map(|&x| laplacian_unchecked(f, x, alpha, quad)).collect())
}

/// `z -> f(x + s z)`, the integrand of the change of variables `h = s z`.
pub(crate) struct Dilated<'a, F: ?Sized> {
    pub f: &'a F,
    pub x: f64,
    pub s: f64,
}

impl<F: TestFn + ?Sized> TestFn for Dilated<'_, F> {
    fn value(&self, z: f64) -> f64 {
        self.f.value(self.x + self.s * z)
    }
    fn deriv(&self, z: f64) -> f64 {
        self.s * self.f.deriv(self.x + self.s * z)
    }
    fn second_deriv(&self, z: f64) -> f64 {
        self.s * self.s * self.f.second_deriv(self.x + self.s * z)
    }
    fn sup_norm(&self) -> f64 {
        self.f.sup_norm()
    }
    fn second_deriv_bound(&self) -> f64 {
        self.s * self.s * self.f.second_deriv_bound()
    }
    fn variation_interval(&self) -> Option<(f64, f64)> {
        self.f
            .variation_interval()
            .map(|(lo, hi)| ((lo - self.x) / self.s, (hi - self.x) / self.s))
    }
    fn far_values(&self) -> (f64, f64) {
        self.f.far_values()
    }
    fn kinks(&self) -> Vec<f64> {
        self.f.kinks().into_iter().map(|k| (k - self.x) / self.s).collect()
    }
}

/// `∫ (f(x + s z) - f(x) - f'(x) s z 1_{|z|<=1}) dz / |z|^{1+alpha}` with
/// `s = sigma_hat(x)`, i.e. `sigma~(x) D^alpha f(x)` evaluated through the
/// change of variables.
pub fn scaled_generator_point<F, S>(
    f: &F,
    x: f64,
    alpha: f64,
    sigma_hat: S,
    quad: &QuadratureSpec,
) -> Result<LaplacianValue>
where
    F: TestFn + ?Sized,
    S: Fn(f64) -> f64,
{
    check_alpha(alpha)?;
    quad.validate()?;
    let s = sigma_hat(x);
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!("sigma_hat({x}) = {s} is negative")));
    }
    if s == 0.0 {
        return Ok(LaplacianValue {
            value: 0.0,
            tail_bracket: 0.0,
        });
    }
    let g = Dilated { f, x, s };
    Ok(laplacian_unchecked(&g, 0.0, alpha, quad))
}
