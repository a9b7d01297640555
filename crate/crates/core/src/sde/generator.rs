//! Quadrature of the generator of the small-jump SDE,
//!
//! ```text
//! L f(x) = ∫_{(-1,1)} (f(x + s h) - f(x) - f'(x) s h) dh / |h|^{1+alpha},  s = sigma_hat(x),
//! ```
//!
//! and of the large-jump remainder that turns `L` into `sigma~ D^alpha`.
//! Written directly in the jump variable `h`, independently of the
//! fractional Laplacian quadrature.

use crate::fractional::{check_alpha, LaplacianValue, QuadratureSpec};
use crate::model::TestFn;
use crate::quad::{geometric_panels, gl8, split_panels};
use crate::{Error, Result};

fn coefficient<S: Fn(f64) -> f64 + ?Sized>(sigma_hat: &S, x: f64) -> Result<f64> {
    let s = sigma_hat(x);
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma_hat({x}) = {s} must be finite and >= 0")));
    }
    Ok(s)
}

/// Panels in `h` over `[a, b]`, no wider than `max_panel / s` and broken
/// where `x ± s h` crosses a kink.
fn jump_panels(a: f64, b: f64, s: f64, x: f64, kinks: &[f64], quad: &QuadratureSpec) -> Vec<(f64, f64)> {
    let panels = geometric_panels(a, b, quad.panels_per_decade(), quad.max_panel / s);
    let breaks: Vec<f64> = kinks.iter().map(|k| (k - x).abs() / s).collect();
    split_panels(&panels, &breaks)
}

/// `L g(x)` for a plain function `g` with known `g''(x)`: a second-order
/// Taylor term on `h < delta` plus Gauss-Legendre panels on `[delta, 1)`.
#[allow(clippy::too_many_arguments)]
fn truncated<G: Fn(f64) -> f64>(
    g: &G,
    g2: f64,
    x: f64,
    s: f64,
    alpha: f64,
    delta: f64,
    kinks: &[f64],
    quad: &QuadratureSpec,
) -> f64 {
    let gx = g(x);
    let inner = s * s * g2 * delta.powf(2.0 - alpha) / (2.0 - alpha);
    let panels = jump_panels(delta, 1.0, s, x, kinks, quad);
    let outer = gl8().integrate_panels(&panels, |h| {
        (g(x + s * h) + g(x - s * h) - 2.0 * gx) * h.powf(-1.0 - alpha)
    });
    inner + outer
}

/// `L f(x)`, the generator with jumps restricted to `(-1, 1)`.
pub fn generator_point<F, S>(f: &F, x: f64, alpha: f64, sigma_hat: &S, quad: &QuadratureSpec) -> Result<f64>
where
    F: TestFn + ?Sized,
    S: Fn(f64) -> f64 + ?Sized,
{
    check_alpha(alpha)?;
    quad.validate()?;
    let s = coefficient(sigma_hat, x)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    let kinks = f.kinks();
    Ok(truncated(
        &|y| f.value(y),
        f.second_deriv(x),
        x,
        s,
        alpha,
        quad.inner_cut,
        &kinks,
        quad,
    ))
}

/// `∫_{|h| >= 1} (f(x + s h) - f(x)) dh / |h|^{1+alpha}`.
///
/// Integrated up to where `f` settles to its far values, the rest in closed
/// form. Without a variation interval the integral stops at `outer_cut`
/// and the bracket bounds the neglected tail.
pub fn large_jump_point<F, S>(
    f: &F,
    x: f64,
    alpha: f64,
    sigma_hat: &S,
    quad: &QuadratureSpec,
) -> Result<LaplacianValue>
where
    F: TestFn + ?Sized,
    S: Fn(f64) -> f64 + ?Sized,
{
    check_alpha(alpha)?;
    quad.validate()?;
    let s = coefficient(sigma_hat, x)?;
    let zero = LaplacianValue {
        value: 0.0,
        tail_bracket: 0.0,
    };
    if s == 0.0 {
        return Ok(zero);
    }
    let fx = f.value(x);
    let (far_l, far_r) = f.far_values();
    let (end, bracket) = match f.variation_interval() {
        Some((lo, hi)) => (((hi - x).max(x - lo) / s).max(1.0), 0.0),
        None => {
            let end = quad.outer_cut;
            (end, 4.0 * f.sup_norm() / (alpha * end.powf(alpha)))
        }
    };
    let tail = (far_l + far_r - 2.0 * fx) * end.powf(-alpha) / alpha;
    if end <= 1.0 {
        return Ok(LaplacianValue {
            value: tail,
            tail_bracket: bracket,
        });
    }
    let panels = jump_panels(1.0, end, s, x, &f.kinks(), quad);
    let near = gl8().integrate_panels(&panels, |h| {
        (f.value(x + s * h) + f.value(x - s * h) - 2.0 * fx) * h.powf(-1.0 - alpha)
    });
    Ok(LaplacianValue {
        value: near + tail,
        tail_bracket: bracket,
    })
}

/// `L(L f)(x)` by nesting the quadrature; sizes the `O(t)` term of
/// `(P_t f - f) / t = L f + t L^2 f / 2 + ...`.
pub fn generator_squared_point<F, S>(
    f: &F,
    x: f64,
    alpha: f64,
    sigma_hat: &S,
    quad: &QuadratureSpec,
) -> Result<f64>
where
    F: TestFn + ?Sized,
    S: Fn(f64) -> f64 + ?Sized,
{
    check_alpha(alpha)?;
    quad.validate()?;
    let s = coefficient(sigma_hat, x)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    // The outer integral tolerates a coarser inner zone; `Lf` is smooth
    // wherever `f` and `sigma_hat` are.
    let delta = 1e-2;
    let lf = |y: f64| generator_point(f, y, alpha, sigma_hat, quad).unwrap_or(f64::NAN);
    let step = 1e-2;
    let lf2 = (lf(x + step) + lf(x - step) - 2.0 * lf(x)) / (step * step);
    let value = truncated(&lf, lf2, x, s, alpha, delta, &f.kinks(), quad);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter(format!("sigma_hat must be finite and >= 0 near {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TestFunction;

    #[test]
    fn cosine_is_an_eigenfunction_for_constant_coefficient() {
        // L cos(k.)(x) = -cos(kx) ∫_{-1}^{1} (1 - cos(k s h)) dh / |h|^{1+alpha}.
        let quad = QuadratureSpec::default();
        let (alpha, s, k) = (1.2, 0.7, 2.0);
        let f = TestFunction::cosine(k);
        let rule = gl8();
        let d: f64 = 1e-3;
        let panels = geometric_panels(d, 1.0, 64, 0.01);
        let near = (k * s).powi(2) / 2.0 * d.powf(2.0 - alpha) / (2.0 - alpha);
        let symbol = 2.0 * (near + rule.integrate_panels(&panels, |h| (1.0 - (k * s * h).cos()) * h.powf(-1.0 - alpha)));
        for x in [0.0, 0.4, 1.3] {
            let lf = generator_point(&f, x, alpha, &|_| s, &quad).unwrap();
            assert!((lf + symbol * (k * x).cos()).abs() < 1e-8, "x={x}: {lf}");
        }
    }
}
