//! Comparison of the rescaled mutation operator
//! `K^eta ∫ (f(x+h) - f(x)) M_K(x, dh)` with its limit `sigma(x) D^alpha f(x)`.

use serde::Serialize;

use super::laplacian::{check_alpha, laplacian_unchecked, QuadratureSpec};
use crate::model::{step_scale, MutationKernel, TestFn};
use crate::quad::{geometric_panels, gl16, gl8, split_panels, uniform_panels};
use crate::{Error, Result};

/// `∫ (f(x+h) - f(x)) M_K(x, dh)` where `h = X(x) K^{-eta/alpha}`.
///
/// Uses the symmetric representation
/// `∫_0^inf (f'(x+z) - f'(x-z))/2 · P(|X(x)| >= K^{eta/alpha} z) dz`,
/// which only needs the tail of the kernel.
pub fn kernel_increment<F: TestFn + ?Sized>(
    kernel: &MutationKernel,
    f: &F,
    x: f64,
    k: u64,
    eta: f64,
    quad: &QuadratureSpec,
) -> f64 {
    let s = step_scale(k, eta, kernel.alpha());
    let end = match f.variation_interval() {
        Some((lo, hi)) => (hi - x).max(x - lo),
        None => quad.outer_cut,
    };
    if end <= 0.0 {
        return 0.0;
    }
    let integrand = |z: f64| 0.5 * (f.deriv(x + z) - f.deriv(x - z)) * kernel.tail(x, z / s);
    let breaks: Vec<f64> = kernel.tail_breakpoints().iter().map(|u| u * s).collect();
    let first = breaks.first().copied().unwrap_or(s).min(end);
    let mut splits = breaks;
    splits.extend(f.kinks().into_iter().map(|k| (k - x).abs()));

    let head = split_panels(&uniform_panels(0.0, first, 4), &splits);
    let mut total = gl16().integrate_panels(&head, integrand);
    if end > first {
        let panels = geometric_panels(first, end, quad.panels_per_decade(), quad.max_panel);
        total += gl8().integrate_panels(&split_panels(&panels, &splits), integrand);
    }
    total
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelLimitPoint {
    pub x: f64,
    /// `K^eta ∫ (f(x+h) - f(x)) M_K(x, dh)`.
    pub rescaled: f64,
    /// `sigma(x) D^alpha f(x)`.
    pub limit: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelLimitReport {
    pub k: u64,
    pub eta: f64,
    pub sup_error: f64,
    /// `max |sigma D^alpha f|` over the grid.
    pub max_limit: f64,
    pub points: Vec<KernelLimitPoint>,
}

/// Sup over `x_grid` of the gap between the rescaled kernel operator and
/// `sigma D^alpha f`.
pub fn kernel_limit_error<F: TestFn + ?Sized>(
    kernel: &MutationKernel,
    f: &F,
    x_grid: &[f64],
    k: u64,
    eta: f64,
    quad: &QuadratureSpec,
) -> Result<KernelLimitReport> {
    let alpha = kernel.alpha();
    check_alpha(alpha)?;
    quad.validate()?;
    if alpha <= 1.0 && !f.is_compactly_supported() {
        return Err(Error::NotCompactlySupported(format!(
            "kernel limit with alpha = {alpha}"
        )));
    }
    let k_eta = (k as f64).powf(eta);
    let points: Vec<KernelLimitPoint> = x_grid
        .iter()
        .map(|&x| {
            let rescaled = k_eta * kernel_increment(kernel, f, x, k, eta, quad);
            let limit = kernel.sigma(x) * laplacian_unchecked(f, x, alpha, quad).value;
            KernelLimitPoint {
                x,
                rescaled,
                limit,
                error: (rescaled - limit).abs(),
            }
        })
        .collect();
    let sup_error = points.iter().map(|p| p.error).fold(0.0, f64::max);
    let max_limit = points.iter().map(|p| p.limit.abs()).fold(0.0, f64::max);
    Ok(KernelLimitReport {
        k,
        eta,
        sup_error,
        max_limit,
        points,
    })
}

/// For kernels whose tail is an exact power beyond `u0`, the kernel and
/// limit integrands agree for `z >= z0 = u0 K^{-eta/alpha}`, so
/// `|error| <= ||f''|| ∫_0^{z0} z |K^eta tail(K^{eta/alpha} z) - (2 sigma/alpha) z^{-alpha}| dz`.
/// Returns that bound, or `None` if the kernel has no exact power tail.
pub fn exact_regime_bound<F: TestFn + ?Sized>(
    kernel: &MutationKernel,
    f: &F,
    k: u64,
    eta: f64,
) -> Option<f64> {
    let u0 = kernel.exact_power_tail_from()?;
    let alpha = kernel.alpha();
    let s = step_scale(k, eta, alpha);
    let k_eta = (k as f64).powf(eta);
    let c = 2.0 * kernel.sigma(0.0) / alpha;
    let z0 = u0 * s;
    let eps = z0 * 1e-12;
    let mut panels = geometric_panels(eps, z0, 8, f64::INFINITY);
    panels = split_panels(&panels, &kernel.tail_breakpoints().iter().map(|u| u * s).collect::<Vec<_>>());
    let body = gl16().integrate_panels(&panels, |z| {
        z * (k_eta * kernel.tail(0.0, z / s) - c * z.powf(-alpha)).abs()
    });
    // On (0, eps) the power term dominates.
    let head = c * eps.powf(2.0 - alpha) / (2.0 - alpha) + k_eta * eps * eps / 2.0;
    Some(f.second_deriv_bound() * (body + head))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TestFunction;

    #[test]
    fn constant_function_has_no_error() {
        let kernel = MutationKernel::pareto(1.5).unwrap();
        let f = TestFunction::Constant { value: 2.0 };
        let rep = kernel_limit_error(&kernel, &f, &[-1.0, 0.0, 2.0], 100, 0.5, &QuadratureSpec::default())
            .unwrap();
        assert!(rep.sup_error < 1e-8);
    }

    #[test]
    fn increment_matches_direct_expectation() {
        // Direct integration of (f(x+h) - f(x)) against the Pareto density of h.
        let alpha = 1.2;
        let kernel = MutationKernel::pareto(alpha).unwrap();
        let f = TestFunction::gaussian(1.0, 0.3, 0.6);
        let (k, eta) = (50, 0.8);
        let s = step_scale(k, eta, alpha);
        let x = 0.1;
        let fx = f.value(x);
        let density = |u: f64| 0.5 * alpha * u.powf(-1.0 - alpha);
        let panels = geometric_panels(1.0, 1e6, 64, 0.05 / s);
        let direct = gl16().integrate_panels(&panels, |u| {
            (f.value(x + s * u) + f.value(x - s * u) - 2.0 * fx) * density(u)
        });
        let quad = kernel_increment(&kernel, &f, x, k, eta, &QuadratureSpec::default());
        // Beyond u = 1e6 only -2 f(x) P(|X| > 1e6) remains.
        let far = -fx * 1e6f64.powf(-alpha);
        assert!((quad - (direct + far)).abs() < 1e-9, "{quad} vs {}", direct + far);
    }

    #[test]
    fn non_compact_rejected_for_small_alpha() {
        let kernel = MutationKernel::pareto(0.8).unwrap();
        let f = TestFunction::sine(1.0);
        let err = kernel_limit_error(&kernel, &f, &[0.0], 100, 0.5, &QuadratureSpec::default());
        assert!(matches!(err, Err(Error::NotCompactlySupported(_))));
    }

    #[test]
    fn error_decreases_and_respects_exact_regime_bound() {
        let kernel = MutationKernel::pareto(1.5).unwrap();
        let f = TestFunction::gaussian(1.0, 0.0, 1.0);
        let xs: Vec<f64> = (0..=20).map(|i| -3.0 + 0.3 * i as f64).collect();
        let q = QuadratureSpec::default();
        let mut last = f64::INFINITY;
        for k in [100, 10_000, 1_000_000] {
            let rep = kernel_limit_error(&kernel, &f, &xs, k, 0.5, &q).unwrap();
            let bound = exact_regime_bound(&kernel, &f, k, 0.5).unwrap();
            assert!(rep.sup_error < last);
            assert!(rep.sup_error <= bound * (1.0 + 1e-6), "K={k}: {} > {bound}", rep.sup_error);
            last = rep.sup_error;
        }
    }
}
