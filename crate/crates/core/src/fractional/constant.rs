//! The eigenvalue constant `C_alpha = 2 ∫_0^inf (1 - cos u) u^{-1-alpha} du`,
//! so that `D^alpha e^{ikx} = -C_alpha |k|^alpha e^{ikx}`.

use std::f64::consts::PI;

use crate::quad::{gl16, uniform_panels};

/// Periods of `cos` integrated numerically before the asymptotic tail.
const PERIODS: usize = 400;

/// `C_alpha` for `alpha` in `(0, 2)`, computed by quadrature.
pub fn c_alpha(alpha: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 2.0, "alpha = {alpha} must lie in (0, 2)");
    // [0, 1]: termwise integration of the cosine series.
    let mut head = 0.0;
    let mut fact = 1.0;
    for k in 1..=12 {
        let two_k = 2.0 * k as f64;
        fact *= (two_k - 1.0) * two_k;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        head += sign / (fact * (two_k - alpha));
    }
    // [1, L] with L a multiple of 2 pi, then two asymptotic terms of
    // ∫_L^inf cos u u^{-beta} du = beta L^{-beta-1} - beta(beta+1)(beta+2) L^{-beta-3} + ...
    let l = 2.0 * PI * PERIODS as f64;
    let beta = 1.0 + alpha;
    let panels = uniform_panels(1.0, l, 8 * PERIODS);
    let body = gl16().integrate_panels(&panels, |u| u.cos() * u.powf(-beta));
    let tail = beta * l.powf(-beta - 1.0) - beta * (beta + 1.0) * (beta + 2.0) * l.powf(-beta - 3.0);
    2.0 * (head + 1.0 / alpha - body - tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    #[test]
    fn alpha_one_is_pi() {
        assert!((c_alpha(1.0) - PI).abs() < 1e-10);
    }

    #[test]
    fn matches_gamma_closed_form() {
        for alpha in [0.25, 0.5, 0.8, 1.2, 1.5, 1.9] {
            let closed = -2.0 * gamma(-alpha) * (PI * alpha / 2.0).cos();
            assert!((c_alpha(alpha) - closed).abs() < 1e-9 * closed, "alpha={alpha}");
        }
    }
}
