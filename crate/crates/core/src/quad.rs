//! Gauss-Legendre rules and composite panel layouts.

use std::sync::OnceLock;

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            // Tricomi initial guess, refined by Newton on P_n.
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integrates `f` over `[a, b]`.
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Integrates `f` over every panel and sums.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(&self, panels: &[(f64, f64)], mut f: F) -> f64 {
        panels
            .iter()
            .map(|&(a, b)| self.integrate(a, b, &mut f))
            .sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Splits `[a, b]` (with `0 < a < b`) into panels whose endpoints grow
/// geometrically with `per_decade` panels per decade, while no panel is wider
/// than `max_width`.
pub fn geometric_panels(a: f64, b: f64, per_decade: usize, max_width: f64) -> Vec<(f64, f64)> {
    debug_assert!(a > 0.0 && b > a);
    let ratio = 10f64.powf(1.0 / per_decade.max(1) as f64);
    let mut panels = Vec::new();
    let mut left = a;
    while left < b {
        let right = (left * ratio).min(left + max_width).min(b);
        // Snap a vanishing remainder onto the last panel.
        let right = if b - right < 1e-12 * b { b } else { right };
        panels.push((left, right));
        left = right;
    }
    panels
}

/// Splits every panel that strictly contains one of `points`.
pub fn split_panels(panels: &[(f64, f64)], points: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(panels.len() + points.len());
    for &(a, b) in panels {
        let mut inside: Vec<f64> = points.iter().copied().filter(|&p| p > a && p < b).collect();
        inside.sort_by(f64::total_cmp);
        let mut left = a;
        for p in inside {
            if p > left {
                out.push((left, p));
                left = p;
            }
        }
        out.push((left, b));
    }
    out
}

/// Splits `[a, b]` into `n` equal panels.
pub fn uniform_panels(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let n = n.max(1);
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let l = a + h * i as f64;
            let r = if i + 1 == n { b } else { a + h * (i + 1) as f64 };
            (l, r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_inserts_interior_points_only() {
        let p = split_panels(&[(0.0, 1.0), (1.0, 2.0)], &[0.5, 1.0, 1.25, 1.75, 3.0]);
        assert_eq!(p, vec![(0.0, 0.5), (0.5, 1.0), (1.0, 1.25), (1.25, 1.75), (1.75, 2.0)]);
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 8, 16, 33] {
            let r = GaussLegendre::new(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let r = gl8();
        for deg in 0..16 {
            let got = r.integrate(0.0, 1.0, |x| x.powi(deg));
            let want = 1.0 / (deg as f64 + 1.0);
            assert!((got - want).abs() < 1e-14, "deg {deg}: {got} vs {want}");
        }
    }

    #[test]
    fn geometric_panels_cover_interval() {
        let p = geometric_panels(1e-3, 50.0, 8, 0.5);
        assert_eq!(p.first().unwrap().0, 1e-3);
        assert_eq!(p.last().unwrap().1, 50.0);
        for w in p.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        assert!(p.iter().all(|(a, b)| b - a <= 0.5 + 1e-12));
    }
}
