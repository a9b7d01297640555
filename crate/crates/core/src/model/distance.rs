//! Dictionary distance between measures, a proxy for weak convergence.

use super::measure::PointMeasure;
use super::testfn::{TestDictionary, TestFn, TestFunction};

/// Anything that can be integrated against a test function.
pub trait Pairing {
    fn pair(&self, f: &TestFunction) -> f64;

    fn pair_all(&self, dict: &TestDictionary) -> Vec<f64> {
        dict.iter().map(|e| self.pair(&e.function)).collect()
    }
}

impl Pairing for PointMeasure {
    fn pair(&self, f: &TestFunction) -> f64 {
        self.integrate(|x| f.value(x))
    }
}

/// `max_f |<mu, f> - <nu, f>| / max(1, ||f||_inf)`.
pub fn test_distance<A, B>(mu: &A, nu: &B, dict: &TestDictionary) -> f64
where
    A: Pairing + ?Sized,
    B: Pairing + ?Sized,
{
    distance_from_pairings(&mu.pair_all(dict), &nu.pair_all(dict), dict)
}

/// Same distance from precomputed pairings, one per dictionary entry.
pub fn distance_from_pairings(a: &[f64], b: &[f64], dict: &TestDictionary) -> f64 {
    assert_eq!(a.len(), dict.len());
    assert_eq!(b.len(), dict.len());
    dict.iter()
        .zip(a.iter().zip(b))
        .map(|(e, (x, y))| (x - y).abs() / e.function.sup_norm().max(1.0))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_measures_are_at_distance_zero() {
        let dict = TestDictionary::mass_and_bumps(&[-1.0, 0.0, 1.0], 0.5).unwrap();
        let m = PointMeasure::from_traits(10, &[0.1, 0.2, -0.7]);
        assert_eq!(test_distance(&m, &m, &dict), 0.0);
    }

    #[test]
    fn shift_is_bounded_by_lipschitz_times_mass() {
        let width = 0.5;
        let dict = TestDictionary::mass_and_bumps(&[-1.0, 0.0, 1.0], width).unwrap();
        let xs = [0.1, 0.2, -0.7, 1.3];
        let delta = 0.05;
        let mu = PointMeasure::from_traits(10, &xs);
        let shifted: Vec<f64> = xs.iter().map(|x| x + delta).collect();
        let nu = PointMeasure::from_traits(10, &shifted);
        let lip = (-0.5f64).exp() / width;
        let d = test_distance(&mu, &nu, &dict);
        assert!(d > 0.0 && d <= lip * delta * mu.mass() + 1e-15);
    }

    #[test]
    fn separated_masses_are_detected_by_bumps_only() {
        let dict = TestDictionary::mass_and_bumps(&[-5.0, 5.0], 1.0).unwrap();
        let mu = PointMeasure::from_traits(1, &[-5.0]);
        let nu = PointMeasure::from_traits(1, &[5.0]);
        let a = mu.pair_all(&dict);
        let b = nu.pair_all(&dict);
        assert_eq!(a[0], b[0]);
        assert!((test_distance(&mu, &nu, &dict) - 1.0).abs() < 1e-10);
    }
}
