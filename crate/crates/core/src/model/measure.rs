//! The population state `nu^K = (1/K) sum_i delta_{x_i}`, stored as atoms
//! `(trait, count)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::rates::TraitFn;
use super::testfn::TestFn;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(rename = "trait")]
    pub trait_value: f64,
    pub count: u64,
}

/// Outcome of removing one individual from an atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Removal {
    /// The atom still holds individuals.
    Decremented,
    /// The atom emptied and was removed by swap-remove; `moved_from` is the
    /// old index of the atom that now occupies the vacated slot.
    Emptied { moved_from: Option<usize> },
}

#[inline]
fn key(x: f64) -> u64 {
    // -0.0 and 0.0 are the same trait.
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Repr {
    #[serde(rename = "K")]
    k: u64,
    atoms: Vec<Atom>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Repr", into = "Repr")]
pub struct PointMeasure {
    k: u64,
    atoms: Vec<Atom>,
    index: HashMap<u64, usize>,
    total: u64,
}

impl PartialEq for PointMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.atoms == other.atoms
    }
}

impl TryFrom<Repr> for PointMeasure {
    type Error = String;

    fn try_from(r: Repr) -> Result<Self, String> {
        if r.k == 0 {
            return Err("K must be at least 1".into());
        }
        let mut m = PointMeasure::new(r.k);
        for a in r.atoms {
            if !a.trait_value.is_finite() {
                return Err(format!("non-finite trait {}", a.trait_value));
            }
            m.add(a.trait_value, a.count);
        }
        Ok(m)
    }
}

impl From<PointMeasure> for Repr {
    fn from(m: PointMeasure) -> Self {
        Repr { k: m.k, atoms: m.atoms }
    }
}

impl PointMeasure {
    pub fn new(k: u64) -> Self {
        assert!(k >= 1, "system size K must be at least 1");
        PointMeasure {
            k,
            atoms: Vec::new(),
            index: HashMap::new(),
            total: 0,
        }
    }

    /// One individual per listed trait; equal traits share an atom.
    pub fn from_traits(k: u64, traits: &[f64]) -> Self {
        let mut m = Self::new(k);
        for &x in traits {
            m.add(x, 1);
        }
        m
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.k as f64
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Number of individuals.
    pub fn count(&self) -> u64 {
        self.total
    }

    /// `<nu, 1> = count / K`.
    pub fn mass(&self) -> f64 {
        self.total as f64 / self.k as f64
    }

    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.index.get(&key(x)).copied()
    }

    /// Adds `n` individuals at `x`; returns the atom index. `n = 0` is a no-op
    /// returning the existing index, if any.
    pub fn add(&mut self, x: f64, n: u64) -> Option<usize> {
        if let Some(&i) = self.index.get(&key(x)) {
            self.atoms[i].count += n;
            self.total += n;
            return Some(i);
        }
        if n == 0 {
            return None;
        }
        let i = self.atoms.len();
        self.atoms.push(Atom {
            trait_value: x,
            count: n,
        });
        self.index.insert(key(x), i);
        self.total += n;
        Some(i)
    }

    /// Adds one individual to an existing atom.
    pub fn increment(&mut self, i: usize) {
        self.atoms[i].count += 1;
        self.total += 1;
    }

    /// Removes one individual from atom `i`.
    pub fn decrement(&mut self, i: usize) -> Removal {
        let atom = &mut self.atoms[i];
        atom.count -= 1;
        self.total -= 1;
        if atom.count > 0 {
            return Removal::Decremented;
        }
        let gone = self.atoms.swap_remove(i);
        self.index.remove(&key(gone.trait_value));
        let moved_from = if i < self.atoms.len() {
            self.index.insert(key(self.atoms[i].trait_value), i);
            Some(self.atoms.len())
        } else {
            None
        };
        Removal::Emptied { moved_from }
    }

    /// `<nu, f> = (1/K) sum count_i f(x_i)`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let s: f64 = self
            .atoms
            .iter()
            .map(|a| a.count as f64 * f(a.trait_value))
            .sum();
        s / self.k as f64
    }

    pub fn pair<T: TestFn + ?Sized>(&self, f: &T) -> f64 {
        self.integrate(|x| f.value(x))
    }

    /// `(W * nu)(x) = (1/K) sum count_i W(x - x_i)`.
    pub fn convolve_at(&self, w: &TraitFn, x: f64) -> f64 {
        self.integrate(|y| w.eval(x - y))
    }

    /// Largest `|x_i|`, 0 for the empty measure.
    pub fn radius(&self) -> f64 {
        self.atoms.iter().map(|a| a.trait_value.abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn integrate_examples() {
        let empty = PointMeasure::new(5);
        assert_eq!(empty.integrate(|x| x * x), 0.0);
        let mut m = PointMeasure::new(10);
        m.add(2.0, 3);
        assert!((m.integrate(|x| x * x) - 1.2).abs() < 1e-15);
        assert_eq!(m.integrate(|_| 1.0), m.mass());
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let w = TraitFn::Gaussian {
            amplitude: 1.5,
            center: 0.0,
            width: 0.7,
        };
        let m = PointMeasure::from_traits(4, &[0.3, -1.1]);
        let x = 0.4;
        let mut direct = 0.0;
        for y in [0.3, -1.1] {
            let s: f64 = (x - y) / 0.7;
            direct += 1.5 * (-0.5 * s * s).exp();
        }
        assert!((m.convolve_at(&w, x) - direct / 4.0).abs() < 1e-15);
        assert_eq!(m.convolve_at(&TraitFn::constant(1.0), 7.0), m.mass());
        assert_eq!(PointMeasure::new(3).convolve_at(&w, 0.0), 0.0);
    }

    #[test]
    fn signed_zero_shares_atom() {
        let m = PointMeasure::from_traits(1, &[0.0, -0.0]);
        assert_eq!(m.len(), 1);
        assert_eq!(m.count(), 2);
    }

    #[test]
    fn json_roundtrip() {
        let m = PointMeasure::from_traits(7, &[1.0, 1.0, -2.5]);
        let s = serde_json::to_string(&m).unwrap();
        let back: PointMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        assert_eq!(back.index_of(-2.5), Some(1));
    }

    proptest! {
        #[test]
        fn mass_tracks_count_and_no_empty_atoms(
            ops in prop::collection::vec((0u8..4, 0usize..64), 1..400)
        ) {
            let mut m = PointMeasure::new(13);
            let mut n: u64 = 0;
            for (op, arg) in ops {
                if op < 2 || m.is_empty() {
                    m.add((arg % 7) as f64 * 0.5, 1);
                    n += 1;
                } else {
                    let i = arg % m.len();
                    m.decrement(i);
                    n -= 1;
                }
                prop_assert_eq!(m.count(), n);
                prop_assert_eq!(m.atoms().iter().map(|a| a.count).sum::<u64>(), n);
                prop_assert!(m.atoms().iter().all(|a| a.count > 0));
                prop_assert!((m.mass() * 13.0 - n as f64).abs() < 1e-12);
                for (i, a) in m.atoms().iter().enumerate() {
                    prop_assert_eq!(m.index_of(a.trait_value), Some(i));
                }
            }
        }

        #[test]
        fn convolve_is_integrate_of_shifted_kernel(
            xs in prop::collection::vec(-5.0f64..5.0, 0..20), x in -5.0f64..5.0
        ) {
            let m = PointMeasure::from_traits(9, &xs);
            let w = TraitFn::Gaussian { amplitude: 1.0, center: 0.2, width: 1.3 };
            prop_assert_eq!(m.convolve_at(&w, x), m.integrate(|y| w.eval(x - y)));
        }
    }
}
