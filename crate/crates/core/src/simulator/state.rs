//! Simulation state: the population, per-atom rate parts and interaction
//! caches.

use serde::Serialize;

use super::fenwick::Fenwick;
use crate::model::{Atom, ModelParams, PointMeasure, RateFn, Removal, TraitFn};
use crate::{Error, Result};

/// Part of a rate that depends on the trait only.
#[inline]
fn x_part(f: &RateFn, x: f64) -> f64 {
    if f.depends_on_x() {
        f.eval(x, 0.0)
    } else {
        0.0
    }
}

/// Part of a rate that depends on the interaction value only. Every
/// registry form is either trait-only or interaction-only, so the two parts
/// add up to the rate.
#[inline]
fn z_part(f: &RateFn, z: f64) -> f64 {
    if f.depends_on_x() {
        0.0
    } else {
        f.eval(0.0, z)
    }
}

/// How an interaction convolution `W * nu` is maintained.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Interaction {
    /// The rate ignores the convolution.
    Unused,
    /// `W ≡ c`: the convolution is `c <nu, 1>` everywhere.
    Scalar(f64),
    /// Per-atom values, updated incrementally.
    Full(Vec<f64>),
}

impl Interaction {
    fn for_kernel(w: &TraitFn, rate: &RateFn) -> Self {
        if !rate.depends_on_z() {
            Interaction::Unused
        } else if let Some(c) = w.as_constant() {
            Interaction::Scalar(c)
        } else {
            Interaction::Full(Vec::new())
        }
    }
}

/// Everything the event loop needs from [`ModelParams`], precomputed.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub params: ModelParams,
    pub(crate) k_eta: f64,
    pub(crate) inv_k: f64,
    pub(crate) u_mode: Interaction,
    pub(crate) v_mode: Interaction,
}

/// Which event-selection path a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// Interactions are absent or constant: every rate splits into a trait
    /// part and a part shared by all individuals; selection is `O(log I)`.
    Separable,
    /// Trait-dependent interaction kernels: per-atom caches, `O(I)` per event.
    General,
}

impl Dynamics {
    pub fn new(params: &ModelParams) -> Self {
        Dynamics {
            params: params.clone(),
            k_eta: params.k_eta(),
            inv_k: 1.0 / params.k as f64,
            u_mode: Interaction::for_kernel(&params.u, &params.d),
            v_mode: Interaction::for_kernel(&params.v, &params.b),
        }
    }

    pub fn mode(&self) -> RateMode {
        if matches!(self.u_mode, Interaction::Full(_)) || matches!(self.v_mode, Interaction::Full(_)) {
            RateMode::General
        } else {
            RateMode::Separable
        }
    }

    /// Trait parts `(K^eta r(x) + b_x(x), K^eta r(x) + d_x(x))`.
    pub(crate) fn trait_parts(&self, x: f64) -> (f64, f64) {
        let base = self.k_eta * self.params.r.eval(x);
        (base + x_part(&self.params.b, x), base + x_part(&self.params.d, x))
    }
}

/// Which atom an event touched, with the swap-remove bookkeeping needed to
/// mirror per-atom arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomChange {
    Incremented(usize),
    Added(usize),
    Decremented(usize),
    Removed { index: usize, moved_from: Option<usize> },
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub(crate) time: f64,
    pub(crate) population: PointMeasure,
    pub(crate) event_count: u64,
    birth_x: Vec<f64>,
    death_x: Vec<f64>,
    p: Vec<f64>,
    cache_u: Interaction,
    cache_v: Interaction,
    // Separable mode only: weights count_i (b_x + d_x)_i and count_i.
    fen_x: Fenwick,
    fen_n: Fenwick,
    separable: bool,
}

impl SimState {
    pub fn new(dynamics: &Dynamics, population: PointMeasure) -> Result<Self> {
        if population.k() != dynamics.params.k {
            return Err(Error::InvalidParameter(format!(
                "initial measure has K = {}, model has K = {}",
                population.k(),
                dynamics.params.k
            )));
        }
        let mut s = SimState {
            time: 0.0,
            population,
            event_count: 0,
            birth_x: Vec::new(),
            death_x: Vec::new(),
            p: Vec::new(),
            cache_u: dynamics.u_mode.clone(),
            cache_v: dynamics.v_mode.clone(),
            fen_x: Fenwick::default(),
            fen_n: Fenwick::default(),
            separable: dynamics.mode() == RateMode::Separable,
        };
        for a in s.population.atoms() {
            let (bx, dx) = dynamics.trait_parts(a.trait_value);
            check_rate("birth", bx, a.trait_value)?;
            check_rate("death", dx, a.trait_value)?;
            s.birth_x.push(bx);
            s.death_x.push(dx);
            s.p.push(dynamics.params.p.eval(a.trait_value));
        }
        s.rebuild(dynamics);
        Ok(s)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn population(&self) -> &PointMeasure {
        &self.population
    }

    pub fn event_count(&self) -> u64 {
        self.event_count
    }

    pub fn is_extinct(&self) -> bool {
        self.population.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        self.population.atoms()
    }

    pub(crate) fn mutation_probability(&self, i: usize) -> f64 {
        self.p[i]
    }

    pub(crate) fn trait_parts(&self, i: usize) -> (f64, f64) {
        (self.birth_x[i], self.death_x[i])
    }

    pub(crate) fn is_separable(&self) -> bool {
        self.separable
    }

    fn interaction(cache: &Interaction, i: usize, mass: f64) -> f64 {
        match cache {
            Interaction::Unused => 0.0,
            Interaction::Scalar(c) => c * mass,
            Interaction::Full(v) => v[i],
        }
    }

    /// Cached `(U * nu)(x_i)`, or `None` when the death rate ignores it.
    pub fn cached_u(&self, i: usize) -> Option<f64> {
        match self.cache_u {
            Interaction::Unused => None,
            ref c => Some(Self::interaction(c, i, self.population.mass())),
        }
    }

    /// Cached `(V * nu)(x_i)`, or `None` when the birth rate ignores it.
    pub fn cached_v(&self, i: usize) -> Option<f64> {
        match self.cache_v {
            Interaction::Unused => None,
            ref c => Some(Self::interaction(c, i, self.population.mass())),
        }
    }

    /// Interaction parts of the birth and death rates shared by every
    /// individual in separable mode, `(b_z(V * nu), d_z(U * nu))`.
    pub(crate) fn common_parts(&self, dynamics: &Dynamics) -> (f64, f64) {
        let mass = self.population.mass();
        let zv = Self::interaction(&self.cache_v, 0, mass);
        let zu = Self::interaction(&self.cache_u, 0, mass);
        (z_part(&dynamics.params.b, zv), z_part(&dynamics.params.d, zu))
    }

    /// Per-individual `(birth, death)` rates of atom `i`.
    #[inline]
    pub fn rates(&self, dynamics: &Dynamics, i: usize) -> (f64, f64) {
        let mass = self.population.mass();
        let zv = Self::interaction(&self.cache_v, i, mass);
        let zu = Self::interaction(&self.cache_u, i, mass);
        (
            self.birth_x[i] + z_part(&dynamics.params.b, zv),
            self.death_x[i] + z_part(&dynamics.params.d, zu),
        )
    }

    /// Per-atom `(birth, death)` rates of a single individual.
    pub fn event_rates(&self, dynamics: &Dynamics) -> Result<Vec<(f64, f64)>> {
        (0..self.population.len())
            .map(|i| {
                let (b, d) = self.rates(dynamics, i);
                let x = self.population.atoms()[i].trait_value;
                check_rate("birth", b, x)?;
                check_rate("death", d, x)?;
                Ok((b, d))
            })
            .collect()
    }

    /// Total event rate `sum_i count_i (birth_i + death_i)`. Fails on a
    /// negative rate.
    pub fn total_rate(&self, dynamics: &Dynamics) -> Result<f64> {
        if self.population.is_empty() {
            return Ok(0.0);
        }
        if self.separable {
            let (bz, dz) = self.common_parts(dynamics);
            let x = self.population.atoms()[0].trait_value;
            check_rate("birth", bz, x)?;
            check_rate("death", dz, x)?;
            Ok(self.fen_x.total() + self.fen_n.total() * (bz + dz))
        } else {
            let mut total = 0.0;
            for (i, a) in self.population.atoms().iter().enumerate() {
                let (b, d) = self.rates(dynamics, i);
                check_rate("birth", b, a.trait_value)?;
                check_rate("death", d, a.trait_value)?;
                total += a.count as f64 * (b + d);
            }
            Ok(total)
        }
    }

    /// Picks an atom with probability proportional to `count_i (b_i + d_i)`
    /// from `u` uniform on `[0, total)`.
    pub(crate) fn select(&self, dynamics: &Dynamics, u: f64) -> usize {
        if self.separable {
            let xs = self.fen_x.total();
            if u < xs {
                self.fen_x.find(u)
            } else {
                let (bz, dz) = self.common_parts(dynamics);
                self.fen_n.find((u - xs) / (bz + dz))
            }
        } else {
            let mut acc = 0.0;
            let atoms = self.population.atoms();
            for (i, a) in atoms.iter().enumerate() {
                let (b, d) = self.rates(dynamics, i);
                acc += a.count as f64 * (b + d);
                if u < acc {
                    return i;
                }
            }
            atoms.len() - 1
        }
    }

    /// Adds one individual at `x`.
    pub(crate) fn add_individual(&mut self, dynamics: &Dynamics, x: f64) -> Result<AtomChange> {
        let inv_k = dynamics.inv_k;
        let params = &dynamics.params;
        for (cache, w) in [(&mut self.cache_u, &params.u), (&mut self.cache_v, &params.v)] {
            if let Interaction::Full(v) = cache {
                for (vi, a) in v.iter_mut().zip(self.population.atoms()) {
                    *vi += w.eval(a.trait_value - x) * inv_k;
                }
            }
        }
        if let Some(i) = self.population.index_of(x) {
            self.population.increment(i);
            if self.separable {
                self.fen_n.add(i, 1.0);
                self.fen_x.add(i, self.birth_x[i] + self.death_x[i]);
            }
            return Ok(AtomChange::Incremented(i));
        }
        let (bx, dx) = dynamics.trait_parts(x);
        check_rate("birth", bx, x)?;
        check_rate("death", dx, x)?;
        let i = self.population.add(x, 1).expect("new atom");
        self.birth_x.push(bx);
        self.death_x.push(dx);
        self.p.push(params.p.eval(x));
        for (cache, w) in [(&mut self.cache_u, &params.u), (&mut self.cache_v, &params.v)] {
            if let Interaction::Full(v) = cache {
                v.push(self.population.convolve_at(w, x));
            }
        }
        if self.separable {
            self.fen_n.push(1.0);
            self.fen_x.push(bx + dx);
        }
        Ok(AtomChange::Added(i))
    }

    /// Removes one individual from atom `i`.
    pub(crate) fn remove_individual(&mut self, dynamics: &Dynamics, i: usize) -> AtomChange {
        let inv_k = dynamics.inv_k;
        let params = &dynamics.params;
        let x = self.population.atoms()[i].trait_value;
        for (cache, w) in [(&mut self.cache_u, &params.u), (&mut self.cache_v, &params.v)] {
            if let Interaction::Full(v) = cache {
                for (vi, a) in v.iter_mut().zip(self.population.atoms()) {
                    *vi -= w.eval(a.trait_value - x) * inv_k;
                }
            }
        }
        match self.population.decrement(i) {
            Removal::Decremented => {
                if self.separable {
                    self.fen_n.add(i, -1.0);
                    self.fen_x.add(i, -(self.birth_x[i] + self.death_x[i]));
                }
                AtomChange::Decremented(i)
            }
            Removal::Emptied { moved_from } => {
                self.birth_x.swap_remove(i);
                self.death_x.swap_remove(i);
                self.p.swap_remove(i);
                for cache in [&mut self.cache_u, &mut self.cache_v] {
                    if let Interaction::Full(v) = cache {
                        v.swap_remove(i);
                    }
                }
                if self.separable {
                    self.fen_n.swap_remove(i);
                    self.fen_x.swap_remove(i);
                }
                AtomChange::Removed { index: i, moved_from }
            }
        }
    }

    /// Recomputes caches and selection trees from scratch.
    pub(crate) fn rebuild(&mut self, dynamics: &Dynamics) {
        let params = &dynamics.params;
        for (cache, w) in [(&mut self.cache_u, &params.u), (&mut self.cache_v, &params.v)] {
            if let Interaction::Full(v) = cache {
                *v = self
                    .population
                    .atoms()
                    .iter()
                    .map(|a| self.population.convolve_at(w, a.trait_value))
                    .collect();
            }
        }
        if self.separable {
            let atoms = self.population.atoms();
            self.fen_n = Fenwick::from_weights(atoms.iter().map(|a| a.count as f64).collect());
            self.fen_x = Fenwick::from_weights(
                atoms
                    .iter()
                    .zip(self.birth_x.iter().zip(&self.death_x))
                    .map(|(a, (b, d))| a.count as f64 * (b + d))
                    .collect(),
            );
        }
    }

    /// Largest relative gap between the incremental caches and a fresh
    /// direct convolution. Values smaller than the contribution of a single
    /// individual, `sup|W| / K`, are compared against that contribution.
    pub fn cache_drift(&self, dynamics: &Dynamics) -> f64 {
        let params = &dynamics.params;
        let mut worst: f64 = 0.0;
        for (cache, w) in [(&self.cache_u, &params.u), (&self.cache_v, &params.v)] {
            if let Interaction::Full(v) = cache {
                let floor = (w.sup().abs().max(w.inf().abs()) * dynamics.inv_k).max(f64::MIN_POSITIVE);
                for (vi, a) in v.iter().zip(self.population.atoms()) {
                    let direct = self.population.convolve_at(w, a.trait_value);
                    let scale = direct.abs().max(floor);
                    worst = worst.max((vi - direct).abs() / scale);
                }
            }
        }
        worst
    }
}

pub(crate) fn check_rate(kind: &'static str, value: f64, x: f64) -> Result<()> {
    if value >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeRate {
            kind,
            value,
            trait_value: x,
        })
    }
}
