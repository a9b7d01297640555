//! The martingale
//! `M^f_t = <nu_t, f> - <nu_0, f> - ∫_0^t A^f(nu_s) ds`
//! and its predictable bracket `∫_0^t Q^f(nu_s) ds`, where for a state with
//! atoms `(x_i, c_i)` and per-individual rates `(beta_i, delta_i)`
//!
//! ```text
//! A^f = (1/K)   sum c_i [ (beta_i - delta_i) f(x_i) + p(x_i) beta_i m_f(x_i) ]
//! Q^f = (1/K^2) sum c_i [ (beta_i + delta_i) f(x_i)^2 + p(x_i) beta_i m_{f^2}(x_i) ]
//! ```
//!
//! with `m_g(x) = ∫ (g(x+h) - g(x)) M_K(x, dh)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::gillespie::{Event, EventKind, Observer, Trajectory};
use super::state::{AtomChange, Dynamics, SimState};
use crate::fractional::{kernel_increment, QuadratureSpec};
use crate::model::{ModelParams, PointMeasure, TestFn, TestFunction};
use crate::{Error, Result};

/// `x -> f(x)^2`.
pub(crate) struct Squared<'a, F: ?Sized>(pub &'a F);

impl<F: TestFn + ?Sized> TestFn for Squared<'_, F> {
    fn value(&self, x: f64) -> f64 {
        let v = self.0.value(x);
        v * v
    }
    fn deriv(&self, x: f64) -> f64 {
        2.0 * self.0.value(x) * self.0.deriv(x)
    }
    fn second_deriv(&self, x: f64) -> f64 {
        let d = self.0.deriv(x);
        2.0 * (d * d + self.0.value(x) * self.0.second_deriv(x))
    }
    fn sup_norm(&self) -> f64 {
        self.0.sup_norm() * self.0.sup_norm()
    }
    fn second_deriv_bound(&self) -> f64 {
        f64::INFINITY
    }
    fn variation_interval(&self) -> Option<(f64, f64)> {
        self.0.variation_interval()
    }
    fn far_values(&self) -> (f64, f64) {
        let (l, r) = self.0.far_values();
        (l * l, r * r)
    }
    fn kinks(&self) -> Vec<f64> {
        self.0.kinks()
    }
}

/// `(f(x), m_f(x), m_{f^2}(x))`; the kernel integrals are skipped when
/// `p(x) = 0`.
fn atom_values(
    params: &ModelParams,
    f: &TestFunction,
    x: f64,
    p: f64,
    quad: &QuadratureSpec,
) -> [f64; 3] {
    let fx = f.value(x);
    if p == 0.0 {
        return [fx, 0.0, 0.0];
    }
    let mf = kernel_increment(&params.kernel, f, x, params.k, params.eta, quad);
    let m2 = kernel_increment(&params.kernel, &Squared(f), x, params.k, params.eta, quad);
    [fx, mf, m2]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MartingalePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub bracket: Vec<f64>,
}

// Per-atom, per-function terms. In separable mode the rate of atom i is
// (bx_i + bz, dx_i + dz) with bz, dz shared, so A K and Q K^2 are linear in
// six running sums:
//   A K   = S[AX] + bz S[BF] - dz S[F]
//   Q K^2 = S[QX] + bz S[BQ] + dz S[F2]
const F: usize = 0;
const AX: usize = 1;
const BF: usize = 2;
const QX: usize = 3;
const BQ: usize = 4;
const F2: usize = 5;
const NT: usize = 6;

/// Online tracker of `<nu_t, f>`, its running supremum and, optionally,
/// the martingale `M^f` with its bracket, for a list of test functions.
#[derive(Debug, Clone)]
pub struct MartingaleTracker {
    functions: Vec<TestFunction>,
    compensate: bool,
    quad: QuadratureSpec,
    // atoms × functions × [f, m_f, m_{f^2}], mirrors the state's atom order.
    values: Vec<[f64; 3]>,
    terms: Vec<[f64; NT]>,
    sums: Vec<[f64; NT]>,
    initial: Vec<f64>,
    drift: Vec<f64>,
    bracket: Vec<f64>,
    sup: Vec<f64>,
    pub outputs: Vec<TrackerOutput>,
}

/// Tracker state at one output time; one entry per function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackerOutput {
    pub pairing: Vec<f64>,
    pub martingale: Vec<f64>,
    pub bracket: Vec<f64>,
}

impl MartingaleTracker {
    /// `compensate = false` tracks only the pairings and their suprema.
    pub fn new(functions: Vec<TestFunction>, compensate: bool, quad: QuadratureSpec) -> Self {
        let n = functions.len();
        MartingaleTracker {
            functions,
            compensate,
            quad,
            values: Vec::new(),
            terms: Vec::new(),
            sums: vec![[0.0; NT]; n],
            initial: vec![0.0; n],
            drift: vec![0.0; n],
            bracket: vec![0.0; n],
            sup: vec![f64::NEG_INFINITY; n],
            outputs: Vec::new(),
        }
    }

    pub fn functions(&self) -> &[TestFunction] {
        &self.functions
    }

    /// `sup_{t <= T} <nu_t, f>` per function.
    pub fn suprema(&self) -> &[f64] {
        &self.sup
    }

    fn nf(&self) -> usize {
        self.functions.len()
    }

    fn push_atom(&mut self, d: &Dynamics, state: &SimState, i: usize) {
        let x = state.atoms()[i].trait_value;
        let p = state.mutation_probability(i);
        let (bx, dx) = state.trait_parts(i);
        for f in &self.functions {
            let v = if self.compensate {
                atom_values(&d.params, f, x, p, &self.quad)
            } else {
                [f.value(x), 0.0, 0.0]
            };
            let [fx, mf, m2] = v;
            let mut t = [0.0; NT];
            t[F] = fx;
            t[AX] = (bx - dx) * fx + p * bx * mf;
            t[BF] = fx + p * mf;
            t[QX] = (bx + dx) * fx * fx + p * bx * m2;
            t[BQ] = fx * fx + p * m2;
            t[F2] = fx * fx;
            self.values.push(v);
            self.terms.push(t);
        }
    }

    fn swap_remove_atom(&mut self, i: usize) {
        let nf = self.nf();
        let last = self.values.len() / nf - 1;
        for j in 0..nf {
            self.values.swap(i * nf + j, last * nf + j);
            self.terms.swap(i * nf + j, last * nf + j);
        }
        self.values.truncate(last * nf);
        self.terms.truncate(last * nf);
    }

    fn shift_sums(&mut self, i: usize, sign: f64) {
        let nf = self.nf();
        for j in 0..nf {
            let t = &self.terms[i * nf + j];
            for (s, v) in self.sums[j].iter_mut().zip(t) {
                *s += sign * v;
            }
        }
    }

    fn resum(&mut self, state: &SimState) {
        let nf = self.nf();
        for s in &mut self.sums {
            *s = [0.0; NT];
        }
        for (i, a) in state.atoms().iter().enumerate() {
            let c = a.count as f64;
            for j in 0..nf {
                for (s, v) in self.sums[j].iter_mut().zip(&self.terms[i * nf + j]) {
                    *s += c * v;
                }
            }
        }
    }

    fn pairing(&self, d: &Dynamics, j: usize) -> f64 {
        self.sums[j][F] * d.inv_k
    }

    /// `(A^f, Q^f)` for function `j` in the current state.
    fn generator_terms(&self, d: &Dynamics, state: &SimState, j: usize) -> (f64, f64) {
        let inv_k = d.inv_k;
        if state.is_separable() {
            let s = &self.sums[j];
            let (bz, dz) = state.common_parts(d);
            (
                (s[AX] + bz * s[BF] - dz * s[F]) * inv_k,
                (s[QX] + bz * s[BQ] + dz * s[F2]) * inv_k * inv_k,
            )
        } else {
            let nf = self.nf();
            let (mut a, mut q) = (0.0, 0.0);
            for (i, atom) in state.atoms().iter().enumerate() {
                let (beta, delta) = state.rates(d, i);
                let p = state.mutation_probability(i);
                let [fx, mf, m2] = self.values[i * nf + j];
                let c = atom.count as f64;
                a += c * ((beta - delta) * fx + p * beta * mf);
                q += c * ((beta + delta) * fx * fx + p * beta * m2);
            }
            (a * inv_k, q * inv_k * inv_k)
        }
    }

    fn update_sup(&mut self, d: &Dynamics) {
        for j in 0..self.nf() {
            let v = self.pairing(d, j);
            if v > self.sup[j] {
                self.sup[j] = v;
            }
        }
    }
}

impl Observer for MartingaleTracker {
    fn start(&mut self, d: &Dynamics, state: &SimState) -> Result<()> {
        self.values.clear();
        self.terms.clear();
        for i in 0..state.atoms().len() {
            self.push_atom(d, state, i);
        }
        self.resum(state);
        for j in 0..self.nf() {
            self.initial[j] = self.pairing(d, j);
            self.drift[j] = 0.0;
            self.bracket[j] = 0.0;
            self.sup[j] = f64::NEG_INFINITY;
        }
        self.outputs.clear();
        self.update_sup(d);
        Ok(())
    }

    fn advance(&mut self, d: &Dynamics, state: &SimState, dt: f64) {
        if !self.compensate || dt <= 0.0 || state.is_extinct() {
            return;
        }
        for j in 0..self.nf() {
            let (a, q) = self.generator_terms(d, state, j);
            self.drift[j] += a * dt;
            self.bracket[j] += q * dt;
        }
    }

    fn event(&mut self, d: &Dynamics, state: &SimState, _: &Event, change: AtomChange) -> Result<()> {
        match change {
            AtomChange::Incremented(i) => self.shift_sums(i, 1.0),
            AtomChange::Added(i) => {
                self.push_atom(d, state, i);
                self.shift_sums(i, 1.0);
            }
            AtomChange::Decremented(i) => self.shift_sums(i, -1.0),
            AtomChange::Removed { index, .. } => {
                self.shift_sums(index, -1.0);
                self.swap_remove_atom(index);
            }
        }
        self.update_sup(d);
        Ok(())
    }

    fn rebuilt(&mut self, _: &Dynamics, state: &SimState) {
        self.resum(state);
    }

    fn output(&mut self, _: usize, state: &SimState) {
        let nf = self.nf();
        // Direct pairings: the running sums are only used between outputs.
        let pairing: Vec<f64> = self.functions.iter().map(|f| state.population().pair(f)).collect();
        let martingale = (0..nf)
            .map(|j| pairing[j] - self.initial[j] - self.drift[j])
            .collect();
        self.outputs.push(TrackerOutput {
            pairing,
            martingale,
            bracket: self.bracket.clone(),
        });
    }
}

/// Direct evaluation of `(A^f, Q^f)` for a measure, from the model
/// parameters alone.
fn direct_terms(
    params: &ModelParams,
    nu: &PointMeasure,
    values: &mut HashMap<u64, [f64; 3]>,
    f: &TestFunction,
    quad: &QuadratureSpec,
) -> (f64, f64) {
    let k_eta = params.k_eta();
    let inv_k = 1.0 / params.k as f64;
    let (mut a, mut q) = (0.0, 0.0);
    for atom in nu.atoms() {
        let x = atom.trait_value;
        let p = params.p.eval(x);
        let [fx, mf, m2] = *values
            .entry(x.to_bits())
            .or_insert_with(|| atom_values(params, f, x, p, quad));
        let base = k_eta * params.r.eval(x);
        let beta = base + params.b.eval(x, nu.convolve_at(&params.v, x));
        let delta = base + params.d.eval(x, nu.convolve_at(&params.u, x));
        let c = atom.count as f64;
        a += c * ((beta - delta) * fx + p * beta * mf);
        q += c * ((beta + delta) * fx * fx + p * beta * m2);
    }
    (a * inv_k, q * inv_k * inv_k)
}

/// Rebuilds `M^f` and its bracket at the trajectory's output times by
/// replaying the recorded event log from the initial measure.
pub fn martingale_path(
    traj: &Trajectory,
    f: &TestFunction,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<MartingalePath> {
    let events = traj.events.as_ref().ok_or(Error::MissingEventLog)?;
    let mut nu = traj.initial.clone();
    let mut cache = HashMap::new();
    let f0 = nu.pair(f);
    let (mut drift, mut bracket) = (0.0, 0.0);
    let mut t = 0.0;
    let mut out = MartingalePath {
        times: traj.times.clone(),
        values: Vec::with_capacity(traj.times.len()),
        bracket: Vec::with_capacity(traj.times.len()),
    };
    let mut next_event = events.iter().peekable();
    for &t_out in &traj.times {
        loop {
            let until = match next_event.peek() {
                Some(e) if e.time <= t_out => e.time,
                _ => t_out,
            };
            if until > t {
                let (a, q) = direct_terms(params, &nu, &mut cache, f, quad);
                drift += a * (until - t);
                bracket += q * (until - t);
                t = until;
            }
            match next_event.peek() {
                Some(e) if e.time <= t_out => {
                    apply(&mut nu, e);
                    next_event.next();
                }
                _ => break,
            }
        }
        out.values.push(nu.pair(f) - f0 - drift);
        out.bracket.push(bracket);
    }
    Ok(out)
}

fn apply(nu: &mut PointMeasure, e: &Event) {
    match e.kind {
        EventKind::CloneBirth | EventKind::MutantBirth => {
            nu.add(e.offspring_trait.expect("births carry an offspring trait"), 1);
        }
        EventKind::Death => {
            let i = nu.index_of(e.parent_trait).expect("death of a present trait");
            nu.decrement(i);
        }
    }
}
