//! Minimization of `H^hf` in bond-angle coordinates.
//!
//! Rotation invariance removes the base direction, so the free variables are
//! the increments `theta^i`; a [`Clamp`] pins some of them to force opposite
//! chiralities at the two ends of the chain.

mod engine;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use engine::{minimize, Direction, Minimum, Objective, OptimizerSettings, Status, TraceRow, Tridiagonal};

use crate::chirality::angles;
use crate::spin::{
    bond_trig, check_delta, energy_h, helix_angle_near_transition, hhf_terms, lattice_count, IncrementField,
    ModelParams, SpinChain,
};
use crate::{Error, Result};

/// `H^hf` as a function of the increments of a chain with spacing `lambda`.
#[derive(Debug, Clone, Copy)]
pub struct HhfObjective {
    pub n: usize,
    pub spacing: f64,
    pub delta: f64,
}

impl Objective for HhfObjective {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        hhf_terms(x, self.spacing, self.delta)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        hhf_value_grad(x, self.spacing, self.delta, grad)
    }

    /// `lambda (L + 8 delta I)`: the bond-pair coupling plus the curvature of
    /// the double well at `z = +-1`.
    fn metric(&self) -> Option<Tridiagonal> {
        Some(Tridiagonal::path_laplacian(self.n, self.spacing, 8.0 * self.delta))
    }
}

/// Value and gradient of the reduced form, one pass over the bond pairs.
///
/// With `a = 2 delta - 2 s_i - 2 s_{i+1}` and `b = sin theta^{i+1} - sin theta^i`
/// the pair term `lambda/2 (a^2 + b^2)` has partial derivatives
/// `-lambda (a sin theta^i + b cos theta^i)` and
/// `lambda (b cos theta^{i+1} - a sin theta^{i+1})`.
fn hhf_value_grad(x: &[f64], lambda: f64, delta: f64, grad: &mut [f64]) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut total = 0.0;
    let mut carry = 0.0;
    let mut prev = bond_trig(x[0]);
    for i in 0..x.len() - 1 {
        let next = bond_trig(x[i + 1]);
        let a = 2.0 * delta - 2.0 * prev.half_sin_sq - 2.0 * next.half_sin_sq;
        let b = next.sin - prev.sin;
        let term = 0.5 * lambda * (a * a + b * b);
        // Neumaier, same order as the value-only path
        let t = total + term;
        if total.abs() >= term.abs() {
            carry += (total - t) + term;
        } else {
            carry += (term - t) + total;
        }
        total = t;
        grad[i] -= lambda * (a * prev.sin + b * prev.cos);
        grad[i + 1] += lambda * (b * next.cos - a * next.sin);
        prev = next;
    }
    total + carry
}

/// Analytic gradient of [`crate::spin::reduced_hhf`] with respect to each increment.
pub fn grad_hhf(incr: &IncrementField, delta: f64) -> Result<Vec<f64>> {
    check_delta(delta)?;
    if incr.len() < 2 {
        return Err(Error::domain("need at least 2 increments"));
    }
    let mut g = vec![0.0; incr.len()];
    hhf_value_grad(incr.thetas(), incr.spacing(), delta, &mut g);
    Ok(g)
}

/// Increments held fixed during a descent.
///
/// Head indices count from the first increment, tail indices from the last
/// one (`0` is the last increment).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Clamp {
    pub head_increments: Vec<(usize, f64)>,
    pub tail_increments: Vec<(usize, f64)>,
}

impl Clamp {
    pub fn none() -> Self {
        Clamp::default()
    }

    /// Two first increments at `-phi`, two last at `+phi`, `phi = arccos(1 - delta)`.
    ///
    /// Opposite chiralities at the ends force one transition; since cosine is
    /// even the boundary condition `(u^1,u^0) = (u^N,u^{N-1})` still holds.
    pub fn transition(delta: f64) -> Result<Self> {
        check_delta(delta)?;
        let phi = helix_angle_near_transition(delta);
        Ok(Clamp {
            head_increments: vec![(0, -phi), (1, -phi)],
            tail_increments: vec![(0, phi), (1, phi)],
        })
    }

    pub fn is_empty(&self) -> bool {
        self.head_increments.is_empty() && self.tail_increments.is_empty()
    }

    /// Absolute `(index, value)` pairs for a field of `n` increments.
    pub fn resolve(&self, n: usize) -> Result<Vec<(usize, f64)>> {
        let mut out = Vec::new();
        for &(i, v) in &self.head_increments {
            out.push((i, v));
        }
        for &(k, v) in &self.tail_increments {
            if k >= n {
                return Err(Error::domain(format!("tail clamp {k} outside {n} increments")));
            }
            out.push((n - 1 - k, v));
        }
        let mut seen = vec![false; n];
        for &(i, v) in &out {
            if i >= n {
                return Err(Error::domain(format!("clamp index {i} outside {n} increments")));
            }
            if seen[i] {
                return Err(Error::domain(format!("clamp index {i} given twice")));
            }
            if !(-PI..PI).contains(&v) {
                return Err(Error::domain(format!("clamped value {v} outside [-pi, pi)")));
            }
            seen[i] = true;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct Descent {
    pub increments: IncrementField,
    /// `H^hf` of the final increments.
    pub energy: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub status: Status,
    pub trace: Vec<TraceRow>,
}

/// Minimizes `H^hf` from `start` with the clamped increments fixed.
pub fn descend(start: &IncrementField, delta: f64, clamp: &Clamp, settings: &OptimizerSettings) -> Result<Descent> {
    check_delta(delta)?;
    let n = start.len();
    if n < 2 {
        return Err(Error::domain("need at least 2 increments"));
    }
    let pins = clamp.resolve(n)?;
    let mut x = start.thetas().to_vec();
    let mut frozen = vec![false; n];
    for (i, v) in pins {
        x[i] = v;
        frozen[i] = true;
    }
    let objective = HhfObjective {
        n,
        spacing: start.spacing(),
        delta,
    };
    let m = minimize(&objective, x, &frozen, settings)?;
    Ok(Descent {
        increments: IncrementField::from_raw(m.x, start.spacing()),
        energy: m.value,
        iterations: m.iterations,
        grad_norm: m.grad_norm,
        status: m.status,
        trace: m.trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub energy: f64,
    pub increments: Vec<f64>,
    pub grid_points: usize,
}

/// Exhaustive minimum of `E` over the increment grid `-pi + 2 pi k / grid`,
/// restricted to `|theta^0| = |theta^last|` (the boundary condition).
pub fn brute_force_min(n_sites: usize, params: &ModelParams, grid_points: usize) -> Result<BruteForce> {
    params.validate()?;
    if n_sites > 6 {
        return Err(Error::domain(format!(
            "brute force refuses {n_sites} sites (at most 6)"
        )));
    }
    if n_sites < 3 {
        return Err(Error::domain("brute force needs at least 3 sites"));
    }
    if grid_points < 8 {
        return Err(Error::domain(format!(
            "grid needs at least 8 points, got {grid_points}"
        )));
    }
    let m = lattice_count(params.spacing)?;
    if m + 1 != n_sites {
        return Err(Error::domain(format!(
            "spacing {} gives {} sites, not {n_sites}",
            params.spacing,
            m + 1
        )));
    }

    let g = grid_points;
    let h = 2.0 * PI / g as f64;
    let angle = |k: usize| -PI + k as f64 * h;
    let nn: Vec<f64> = (0..g).map(|k| -params.j1 * angle(k).cos()).collect();
    // theta_a + theta_b = -2 pi + (a + b) h
    let nnn: Vec<f64> = (0..2 * g).map(|s| (s as f64 * h).cos()).collect();
    let negate = |k: usize| if k == 0 { 0 } else { g - k };

    struct Search<'a> {
        nn: &'a [f64],
        nnn: &'a [f64],
        g: usize,
        m: usize,
        idx: Vec<usize>,
        best: f64,
        best_idx: Vec<usize>,
    }

    impl Search<'_> {
        // idx[..depth] chosen, partial = sum of the complete pair terms so far
        fn go(&mut self, depth: usize, partial: f64, last_choices: [usize; 2]) {
            let prev = self.idx[depth - 1];
            let base = partial + self.nn[prev];
            if depth == self.m - 1 {
                for &k in &last_choices {
                    let total = base + self.nnn[prev + k];
                    if total < self.best {
                        self.best = total;
                        self.idx[depth] = k;
                        self.best_idx.copy_from_slice(&self.idx);
                    }
                }
                return;
            }
            for k in 0..self.g {
                self.idx[depth] = k;
                self.go(depth + 1, base + self.nnn[prev + k], last_choices);
            }
        }
    }

    let mut search = Search {
        nn: &nn,
        nnn: &nnn,
        g,
        m,
        idx: vec![0; m],
        best: f64::INFINITY,
        best_idx: vec![0; m],
    };
    for k0 in 0..g {
        search.idx[0] = k0;
        let last = [k0, negate(k0)];
        search.go(1, 0.0, last);
    }
    let lambda = params.spacing;
    Ok(BruteForce {
        energy: lambda * search.best,
        increments: search.best_idx.iter().map(|&k| angle(k)).collect(),
        grid_points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub holds: bool,
    pub worst_bond: usize,
    /// `max_i |J1/4 - (u^i, u^{i+1})|`
    pub worst_deviation: f64,
    /// `sqrt(C) (2/J1 + 1/2) mu^{1/2}`
    pub bound: f64,
    pub measured_h: f64,
}

/// Checks `|J1/4 - (u^i,u^{i+1})| <= sqrt(C)(2/J1 + 1/2) mu^{1/2}` for every
/// bond of a chain with `H(u) <= C lambda mu`.
pub fn apriori_check(chain: &SpinChain, params: &ModelParams, mu: f64, c_bound: f64) -> Result<AprioriReport> {
    if !(mu > 0.0 && c_bound >= 0.0) {
        return Err(Error::domain("need mu > 0 and C >= 0"));
    }
    let h = energy_h(chain, params)?;
    let allowed = c_bound * chain.spacing() * mu;
    if h > allowed * (1.0 + 1e-12) {
        return Err(Error::precondition(format!(
            "H = {h:e} exceeds C lambda mu = {allowed:e}"
        )));
    }
    let target = params.j1 / 4.0;
    let thetas = angles(chain);
    let mut worst = (0, 0.0);
    for (i, t) in thetas.thetas().iter().enumerate() {
        // J1/4 - cos(theta), cancellation-free when J1 = 4(1 - delta)
        let dev = match params.delta {
            Some(delta) => {
                let s = (0.5 * t).sin();
                2.0 * s * s - delta
            }
            None => target - t.cos(),
        }
        .abs();
        if dev > worst.1 {
            worst = (i, dev);
        }
    }
    let bound = c_bound.sqrt() * (2.0 / params.j1 + 0.5) * mu.sqrt();
    Ok(AprioriReport {
        holds: worst.1 <= bound,
        worst_bond: worst.0,
        worst_deviation: worst.1,
        bound,
        measured_h: h,
    })
}
