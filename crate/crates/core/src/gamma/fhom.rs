//! Cell-problem estimator of the bulk energy density `f_hom(z)`.
//!
//! A cell holds `k + 1` spins `u^0..u^k` with the boundary condition
//! `(u^1, u^0) = (u^k, u^{k-1})`, realized as `theta^{k-1} = theta^0`. The
//! free variables are the direction of `u^0` and the increments
//! `theta^0..theta^{k-2}`; the mean `<u> = (1/k) sum_{i<k} u^i` is held near
//! `z` by a penalty.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::minimize::{minimize, Direction, Objective, OptimizerSettings, Status};
use crate::spin::Spin;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FhomSettings {
    /// `kappa = penalty_scale / rho^2` in the first stage.
    pub penalty_scale: f64,
    /// Factor applied to `kappa` for each continuation stage.
    pub continuation_factor: f64,
    pub continuation_steps: usize,
    /// Per continuation stage. The hinge of the penalty slows the last digits;
    /// the value has settled to about `1e-5` well before the default.
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Seeded random starts tried after [`STARTS`]; the landscape at small
    /// `J1` has many nearly degenerate commensurate minima.
    pub random_starts: usize,
    pub seed: u64,
}

impl Default for FhomSettings {
    fn default() -> Self {
        FhomSettings {
            penalty_scale: 1e3,
            continuation_factor: 10.0,
            continuation_steps: 1,
            max_iterations: 600,
            gradient_tolerance: 1e-7,
            random_starts: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    HelixCounterClockwise,
    HelixClockwise,
    Ferromagnetic,
    Mixture,
    /// Perturbed helix of random pitch and chirality, numbered from 0.
    Random(usize),
}

/// The mixture has no clockwise twin: reflecting across the line through `z`
/// maps one chirality onto the other.
pub const STARTS: [Start; 4] = [
    Start::HelixCounterClockwise,
    Start::HelixClockwise,
    Start::Ferromagnetic,
    Start::Mixture,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FhomEstimate {
    pub z: Spin,
    /// Cell energy per spin at the best start, penalty excluded.
    pub value: f64,
    pub cell_size: usize,
    pub rho: f64,
    /// Penalty weight of the last continuation stage.
    pub penalty: f64,
    /// `|<u> - z|` at the reported configuration.
    pub mean_offset: f64,
    pub start: Start,
    pub status: Status,
    /// Descent iterations summed over the continuation stages of the best start.
    pub iterations: usize,
}

/// `-(1 + J1^2/8) + (J1 - 4)^2/8 |z|^2` and `... |z|`; for `J1 >= 4` both are
/// `-(J1 - 1)`.
pub fn fhom_bounds(j1: f64, r: f64) -> (f64, f64) {
    if j1 >= 4.0 {
        return (-(j1 - 1.0), -(j1 - 1.0));
    }
    let base = -(1.0 + j1 * j1 / 8.0);
    let c = (j1 - 4.0) * (j1 - 4.0) / 8.0;
    (base + c * r * r, base + c * r)
}

#[derive(Clone, Copy)]
struct CellObjective {
    k: usize,
    j1: f64,
    z: Spin,
    rho: f64,
    kappa: f64,
}

struct CellEval {
    energy: f64,
    offset: f64,
}

/// Gradient of `|<u> - z|` in the variables `(base, theta^0..theta^{k-2})`.
/// `psi_m` depends on the base and on `theta^j` for `j < m`, so each entry is
/// a tail sum of the per-spin derivatives.
fn offset_sensitivity(psi: &[f64], diff: [f64; 2], offset: f64, k: usize) -> Vec<f64> {
    let c = 1.0 / (k as f64 * offset);
    let mut tail = vec![0.0; k + 1];
    for i in (0..k).rev() {
        tail[i] = tail[i + 1] + c * (-diff[0] * psi[i].sin() + diff[1] * psi[i].cos());
    }
    let mut v = vec![0.0; k];
    v[0] = tail[0];
    v[1..k].copy_from_slice(&tail[1..k]);
    v
}

impl CellObjective {
    fn directions(&self, x: &[f64]) -> (Vec<f64>, [f64; 2], f64) {
        let k = self.k;
        let mut psi = Vec::with_capacity(k);
        let mut angle = x[0];
        let mut mean = [0.0, 0.0];
        for i in 0..k {
            psi.push(angle);
            mean[0] += angle.cos();
            mean[1] += angle.sin();
            if i + 1 < k {
                angle += x[1 + i];
            }
        }
        let inv = 1.0 / k as f64;
        let diff = [mean[0] * inv - self.z[0], mean[1] * inv - self.z[1]];
        let offset = (diff[0] * diff[0] + diff[1] * diff[1]).sqrt();
        (psi, diff, offset)
    }
}

impl CellObjective {
    /// Hessian model in the spin angles: a band plus rank-one updates. With
    /// `estimate` unset it is the exact Hessian apart from the wrap-around
    /// bond when that is concave.
    fn model(&self, x: &[f64], estimate: bool) -> (Pentadiagonal, Vec<(f64, Vec<f64>)>) {
        let k = self.k;
        let inv = 1.0 / (k - 1) as f64;
        let mut band = Pentadiagonal::zeros(k);
        for i in 0..k - 1 {
            band.couple(i, 1, self.j1 * x[1 + i].cos() * inv);
        }
        for i in 0..k.saturating_sub(2) {
            band.couple(i, 2, -(x[1 + i] + x[2 + i]).cos() * inv);
        }
        let mut updates = Vec::new();
        // the wrap-around bond cos(theta^{k-2} + theta^0) couples psi_0, psi_1,
        // psi_{k-2} and psi_{k-1}; kept only while it is convex
        let wrap = -(x[k - 1] + x[1]).cos() * inv;
        if wrap > 0.0 {
            let mut a = vec![0.0; k];
            a[1] += 1.0;
            a[0] -= 1.0;
            a[k - 1] += 1.0;
            a[k - 2] -= 1.0;
            updates.push((wrap, a));
        }
        let (psi, diff, offset) = self.directions(x);
        let excess = offset - self.rho;
        // the normal part of the penalty is kept just inside the ball as well:
        // without it a Newton step from there overshoots deep into the penalty
        if offset > self.rho || (estimate && offset > 0.5 * self.rho) {
            let n = [diff[0] / offset, diff[1] / offset];
            let scale = 1.0 / k as f64;
            let mut w = Vec::with_capacity(k);
            let mut q = Vec::with_capacity(k);
            for p in &psi {
                let (sin, cos) = p.sin_cos();
                w.push(scale * (-n[0] * sin + n[1] * cos));
                q.push(scale * (n[1] * sin + n[0] * cos));
            }
            // multiplier of the active constraint, estimated from the energy
            // gradient on both sides of the hinge so the model does not jump there
            let mut lagrange = 2.0 * self.kappa * excess.max(0.0);
            if estimate {
                let free = CellObjective { kappa: 0.0, ..*self };
                let mut g = vec![0.0; k];
                free.eval(x, Some(&mut g));
                let g_psi = increments_to_angles_transpose(&g);
                lagrange = lagrange.max(-dot(&g_psi, &w) / dot(&w, &w));
            }
            for (m, p) in psi.iter().enumerate() {
                let (sin, cos) = p.sin_cos();
                band.diag[m] -= lagrange * scale * (n[0] * cos + n[1] * sin);
            }
            updates.push((2.0 * self.kappa, w));
            if lagrange > 0.0 {
                updates.push((lagrange / offset, q));
            }
        }
        (band, updates)
    }

    // x = (base, theta^0 .. theta^{k-2})
    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> CellEval {
        let k = self.k;
        // per bond rather than per spin: the k - 1 bonds of the cell repeat
        // with period k - 1, so this removes the O(1/k) bias of dividing by k
        let inv = 1.0 / (k - 1) as f64;
        let t = |i: usize| if i == k - 1 { x[1] } else { x[1 + i] };

        let mut energy = 0.0;
        for i in 0..=k - 2 {
            energy += -self.j1 * t(i).cos() + (t(i) + t(i + 1)).cos();
        }
        energy *= inv;

        let (psi, diff, offset) = self.directions(x);
        let excess = (offset - self.rho).max(0.0);

        if let Some(g) = grad {
            g.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..=k - 2 {
                let s = (t(i) + t(i + 1)).sin();
                g[1 + i] += inv * (self.j1 * t(i).sin() - s);
                let next = if i + 1 == k - 1 { 1 } else { 2 + i };
                g[next] -= inv * s;
            }
            if excess > 0.0 {
                let v = offset_sensitivity(&psi, diff, offset, k);
                let c = 2.0 * self.kappa * excess;
                for (gi, vi) in g.iter_mut().zip(&v) {
                    *gi += c * vi;
                }
            }
        }
        CellEval { energy, offset }
    }
}

impl Objective for CellObjective {
    fn dim(&self) -> usize {
        self.k
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let e = self.eval(x, Some(grad));
        let excess = (e.offset - self.rho).max(0.0);
        e.energy + self.kappa * excess * excess
    }

    /// Newton direction in the spin angles `psi`, where the cell energy is
    /// banded. The model is shifted until positive definite, factored, updated
    /// by Sherman-Morrison and mapped back to the increment variables.
    fn precondition(&self, x: &[f64], g: &[f64]) -> Option<Vec<f64>> {
        let k = self.k;
        let inv = 1.0 / (k - 1) as f64;
        let (band, updates) = self.model(x, true);
        let floor = 1e-2 * inv;
        let factor = band.factor(floor);

        let b = increments_to_angles_transpose(g);
        let y = sherman_morrison(&factor, &updates, &b);
        let mut out = vec![0.0; k];
        out[0] = y[0];
        for i in 0..k - 1 {
            out[1 + i] = y[i + 1] - y[i];
        }
        Some(out)
    }
}

/// Symmetric matrix with bandwidth 2, assembled from pair couplings.
struct Pentadiagonal {
    diag: Vec<f64>,
    off: [Vec<f64>; 2],
}

struct BandFactor {
    d: Vec<f64>,
    l: [Vec<f64>; 2],
}

impl Pentadiagonal {
    fn zeros(n: usize) -> Self {
        Pentadiagonal {
            diag: vec![0.0; n],
            off: [vec![0.0; n], vec![0.0; n]],
        }
    }

    /// Adds `c (e_i - e_{i+gap}) (e_i - e_{i+gap})^T`.
    fn couple(&mut self, i: usize, gap: usize, c: f64) {
        self.diag[i] += c;
        self.diag[i + gap] += c;
        self.off[gap - 1][i] -= c;
    }

    /// Plain `L D L^T` of `self + shift I`, or `None` at a non-positive pivot.
    fn factor_shifted(&self, shift: f64) -> Option<BandFactor> {
        let n = self.diag.len();
        let mut d = vec![0.0; n];
        let mut l = [vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            let mut p = self.diag[i] + shift;
            if i >= 1 {
                p -= l[0][i - 1] * l[0][i - 1] * d[i - 1];
            }
            if i >= 2 {
                p -= l[1][i - 2] * l[1][i - 2] * d[i - 2];
            }
            if !(p > 0.0) {
                return None;
            }
            d[i] = p;
            let mut b = self.off[0][i];
            if i >= 1 {
                b -= l[1][i - 1] * l[0][i - 1] * d[i - 1];
            }
            l[0][i] = b / p;
            l[1][i] = self.off[1][i] / p;
        }
        Some(BandFactor { d, l })
    }

    /// Factor of `self + (tau + floor) I` for the smallest `tau` in
    /// `0, floor, 2 floor, 4 floor, ...` that makes `self + tau I` positive
    /// definite, so every eigenvalue of the factored matrix exceeds `floor`.
    fn factor(&self, floor: f64) -> BandFactor {
        let mut tau = 0.0;
        loop {
            if self.factor_shifted(tau).is_some() {
                if let Some(f) = self.factor_shifted(tau + floor) {
                    return f;
                }
            }
            tau = if tau == 0.0 { floor } else { 2.0 * tau };
        }
    }
}

impl BandFactor {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut y = rhs.to_vec();
        for i in 0..n {
            if i >= 1 {
                y[i] -= self.l[0][i - 1] * y[i - 1];
            }
            if i >= 2 {
                y[i] -= self.l[1][i - 2] * y[i - 2];
            }
        }
        for (v, d) in y.iter_mut().zip(&self.d) {
            *v /= d;
        }
        for i in (0..n).rev() {
            if i + 1 < n {
                y[i] -= self.l[0][i] * y[i + 1];
            }
            if i + 2 < n {
                y[i] -= self.l[1][i] * y[i + 2];
            }
        }
        y
    }
}

/// `T^T g` for `x = T psi`, `x = (psi_0, psi_1 - psi_0, ...)`: a gradient in
/// the increment variables expressed in the spin angles.
fn increments_to_angles_transpose(g: &[f64]) -> Vec<f64> {
    let k = g.len();
    let mut b = vec![0.0; k];
    b[0] = g[0];
    for i in 0..k - 1 {
        b[i + 1] += g[1 + i];
        b[i] -= g[1 + i];
    }
    b
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(B + sum sigma_j u_j u_j^T)^{-1} rhs` for the factored `B` and
/// non-negative `sigma_j`, one rank-one update at a time.
fn sherman_morrison(factor: &BandFactor, updates: &[(f64, Vec<f64>)], rhs: &[f64]) -> Vec<f64> {
    // columns: solves of the update vectors and of rhs under the running inverse
    let mut cols: Vec<Vec<f64>> = updates.iter().map(|(_, u)| factor.solve(u)).collect();
    let mut y = factor.solve(rhs);
    for j in 0..updates.len() {
        let (sigma, u) = &updates[j];
        let hu = cols[j].clone();
        let denom = 1.0 + sigma * dot(u, &hu);
        let f = sigma * dot(u, &y) / denom;
        y.iter_mut().zip(&hu).for_each(|(a, b)| *a -= f * b);
        for col in cols.iter_mut().skip(j + 1) {
            let f = sigma * dot(u, col) / denom;
            col.iter_mut().zip(&hu).for_each(|(a, b)| *a -= f * b);
        }
    }
    y
}

fn start_point(start: Start, k: usize, j1: f64, z: Spin, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
    let direction = if r > 0.0 { z[1].atan2(z[0]) } else { 0.0 };
    let phi = if j1 < 4.0 { (j1 / 4.0).acos() } else { 0.0 };
    let mut x = vec![0.0; k];
    match start {
        Start::HelixCounterClockwise | Start::HelixClockwise => {
            let s = if start == Start::HelixClockwise { -1.0 } else { 1.0 };
            x[0] = direction;
            x[1..].iter_mut().for_each(|v| *v = s * phi);
        }
        Start::Ferromagnetic => {
            // the aligned state is a critical point; a slight twist leaves it
            x[0] = direction;
            x[1..].iter_mut().for_each(|v| *v = 1e-2 * phi);
        }
        Start::Random(index) => {
            let s = if index % 2 == 0 { 1.0 } else { -1.0 };
            let pitch = s * phi * rng.gen_range(0.7..1.3);
            x[0] = direction + rng.gen_range(-PI..PI);
            x[1..].iter_mut().for_each(|v| *v = pitch + rng.gen_range(-0.3..0.3));
        }
        Start::Mixture => {
            // helix, then a ferromagnetic block of fraction |z| along z, then helix
            let block = ((r * k as f64).round() as usize).min(k - 2);
            let head = (k - block) / 2;
            let mut angle = 0.0;
            for i in 0..k - 1 {
                let v = if i >= head && i < head + block { 0.0 } else { phi };
                x[1 + i] = v;
                if i < head {
                    angle += v;
                }
            }
            x[0] = direction - angle;
        }
    }
    x
}

fn wrapped(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        -PI
    } else {
        y
    }
}

/// Best penalized cell minimum over [`STARTS`] and the seeded random starts.
pub fn fhom_estimate(z: Spin, j1: f64, k: usize, rho: f64, settings: &FhomSettings) -> Result<FhomEstimate> {
    let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
    if !(r <= 1.0 + 1e-12) {
        return Err(Error::domain(format!("|z| = {r} exceeds 1")));
    }
    if !(j1 > 0.0 && j1.is_finite()) {
        return Err(Error::domain(format!("J1 must be positive, got {j1}")));
    }
    if k < 16 {
        return Err(Error::domain(format!("cell size must be at least 16, got {k}")));
    }
    if !(rho > 0.0 && rho < 0.5) {
        return Err(Error::domain(format!("rho must lie in (0, 0.5), got {rho}")));
    }
    if !(settings.penalty_scale > 0.0 && settings.continuation_factor >= 1.0) {
        return Err(Error::domain(
            "penalty scale must be positive and continuation factor at least 1",
        ));
    }
    let optimizer = OptimizerSettings {
        max_iterations: settings.max_iterations,
        gradient_tolerance: settings.gradient_tolerance,
        direction: Direction::Preconditioned,
        ..OptimizerSettings::default()
    };
    let frozen = vec![false; k];
    let mut best: Option<FhomEstimate> = None;
    let mut last_error = None;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let starts = STARTS.into_iter().chain((0..settings.random_starts).map(Start::Random));
    for start in starts {
        let mut x = start_point(start, k, j1, z, &mut rng);
        let mut kappa = settings.penalty_scale / (rho * rho);
        let mut outcome = None;
        let mut iterations = 0;
        for stage in 0..=settings.continuation_steps {
            if stage > 0 {
                kappa *= settings.continuation_factor;
            }
            let objective = CellObjective { k, j1, z, rho, kappa };
            match minimize(&objective, x.clone(), &frozen, &optimizer) {
                Ok(m) => {
                    iterations += m.iterations;
                    x = m.x;
                    outcome = Some((objective, m.status));
                }
                Err(e) => {
                    last_error = Some(e);
                    outcome = None;
                    break;
                }
            }
        }
        let Some((objective, status)) = outcome else { continue };
        x.iter_mut().for_each(|v| *v = wrapped(*v));
        let e = objective.eval(&x, None);
        let candidate = FhomEstimate {
            z,
            value: e.energy,
            cell_size: k,
            rho,
            penalty: kappa,
            mean_offset: e.offset,
            start,
            status,
            iterations,
        };
        // feasible candidates first, then lower energy
        let tolerance = rho + 0.1 * rho;
        let better = match &best {
            None => true,
            Some(b) => {
                let (cf, bf) = (candidate.mean_offset <= tolerance, b.mean_offset <= tolerance);
                (cf && !bf) || (cf == bf && candidate.value < b.value)
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    best.ok_or_else(|| last_error.unwrap_or_else(|| Error::domain("no start produced an estimate")))
}

/// Largest pairwise difference of [`fhom_estimate`] over `directions`
/// rotations of `r e_1`.
pub fn fhom_radial_check(
    r: f64,
    j1: f64,
    directions: usize,
    k: usize,
    rho: f64,
    settings: &FhomSettings,
) -> Result<(f64, Vec<FhomEstimate>)> {
    if directions < 3 {
        return Err(Error::domain(format!("need at least 3 directions, got {directions}")));
    }
    if r == 0.0 {
        let e = fhom_estimate([0.0, 0.0], j1, k, rho, settings)?;
        return Ok((0.0, vec![e]));
    }
    let mut out = Vec::with_capacity(directions);
    for m in 0..directions {
        let a = 2.0 * PI * m as f64 / directions as f64;
        out.push(fhom_estimate([r * a.cos(), r * a.sin()], j1, k, rho, settings)?);
    }
    let lo = out.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    let hi = out.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
    Ok((hi - lo, out))
}
