//! Lattice energies of the F-AF chain on `I = (0, 1)`.
//!
//! A chain with spacing `lambda` carries `[1/lambda] + 1` unit spins
//! `u^0 .. u^N` (`N = [1/lambda]`) and `N` oriented bond angles. All bulk sums
//! run over `i = 0 ..= N - 2`, so every energy has `N - 1` terms of weight
//! `lambda`, i.e. total weight `1 - c * lambda` with `c` from [`c_factor`].
//! The next-nearest-neighbour coupling `J2` is fixed to 1.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sum::{compensated, Accumulator};
use crate::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-12;

pub type Spin = [f64; 2];

#[inline]
pub(crate) fn dot(a: Spin, b: Spin) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn cross(a: Spin, b: Spin) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Maps an angle into `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        -PI
    } else {
        y
    }
}

fn check_spacing(spacing: f64) -> Result<()> {
    if !(spacing.is_finite() && spacing > 0.0 && spacing <= 1.0) {
        return Err(Error::domain(format!(
            "lattice spacing must lie in (0, 1], got {spacing}"
        )));
    }
    Ok(())
}

/// `[1/lambda]`, snapping reciprocals that are integers up to rounding.
pub fn lattice_count(spacing: f64) -> Result<usize> {
    check_spacing(spacing)?;
    let r = 1.0 / spacing;
    let nearest = r.round();
    let n = if (r - nearest).abs() <= 1e-9 * r {
        nearest
    } else {
        r.floor()
    };
    Ok(n as usize)
}

/// `c = 1/lambda - [1/lambda] + 1`, so that the `[1/lambda] - 1` bulk terms
/// of weight `lambda` add up to `1 - c * lambda`.
pub fn c_factor(spacing: f64) -> Result<f64> {
    let n = lattice_count(spacing)?;
    let r = 1.0 / spacing;
    let frac = r - n as f64;
    // snapped reciprocals have no fractional part
    let frac = if frac.abs() <= 1e-9 * r { 0.0 } else { frac };
    Ok(frac + 1.0)
}

/// Total weight `sum_{i=0}^{[1/lambda]-2} lambda = 1 - c * lambda`.
pub fn bulk_weight(spacing: f64) -> Result<f64> {
    let n = lattice_count(spacing)?;
    Ok(n.saturating_sub(1) as f64 * spacing)
}

/// Coupling constants. `J2 = 1` throughout; `delta` is set in the
/// near-transition mode where `J1 = 4 (1 - delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub j1: f64,
    pub delta: Option<f64>,
    pub spacing: f64,
}

impl ModelParams {
    pub fn new(j1: f64, spacing: f64) -> Result<Self> {
        if !(j1.is_finite() && j1 >= 0.0) {
            return Err(Error::domain(format!("J1 must be finite and >= 0, got {j1}")));
        }
        check_spacing(spacing)?;
        Ok(ModelParams {
            j1,
            delta: None,
            spacing,
        })
    }

    /// Helimagnet/ferromagnet transition mode, `J1 = 4 (1 - delta)`.
    pub fn near_transition(delta: f64, spacing: f64) -> Result<Self> {
        check_delta(delta)?;
        check_spacing(spacing)?;
        Ok(ModelParams {
            j1: 4.0 * (1.0 - delta),
            delta: Some(delta),
            spacing,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j1.is_finite() && self.j1 >= 0.0) {
            return Err(Error::domain(format!("J1 must be finite and >= 0, got {}", self.j1)));
        }
        check_spacing(self.spacing)?;
        if let Some(delta) = self.delta {
            check_delta(delta)?;
            if (self.j1 - 4.0 * (1.0 - delta)).abs() > 1e-12 {
                return Err(Error::domain(format!(
                    "J1 = {} inconsistent with delta = {delta}",
                    self.j1
                )));
            }
        }
        Ok(())
    }

    /// Helix angle `phi = arccos(J1/4)`; zero on the ferromagnetic side.
    ///
    /// With `delta` set this is evaluated as `2 asin(sqrt(delta/2))`, which
    /// keeps full relative accuracy for tiny `delta`.
    pub fn helix_angle(&self) -> f64 {
        match self.delta {
            Some(delta) => helix_angle_near_transition(delta),
            None if self.j1 >= 4.0 => 0.0,
            None => (self.j1 / 4.0).acos(),
        }
    }
}

/// `arccos(1 - delta)` written as `2 asin(sqrt(delta/2))`.
pub fn helix_angle_near_transition(delta: f64) -> f64 {
    2.0 * (delta / 2.0).sqrt().asin()
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Unit spins on the lattice `lambda * {0, .., [1/lambda]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinChain {
    spins: Vec<Spin>,
    spacing: f64,
}

impl SpinChain {
    pub fn new(spins: Vec<Spin>, spacing: f64) -> Result<Self> {
        let n = lattice_count(spacing)?;
        if spins.len() != n + 1 {
            return Err(Error::domain(format!(
                "spacing {spacing} needs {} spins, got {}",
                n + 1,
                spins.len()
            )));
        }
        for (i, s) in spins.iter().enumerate() {
            let norm = s[0].hypot(s[1]);
            if !((norm - 1.0).abs() <= UNIT_TOLERANCE) {
                return Err(Error::domain(format!("spin {i} has norm {norm}")));
            }
        }
        Ok(SpinChain { spins, spacing })
    }

    /// Spins `u^i = (cos a_i, sin a_i)` from absolute angles.
    pub fn from_angles(angles: &[f64], spacing: f64) -> Result<Self> {
        let spins = angles.iter().map(|a| [a.cos(), a.sin()]).collect();
        Self::new(spins, spacing)
    }

    /// Rebuilds the chain whose `i`-th bond turns by `increments[i]`,
    /// starting from the direction `base_angle`.
    pub fn from_increments(base_angle: f64, increments: &IncrementField) -> Self {
        let mut angle = wrap_angle(base_angle);
        let mut spins = Vec::with_capacity(increments.len() + 1);
        spins.push([angle.cos(), angle.sin()]);
        for &t in increments.thetas() {
            angle = wrap_angle(angle + t);
            spins.push([angle.cos(), angle.sin()]);
        }
        SpinChain {
            spins,
            spacing: increments.spacing(),
        }
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    /// Global planar rotation by `angle`.
    pub fn rotate(&self, angle: f64) -> SpinChain {
        let (s, c) = angle.sin_cos();
        let spins = self
            .spins
            .iter()
            .map(|u| [c * u[0] - s * u[1], s * u[0] + c * u[1]])
            .collect();
        SpinChain {
            spins,
            spacing: self.spacing,
        }
    }

    /// Complex conjugation of every spin; swaps the two chiralities.
    pub fn reflect(&self) -> SpinChain {
        let spins = self.spins.iter().map(|u| [u[0], -u[1]]).collect();
        SpinChain {
            spins,
            spacing: self.spacing,
        }
    }

    /// Random chain obeying the boundary condition: increments uniform in
    /// `[-pi, pi)` with the last one set to `+-` the first.
    pub fn random_periodic(spacing: f64, seed: u64) -> Result<Self> {
        let n = lattice_count(spacing)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut thetas: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
        if n >= 2 {
            let flip: bool = rng.gen();
            thetas[n - 1] = if flip { wrap_angle(-thetas[0]) } else { thetas[0] };
        }
        let base = rng.gen_range(-PI..PI);
        let incr = IncrementField::new(thetas, spacing)?;
        Ok(SpinChain::from_increments(base, &incr))
    }

    fn require_bulk(&self) -> Result<usize> {
        if self.spins.len() < 3 {
            return Err(Error::domain(format!(
                "energies need at least 3 spins, chain has {}",
                self.spins.len()
            )));
        }
        Ok(self.spins.len() - 1)
    }
}

/// Oriented bond angles `theta^i in [-pi, pi)`, one per lattice cell.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementField {
    thetas: Vec<f64>,
    spacing: f64,
}

impl IncrementField {
    pub fn new(thetas: Vec<f64>, spacing: f64) -> Result<Self> {
        let n = lattice_count(spacing)?;
        if thetas.len() != n {
            return Err(Error::domain(format!(
                "spacing {spacing} needs {n} increments, got {}",
                thetas.len()
            )));
        }
        if let Some((i, t)) = thetas.iter().enumerate().find(|(_, t)| !(**t >= -PI && **t < PI)) {
            return Err(Error::domain(format!("increment {i} = {t} outside [-pi, pi)")));
        }
        Ok(IncrementField { thetas, spacing })
    }

    /// Constant field `theta^i = value`.
    pub fn constant(value: f64, spacing: f64) -> Result<Self> {
        let n = lattice_count(spacing)?;
        Self::new(vec![wrap_angle(value); n], spacing)
    }

    /// Increments drawn uniformly from `[-2 sqrt(2 delta), 2 sqrt(2 delta)]`.
    pub fn random(spacing: f64, delta: f64, seed: u64) -> Result<Self> {
        check_delta(delta)?;
        let n = lattice_count(spacing)?;
        let half = (2.0 * (2.0 * delta).sqrt()).min(PI - 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let thetas = (0..n).map(|_| rng.gen_range(-half..=half)).collect();
        Self::new(thetas, spacing)
    }

    pub(crate) fn from_raw(thetas: Vec<f64>, spacing: f64) -> Self {
        IncrementField {
            thetas: thetas.into_iter().map(wrap_angle).collect(),
            spacing,
        }
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }
}

fn check_params_for(chain: &SpinChain, params: &ModelParams) -> Result<()> {
    params.validate()?;
    let rel = (chain.spacing - params.spacing).abs() / chain.spacing;
    if rel > 1e-12 {
        return Err(Error::domain(format!(
            "chain spacing {} differs from parameter spacing {}",
            chain.spacing, params.spacing
        )));
    }
    Ok(())
}

/// `E = -J1 sum lambda (u^i, u^{i+1}) + sum lambda (u^i, u^{i+2})`.
pub fn energy_e(chain: &SpinChain, params: &ModelParams) -> Result<f64> {
    check_params_for(chain, params)?;
    nn_nnn_energy(chain, params.j1)
}

fn nn_nnn_energy(chain: &SpinChain, j1: f64) -> Result<f64> {
    let n = chain.require_bulk()?;
    let lambda = chain.spacing;
    let u = &chain.spins;
    let mut nn = Accumulator::default();
    let mut nnn = Accumulator::default();
    for i in 0..=n - 2 {
        nn.add(lambda * dot(u[i], u[i + 1]));
        nnn.add(lambda * dot(u[i], u[i + 2]));
    }
    Ok(-j1 * nn.total() + nnn.total())
}

/// `H = 1/2 sum lambda |u^{i+2} - (J1/2) u^{i+1} + u^i|^2 >= 0`.
pub fn energy_h(chain: &SpinChain, params: &ModelParams) -> Result<f64> {
    check_params_for(chain, params)?;
    let n = chain.require_bulk()?;
    let lambda = chain.spacing;
    let u = &chain.spins;
    let half_j1 = params.j1 / 2.0;
    Ok(0.5
        * compensated((0..=n - 2).map(|i| {
            let rx = u[i + 2][0] - half_j1 * u[i + 1][0] + u[i][0];
            let ry = u[i + 2][1] - half_j1 * u[i + 1][1] + u[i][1];
            lambda * (rx * rx + ry * ry)
        })))
}

/// `H^hf = 1/2 sum lambda |u^{i+2} - 2 (1 - delta) u^{i+1} + u^i|^2`.
pub fn energy_hhf(chain: &SpinChain, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let n = chain.require_bulk()?;
    let lambda = chain.spacing;
    let u = &chain.spins;
    Ok(0.5
        * compensated((0..=n - 2).map(|i| {
            // second difference plus 2 delta u^{i+1}: no O(1) cancellation
            let rx = (u[i + 2][0] - 2.0 * u[i + 1][0] + u[i][0]) + 2.0 * delta * u[i + 1][0];
            let ry = (u[i + 2][1] - 2.0 * u[i + 1][1] + u[i][1]) + 2.0 * delta * u[i + 1][1];
            lambda * (rx * rx + ry * ry)
        })))
}

/// `E^hf`, the energy `E` at `J1 = 4 (1 - delta)`.
pub fn energy_ehf(chain: &SpinChain, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    nn_nnn_energy(chain, 4.0 * (1.0 - delta))
}

/// `3 - 4 delta + 2 delta^2 = 1 + J1^2/8` at `J1 = 4 (1 - delta)`.
pub fn ehf_offset(delta: f64) -> f64 {
    3.0 - 4.0 * delta + 2.0 * delta * delta
}

/// `H^hf` evaluated on bond angles.
///
/// Each bond pair contributes
/// `(2 delta - 2 s_i - 2 s_{i+1})^2 + (sin theta^{i+1} - sin theta^i)^2`
/// with `s = sin^2(theta/2)`, which equals
/// `2 + 4(1-delta)^2 - 4(1-delta)(cos theta^i + cos theta^{i+1}) + 2 cos(theta^i + theta^{i+1})`
/// without cancelling O(1) terms.
pub fn reduced_hhf(incr: &IncrementField, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if incr.len() < 2 {
        return Err(Error::domain(format!("need at least 2 increments, got {}", incr.len())));
    }
    Ok(hhf_terms(incr.thetas(), incr.spacing(), delta))
}

pub(crate) fn hhf_terms(thetas: &[f64], lambda: f64, delta: f64) -> f64 {
    let mut acc = Accumulator::default();
    let mut prev = bond_trig(thetas[0]);
    for &t in &thetas[1..] {
        let next = bond_trig(t);
        let a = 2.0 * delta - 2.0 * prev.half_sin_sq - 2.0 * next.half_sin_sq;
        let b = next.sin - prev.sin;
        acc.add(lambda * (a * a + b * b));
        prev = next;
    }
    0.5 * acc.total()
}

#[derive(Clone, Copy)]
pub(crate) struct BondTrig {
    pub sin: f64,
    pub cos: f64,
    /// `sin^2(theta/2) = (1 - cos theta)/2`
    pub half_sin_sq: f64,
}

#[inline]
pub(crate) fn bond_trig(theta: f64) -> BondTrig {
    let (sin, cos) = theta.sin_cos();
    let h = (0.5 * theta).sin();
    BondTrig {
        sin,
        cos,
        half_sin_sq: h * h,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chirality {
    CounterClockwise,
    Clockwise,
}

impl Chirality {
    pub fn sign(self) -> f64 {
        match self {
            Chirality::CounterClockwise => 1.0,
            Chirality::Clockwise => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Helical,
    /// `J1 >= 4`: all spins aligned.
    Ferromagnetic,
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub chain: SpinChain,
    pub angle: f64,
    pub phase: Phase,
}

/// The helix `u^i = (cos(base + s phi i), sin(base + s phi i))`,
/// `phi = arccos(J1/4)`, or the aligned state when `J1 >= 4`.
pub fn ground_state(params: &ModelParams, chirality: Chirality, base_angle: f64) -> Result<GroundState> {
    params.validate()?;
    if params.j1 <= 0.0 {
        return Err(Error::domain("ground states need J1 > 0"));
    }
    let phase = if params.j1 >= 4.0 {
        Phase::Ferromagnetic
    } else {
        Phase::Helical
    };
    let angle = chirality.sign() * params.helix_angle();
    let incr = IncrementField::constant(angle, params.spacing)?;
    Ok(GroundState {
        chain: SpinChain::from_increments(base_angle, &incr),
        angle,
        phase,
    })
}

/// `min E = -(1 + J1^2/8)(1 - c lambda)` for `J1 <= 4`, `-(J1 - 1)(1 - c lambda)` above.
pub fn min_energy_analytic(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    if params.j1 <= 0.0 {
        return Err(Error::domain("J1 must be > 0"));
    }
    let weight = bulk_weight(params.spacing)?;
    let j1 = params.j1;
    Ok(if j1 <= 4.0 {
        -(1.0 + j1 * j1 / 8.0) * weight
    } else {
        -(j1 - 1.0) * weight
    })
}

/// `(u^1, u^0) = (u^N, u^{N-1})` up to `tol`.
pub fn boundary_ok(chain: &SpinChain, tol: f64) -> bool {
    let u = &chain.spins;
    let n = u.len();
    if n < 2 {
        return true;
    }
    (dot(u[1], u[0]) - dot(u[n - 1], u[n - 2])).abs() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn c_factor_examples() {
        assert_eq!(c_factor(0.5).unwrap(), 1.0);
        assert_eq!(c_factor(1e-3).unwrap(), 1.0);
        assert!(close(c_factor(0.4).unwrap(), 1.5, 1e-15));
        assert!(c_factor(0.0).is_err());
        assert!(c_factor(-0.1).is_err());
        assert!(c_factor(1.5).is_err());
    }

    #[test]
    fn c_factor_matches_bulk_weight() {
        for &l in &[0.5, 0.4, 0.3, 1.0 / 3.0, 1e-3, 0.0123, 7e-5] {
            let c = c_factor(l).unwrap();
            assert!((1.0..2.0).contains(&c), "{l}: {c}");
            assert!(close(bulk_weight(l).unwrap(), 1.0 - c * l, 1e-14), "{l}");
        }
    }

    #[test]
    fn three_spin_hand_values() {
        let chain = SpinChain::new(vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]], 0.5).unwrap();
        let p = ModelParams::new(2.0, 0.5).unwrap();
        assert!(close(energy_e(&chain, &p).unwrap(), -0.5, 1e-15));
        assert!(close(energy_h(&chain, &p).unwrap(), 0.25, 1e-15));
    }

    #[test]
    fn short_chains_rejected() {
        let chain = SpinChain::new(vec![[1.0, 0.0], [0.0, 1.0]], 1.0).unwrap();
        let p = ModelParams::new(2.0, 1.0).unwrap();
        assert!(matches!(energy_e(&chain, &p), Err(Error::Domain(_))));
        assert!(matches!(energy_h(&chain, &p), Err(Error::Domain(_))));
        assert!(energy_hhf(&chain, 0.1).is_err());
    }

    #[test]
    fn chain_invariants_enforced() {
        assert!(SpinChain::new(vec![[1.0, 0.0]; 4], 0.4).is_err());
        assert!(SpinChain::new(vec![[1.0, 0.1], [1.0, 0.0], [1.0, 0.0]], 0.5).is_err());
        assert!(IncrementField::new(vec![PI, 0.0], 0.5).is_err());
        assert!(IncrementField::new(vec![-PI, 0.0], 0.5).is_ok());
    }

    #[test]
    fn helix_scalar_products() {
        let p = ModelParams::new(2.0, 1e-2).unwrap();
        let gs = ground_state(&p, Chirality::CounterClockwise, 0.3).unwrap();
        assert_eq!(gs.phase, Phase::Helical);
        assert!(close(gs.angle, PI / 3.0, 1e-15));
        let u = gs.chain.spins();
        for i in 0..u.len() - 2 {
            assert!(close(dot(u[i], u[i + 1]), 0.5, 1e-12));
            assert!(close(dot(u[i], u[i + 2]), -0.5, 1e-12));
        }
        assert!(close(energy_h(&gs.chain, &p).unwrap(), 0.0, 1e-14));
    }

    #[test]
    fn j1_four_is_constant_chain() {
        let p = ModelParams::new(4.0, 0.1).unwrap();
        let gs = ground_state(&p, Chirality::Clockwise, 0.0).unwrap();
        assert_eq!(gs.angle, 0.0);
        assert!(gs.chain.spins().iter().all(|s| *s == [1.0, 0.0]));
        assert_eq!(energy_h(&gs.chain, &p).unwrap(), 0.0);
    }

    #[test]
    fn above_four_routes_to_ferromagnet() {
        let p = ModelParams::new(5.0, 1e-3).unwrap();
        let gs = ground_state(&p, Chirality::CounterClockwise, 1.0).unwrap();
        assert_eq!(gs.phase, Phase::Ferromagnetic);
        assert!(close(energy_e(&gs.chain, &p).unwrap(), -3.996, 1e-12));
        assert!(close(min_energy_analytic(&p).unwrap(), -3.996, 1e-12));
        assert!(ground_state(&ModelParams::new(0.0, 0.1).unwrap(), Chirality::Clockwise, 0.0).is_err());
    }

    #[test]
    fn analytic_minimum_values() {
        let p = ModelParams::new(2.0, 0.5).unwrap();
        assert!(close(min_energy_analytic(&p).unwrap(), -0.75, 1e-15));
        let p = ModelParams::new(4.0, 1e-6).unwrap();
        assert!(close(min_energy_analytic(&p).unwrap(), -3.0, 1e-5));
    }

    #[test]
    fn near_transition_ground_state_zeroes_hhf() {
        let p = ModelParams::near_transition(0.02, 1e-3).unwrap();
        let gs = ground_state(&p, Chirality::Clockwise, 0.0).unwrap();
        assert!(energy_hhf(&gs.chain, 0.02).unwrap() < 1e-20);
        let incr = IncrementField::constant(gs.angle, 1e-3).unwrap();
        assert!(reduced_hhf(&incr, 0.02).unwrap() < 1e-20);
        assert!(close(gs.angle.cos(), 1.0 - 0.02, 1e-15));
    }

    #[test]
    fn constant_chain_hhf() {
        let delta = 0.01;
        let incr = IncrementField::constant(0.0, 1e-3).unwrap();
        let chain = SpinChain::from_increments(0.7, &incr);
        let expected = 2.0 * delta * delta * 0.999;
        assert!(close(energy_hhf(&chain, delta).unwrap(), expected, 1e-15));
        assert!(close(reduced_hhf(&incr, delta).unwrap(), expected, 1e-15));
    }

    #[test]
    fn delta_domain() {
        let incr = IncrementField::constant(0.0, 0.1).unwrap();
        assert!(reduced_hhf(&incr, 0.0).is_err());
        assert!(reduced_hhf(&incr, 1.0).is_err());
        assert!(ModelParams::near_transition(1.2, 0.1).is_err());
        let short = IncrementField::new(vec![0.1], 1.0).unwrap();
        assert!(reduced_hhf(&short, 0.1).is_err());
    }

    #[test]
    fn params_consistency() {
        let mut p = ModelParams::near_transition(0.1, 0.1).unwrap();
        assert!(p.validate().is_ok());
        p.j1 += 1e-9;
        assert!(p.validate().is_err());
    }

    #[test]
    fn boundary_condition_examples() {
        let p = ModelParams::new(3.0, 0.05).unwrap();
        let gs = ground_state(&p, Chirality::CounterClockwise, 0.0).unwrap();
        assert!(boundary_ok(&gs.chain, 1e-12));

        let phi = 0.4;
        let mut thetas = vec![0.1; 20];
        thetas[0] = -phi;
        thetas[19] = phi;
        let chain = SpinChain::from_increments(0.0, &IncrementField::new(thetas.clone(), 0.05).unwrap());
        assert!(boundary_ok(&chain, 1e-12));

        thetas[0] = PI / 3.0;
        thetas[19] = PI / 4.0;
        let chain = SpinChain::from_increments(0.0, &IncrementField::new(thetas, 0.05).unwrap());
        assert!(!boundary_ok(&chain, 1e-9));
    }

    #[test]
    fn rotate_by_zero_is_identity() {
        let chain = SpinChain::random_periodic(0.05, 3).unwrap();
        assert_eq!(chain.rotate(0.0), chain);
    }

    #[test]
    fn wrap_angle_range() {
        for &x in &[-PI, PI, 3.0 * PI, -7.5, 0.0, 1e-300, 2.0 * PI - 1e-15] {
            let y = wrap_angle(x);
            assert!((-PI..PI).contains(&y), "{x} -> {y}");
            assert!(((x - y) / (2.0 * PI) - ((x - y) / (2.0 * PI)).round()).abs() < 1e-12);
        }
    }
}
