//! The chirality order parameter and its inverse.
//!
//! `u -> theta^i = chi[u^i, u^{i+1}] arccos((u^i, u^{i+1}))`,
//! `w^i = sin(theta^i / 2)`, `z^i = sqrt(2/delta) w^i`. Helical ground states
//! near the transition map to `z = +-1`, aligned chains to `z = 0`. Cell `i`
//! covers `lambda * [i, i + 1)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::spin::{check_delta, cross, dot, IncrementField, Spin, SpinChain};
use crate::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-9;

/// `sign(v1 w2 - v2 w1)` with `sign(0) = -1`.
pub fn chi(v: Spin, w: Spin) -> Result<i8> {
    for s in [v, w] {
        let norm = s[0].hypot(s[1]);
        if !((norm - 1.0).abs() <= UNIT_TOLERANCE) {
            return Err(Error::domain(format!("chi needs unit vectors, got norm {norm}")));
        }
    }
    Ok(if cross(v, w) > 0.0 { 1 } else { -1 })
}

/// Oriented angle from `a` to `b` in `[-pi, pi)`.
///
/// Equal to `chi[a, b] * arccos((a, b))` for unit vectors; `atan2` keeps the
/// small angles accurate. Antipodal pairs get `-pi` and aligned pairs `0`.
pub(crate) fn bond_angle(a: Spin, b: Spin) -> f64 {
    let c = cross(a, b);
    let d = dot(a, b);
    if c == 0.0 {
        return if d >= 0.0 { 0.0 } else { -PI };
    }
    let t = c.atan2(d);
    if t >= PI {
        -PI
    } else {
        t
    }
}

/// Bond angles of a chain.
pub fn angles(chain: &SpinChain) -> IncrementField {
    let thetas = chain.spins().windows(2).map(|p| bond_angle(p[0], p[1])).collect();
    IncrementField::from_raw(thetas, chain.spacing())
}

/// Piecewise-constant order parameter on lattice cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiralityField {
    z: Vec<f64>,
    w: Vec<f64>,
    delta: f64,
    spacing: f64,
}

impl ChiralityField {
    /// Builds the field from `z` values; `w = sqrt(delta/2) z` must satisfy `|w| <= 1`.
    pub fn from_z(z: Vec<f64>, delta: f64, spacing: f64) -> Result<Self> {
        check_delta(delta)?;
        let scale = (delta / 2.0).sqrt();
        let w: Vec<f64> = z.iter().map(|v| scale * v).collect();
        if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
            return Err(Error::domain(format!("|w| = {} > 1 at cell {i}", v.abs())));
        }
        Ok(ChiralityField { z, w, delta, spacing })
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Left endpoints `lambda * i` of the cells.
    pub fn cell_positions(&self) -> Vec<f64> {
        (0..self.z.len()).map(|i| self.spacing * i as f64).collect()
    }
}

/// `T_n(u)`: `w = sin(theta/2)`, `z = sqrt(2/delta) w`.
pub fn order_parameter(chain: &SpinChain, delta: f64) -> Result<ChiralityField> {
    check_delta(delta)?;
    Ok(field_from_increments(&angles(chain), delta))
}

pub(crate) fn field_from_increments(incr: &IncrementField, delta: f64) -> ChiralityField {
    let scale = (2.0 / delta).sqrt();
    let w: Vec<f64> = incr.thetas().iter().map(|t| (0.5 * t).sin()).collect();
    let z = w.iter().map(|v| scale * v).collect();
    ChiralityField {
        z,
        w,
        delta,
        spacing: incr.spacing(),
    }
}

/// Spins with increments `2 asin(w^i)`, starting at `base_angle`.
pub fn reconstruct(field: &ChiralityField, base_angle: f64) -> Result<SpinChain> {
    let incr = increments_from_field(field)?;
    Ok(SpinChain::from_increments(base_angle, &incr))
}

pub(crate) fn increments_from_field(field: &ChiralityField) -> Result<IncrementField> {
    if let Some((i, v)) = field.w.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
        return Err(Error::domain(format!("|w| = {} > 1 at cell {i}", v.abs())));
    }
    let thetas = field.w.iter().map(|v| 2.0 * v.asin()).collect();
    Ok(IncrementField::from_raw(thetas, field.spacing))
}

/// Number of sign changes between plateaus `|z| >= threshold`; cells below
/// the threshold are skipped. A jump is counted at the first plateau cell
/// whose sign differs from the last confirmed plateau sign.
pub fn jump_count(field: &ChiralityField, threshold: f64) -> usize {
    plateau_changes(field.z(), threshold).len()
}

/// Indices of the cells where a new plateau sign is confirmed.
fn plateau_changes(z: &[f64], threshold: f64) -> Vec<usize> {
    let mut last: Option<bool> = None;
    let mut changes = Vec::new();
    for (i, &v) in z.iter().enumerate() {
        if v.abs() < threshold {
            continue;
        }
        let positive = v > 0.0;
        if let Some(prev) = last {
            if prev != positive {
                changes.push(i);
            }
        }
        last = Some(positive);
    }
    changes
}

/// Least-squares `tanh` fit of a single transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileFit {
    pub center: f64,
    pub width: f64,
    /// Root-mean-square misfit.
    pub residual: f64,
}

/// Fits `z(x) ~ s tanh((x - x0)/xi)` over the cell left endpoints, where
/// `s = +-1` is the orientation of the single jump.
pub fn profile_fit(field: &ChiralityField) -> Result<ProfileFit> {
    let jumps = jump_count(field, 0.5);
    if jumps != 1 {
        return Err(Error::precondition(format!(
            "profile fit needs exactly one jump, found {jumps}"
        )));
    }
    fit_tanh(&field.cell_positions(), field.z())
}

/// `tanh` fit of arbitrary samples `(xs, zs)` containing one transition.
///
/// The search starts at the zero crossing with the half distance between the
/// `-+tanh(1)` crossings as width, scans a coarse grid around it and then
/// refines with a shrinking compass search.
pub fn fit_tanh(xs: &[f64], zs: &[f64]) -> Result<ProfileFit> {
    if xs.len() != zs.len() || xs.len() < 3 {
        return Err(Error::domain("fit needs at least 3 paired samples"));
    }
    let changes = plateau_changes(zs, 0.5);
    if changes.len() != 1 {
        return Err(Error::precondition(format!(
            "profile fit needs exactly one jump, found {}",
            changes.len()
        )));
    }
    let orientation = if zs[changes[0]] > 0.0 { 1.0 } else { -1.0 };
    let oriented: Vec<f64> = zs.iter().map(|z| orientation * z).collect();

    let spacing = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    let x0 = crossing(xs, &oriented, 0.0).unwrap_or(xs[changes[0]]);
    let lo = crossing(xs, &oriented, -1f64.tanh());
    let hi = crossing(xs, &oriented, 1f64.tanh());
    let xi0 = match (lo, hi) {
        (Some(a), Some(b)) if b > a => 0.5 * (b - a),
        _ => spacing,
    }
    .max(0.25 * spacing);

    let misfit = |center: f64, width: f64| -> f64 {
        let ss: f64 = xs
            .iter()
            .zip(&oriented)
            .map(|(x, z)| {
                let r = z - ((x - center) / width).tanh();
                r * r
            })
            .sum();
        ss / xs.len() as f64
    };

    // coarse grid: center within +-2 xi0, width within xi0 * [1/4, 4]
    let steps = 40;
    let mut best = (x0, xi0, misfit(x0, xi0));
    for a in 0..=steps {
        let c = x0 + xi0 * (4.0 * a as f64 / steps as f64 - 2.0);
        for b in 0..=steps {
            let w = xi0 * 2f64.powf(4.0 * b as f64 / steps as f64 - 2.0);
            let m = misfit(c, w);
            if m < best.2 {
                best = (c, w, m);
            }
        }
    }

    // compass search in (center, log width)
    let (mut c, mut logw, mut m) = (best.0, best.1.ln(), best.2);
    let mut dc = xi0 * 0.1;
    let mut dl = 0.1;
    while dc > 1e-13 * xi0.max(1e-300) || dl > 1e-13 {
        let mut improved = false;
        for (sc, sl) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let (tc, tl) = (c + sc * dc, logw + sl * dl);
            let tm = misfit(tc, tl.exp());
            if tm < m {
                c = tc;
                logw = tl;
                m = tm;
                improved = true;
            }
        }
        if !improved {
            dc *= 0.5;
            dl *= 0.5;
        }
    }
    Ok(ProfileFit {
        center: c,
        width: logw.exp(),
        residual: m.sqrt(),
    })
}

/// First upward crossing of `level` by linear interpolation.
fn crossing(xs: &[f64], zs: &[f64], level: f64) -> Option<f64> {
    zs.windows(2).enumerate().find_map(|(i, p)| {
        if p[0] < level && p[1] >= level {
            let t = (level - p[0]) / (p[1] - p[0]);
            Some(xs[i] + t * (xs[i + 1] - xs[i]))
        } else {
            None
        }
    })
}
