//! Discrete Modica-Mortola functional, its interface constant and the
//! truncated `tanh` profile used to build recovery sequences.

use serde::{Deserialize, Serialize};

use crate::spin::{check_delta, lattice_count};
use crate::{Error, Result};

/// Double-well potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Well {
    /// `(1 - s^2)^2`
    Standard,
    /// `factor * (1 - s^2)^2`, `factor > 0`
    Scaled(f64),
    /// Identically zero. Not a double well; kept for degenerate checks.
    Zero,
}

impl Well {
    pub fn eval(&self, s: f64) -> f64 {
        let q = (1.0 - s * s) * (1.0 - s * s);
        match *self {
            Well::Standard => q,
            Well::Scaled(f) => f * q,
            Well::Zero => 0.0,
        }
    }

    /// True for a potential without the two strict wells.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Well::Zero)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Well::Scaled(f) if !(f > 0.0 && f.is_finite()) => {
                Err(Error::domain(format!("well factor must be positive, got {f}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MMConfig {
    pub alpha: f64,
    pub beta: f64,
    pub well: Well,
}

impl MMConfig {
    pub fn new(alpha: f64, beta: f64, well: Well) -> Result<Self> {
        let cfg = MMConfig { alpha, beta, well };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::domain(format!(
                "alpha and beta must be positive, got {} and {}",
                self.alpha, self.beta
            )));
        }
        self.well.validate()
    }
}

/// `alpha sum lambda ((z^{i+1} - z^i)/lambda)^2 + (1/beta) sum lambda W(z^i)`,
/// both sums over `i = 0..len-2`.
pub fn mm_energy(z: &[f64], cfg: &MMConfig, spacing: f64) -> f64 {
    if z.len() < 2 {
        return 0.0;
    }
    let mut gradient = 0.0;
    let mut well = 0.0;
    for i in 0..z.len() - 1 {
        let d = (z[i + 1] - z[i]) / spacing;
        gradient += spacing * d * d;
        well += spacing * cfg.well.eval(z[i]);
    }
    cfg.alpha * gradient + well / cfg.beta
}

/// `C_W = 2 int_{-1}^{1} sqrt(W(s)) ds`.
pub fn mm_limit_constant(well: Well) -> Result<f64> {
    well.validate()?;
    limit_constant_of(|s| well.eval(s))
}

/// [`mm_limit_constant`] for an arbitrary potential given as a closure.
pub fn limit_constant_of(w: impl Fn(f64) -> f64) -> Result<f64> {
    let root = |s: f64| {
        let v = w(s);
        if v < 0.0 {
            f64::NAN
        } else {
            v.sqrt()
        }
    };
    Ok(2.0 * adaptive_simpson(root, -1.0, 1.0, 1e-8)?)
}

const MAX_DEPTH: u32 = 50;

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let v = simpson_step(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Quadrature("integrand is not finite".into()))
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "no convergence on [{a}, {b}] at maximal depth"
        )));
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Odd `C^1` profile equal to `tanh` on `[0, R]`, a cubic on `(R, R + eps)`
/// and `1` beyond, with `R = atanh(1 - eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryProfile {
    pub epsilon: f64,
    pub cutoff: f64,
}

impl RecoveryProfile {
    /// `eps` in `(0, 0.25]` keeps the blending slope below 2.
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 0.25) {
            return Err(Error::domain(format!("epsilon must lie in (0, 0.25], got {epsilon}")));
        }
        Ok(RecoveryProfile {
            epsilon,
            cutoff: (1.0 - epsilon).atanh(),
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let s = t.abs();
        let v = if s <= self.cutoff {
            s.tanh()
        } else if s < self.cutoff + self.epsilon {
            self.blend(s).0
        } else {
            1.0
        };
        v.copysign(t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let s = t.abs();
        if s <= self.cutoff {
            let c = s.cosh();
            1.0 / (c * c)
        } else if s < self.cutoff + self.epsilon {
            self.blend(s).1
        } else {
            0.0
        }
    }

    // cubic Hermite from (R, 1 - eps, sech^2 R) to (R + eps, 1, 0)
    fn blend(&self, s: f64) -> (f64, f64) {
        let h = self.epsilon;
        let u = (s - self.cutoff) / h;
        let y0 = 1.0 - h;
        let m0 = h * (2.0 * h - h * h);
        let (h00, h10, h01) = (
            2.0 * u.powi(3) - 3.0 * u * u + 1.0,
            u.powi(3) - 2.0 * u * u + u,
            -2.0 * u.powi(3) + 3.0 * u * u,
        );
        let value = h00 * y0 + h10 * m0 + h01;
        let d00 = 6.0 * u * u - 6.0 * u;
        let d10 = 3.0 * u * u - 4.0 * u + 1.0;
        let d01 = -6.0 * u * u + 6.0 * u;
        let slope = (d00 * y0 + d10 * m0 + d01) / h;
        (value, slope)
    }

    /// `z^i = z_eps(sqrt(2 delta)/lambda * (lambda i - 1/2))` for
    /// `i = 0..[1/lambda]`: a transition of width `lambda/sqrt(2 delta)`
    /// centred at `1/2`.
    pub fn sample(&self, spacing: f64, delta: f64) -> Result<Vec<f64>> {
        check_delta(delta)?;
        let n = lattice_count(spacing)?;
        let scale = (2.0 * delta).sqrt() / spacing;
        Ok((0..n).map(|i| self.eval(scale * (spacing * i as f64 - 0.5))).collect())
    }
}
