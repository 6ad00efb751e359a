//! The diffuse-interface functional `(1/l) int (z^2 - 1)^2 + l int z'^2` on
//! `[0, 1]` and its minimizer with `z(0) = -1`, `z(1) = +1`.

use crate::minimize::{minimize, Minimum, Objective, OptimizerSettings, Status, Tridiagonal};
use crate::{Error, Result};

fn check_l(l: f64) -> Result<()> {
    if l > 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("l must be positive, got {l}")))
    }
}

/// Trapezoid rule for the double-well term and forward differences for the
/// gradient term, on samples at `j / (len - 1)`.
pub fn continuum_hhf(z: &[f64], l: f64) -> Result<f64> {
    check_l(l)?;
    if z.len() < 2 {
        return Err(Error::domain("need at least 2 samples"));
    }
    let mut g = vec![0.0; z.len()];
    Ok(ContinuumObjective::new(z.len(), l).value_grad(z, &mut g))
}

struct ContinuumObjective {
    n: usize,
    l: f64,
    h: f64,
}

impl ContinuumObjective {
    fn new(n: usize, l: f64) -> Self {
        ContinuumObjective {
            n,
            l,
            h: 1.0 / (n - 1) as f64,
        }
    }
}

impl Objective for ContinuumObjective {
    fn dim(&self) -> usize {
        self.n
    }

    fn value_grad(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let (l, h) = (self.l, self.h);
        let last = self.n - 1;
        let mut well = 0.0;
        let mut slope = 0.0;
        for (j, &v) in z.iter().enumerate() {
            let weight = if j == 0 || j == last { 0.5 * h } else { h };
            let q = v * v - 1.0;
            well += weight * q * q;
            grad[j] = weight * 4.0 * v * q / l;
        }
        for j in 0..last {
            let d = z[j + 1] - z[j];
            slope += d * d / h;
            grad[j] -= 2.0 * l * d / h;
            grad[j + 1] += 2.0 * l * d / h;
        }
        well / l + l * slope
    }

    /// `(2l/h) L + (8h/l) I`, the Hessian at `z = +-1`.
    fn metric(&self) -> Option<Tridiagonal> {
        let scale = 2.0 * self.l / self.h;
        Some(Tridiagonal::path_laplacian(
            self.n,
            scale,
            4.0 * self.h * self.h / (self.l * self.l),
        ))
    }
}

#[derive(Debug, Clone)]
pub struct ContinuumMin {
    pub z: Vec<f64>,
    pub energy: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub status: Status,
}

impl ContinuumMin {
    /// Sample positions `j / (len - 1)`.
    pub fn positions(&self) -> Vec<f64> {
        let h = 1.0 / (self.z.len() - 1) as f64;
        (0..self.z.len()).map(|j| h * j as f64).collect()
    }
}

/// Minimizes [`continuum_hhf`] over `samples` nodes with the endpoint values
/// clamped to `-1` and `+1`, starting from `tanh((x - 1/2)/l) / tanh(1/(2l))`.
pub fn continuum_min(l: f64, samples: usize, settings: &OptimizerSettings) -> Result<ContinuumMin> {
    check_l(l)?;
    if samples < 3 {
        return Err(Error::domain("need at least 3 samples"));
    }
    let h = 1.0 / (samples - 1) as f64;
    let norm = (0.5 / l).tanh();
    let start: Vec<f64> = (0..samples)
        .map(|j| ((h * j as f64 - 0.5) / l).tanh() / norm)
        .map(|v| v.clamp(-1.0, 1.0))
        .collect();
    let mut start = start;
    start[0] = -1.0;
    start[samples - 1] = 1.0;
    let mut frozen = vec![false; samples];
    frozen[0] = true;
    frozen[samples - 1] = true;
    let objective = ContinuumObjective::new(samples, l);
    let Minimum {
        x,
        value,
        iterations,
        grad_norm,
        status,
        ..
    } = minimize(&objective, start, &frozen, settings)?;
    Ok(ContinuumMin {
        z: x,
        energy: value,
        iterations,
        grad_norm,
        status,
    })
}

/// Default settings for [`continuum_min`]: gradient tolerance `1e-6 h`.
pub fn continuum_settings(samples: usize) -> OptimizerSettings {
    OptimizerSettings {
        gradient_tolerance: 1e-6 / (samples.max(2) - 1) as f64,
        ..OptimizerSettings::default()
    }
}
