//! Deterministic line-search descent shared by every minimization in the crate.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smooth objective with an analytic gradient.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Returns the value and overwrites `grad` with the gradient.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;

    fn value(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.value_grad(x, &mut g)
    }

    /// Symmetric positive definite tridiagonal metric used to precondition
    /// the gradient, if the objective has a natural one.
    fn metric(&self) -> Option<Tridiagonal> {
        None
    }

    /// `P(x)^{-1} g` for a symmetric positive definite approximation `P(x)`
    /// of the Hessian at `x`. Takes precedence over [`Objective::metric`] and
    /// seeds the quasi-Newton recursion.
    fn precondition(&self, _x: &[f64], _grad: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl Tridiagonal {
    /// `scale * (L + shift * I)` with `L` the path-graph Laplacian on `n` nodes.
    pub fn path_laplacian(n: usize, scale: f64, shift: f64) -> Self {
        let mut diag = vec![scale * (2.0 + shift); n];
        if n > 0 {
            diag[0] = scale * (1.0 + shift);
            diag[n - 1] = scale * (1.0 + shift);
        }
        if n == 1 {
            diag[0] = scale * shift.max(f64::MIN_POSITIVE);
        }
        Tridiagonal {
            diag,
            off: vec![-scale; n.saturating_sub(1)],
        }
    }

    /// Replaces the rows and columns of frozen coordinates by the identity.
    fn freeze(&mut self, frozen: &[bool]) {
        for (i, &f) in frozen.iter().enumerate() {
            if f {
                self.diag[i] = 1.0;
                if i > 0 {
                    self.off[i - 1] = 0.0;
                }
                if i < self.off.len() {
                    self.off[i] = 0.0;
                }
            }
        }
    }

    /// Thomas algorithm. `None` if a pivot is not positive.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0];
        if !(pivot > 0.0) {
            return None;
        }
        c[0] = if n > 1 { self.off[0] / pivot } else { 0.0 };
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.off[i - 1] * c[i - 1];
            if !(pivot > 0.0) {
                return None;
            }
            c[i] = if i + 1 < n { self.off[i] / pivot } else { 0.0 };
            d[i] = (rhs[i] - self.off[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Some(d)
    }
}

/// Search direction rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Plain negative gradient.
    Steepest,
    /// Negative gradient in the objective's preconditioner or tridiagonal
    /// metric; falls back to `Steepest` for objectives without either.
    Preconditioned,
    /// Limited-memory BFGS two-loop recursion with the given history length.
    Lbfgs { memory: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub max_iterations: usize,
    /// Stop once the sup norm of the gradient over free coordinates is at most this.
    pub gradient_tolerance: f64,
    pub initial_step: f64,
    /// Step shrink factor of the backtracking search, in `(0, 1)`.
    pub backtracking: f64,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    pub seed: u64,
    pub direction: Direction,
    pub record_trace: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            max_iterations: 1_000_000,
            gradient_tolerance: 1e-10,
            initial_step: 1.0,
            backtracking: 0.5,
            armijo: 1e-4,
            seed: 0,
            direction: Direction::Preconditioned,
            record_trace: false,
        }
    }
}

impl OptimizerSettings {
    /// Defaults with the gradient tolerance `1e-10 * lambda`.
    pub fn for_spacing(spacing: f64) -> Self {
        OptimizerSettings {
            gradient_tolerance: 1e-10 * spacing,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations > 0
            && self.gradient_tolerance > 0.0
            && self.initial_step > 0.0
            && self.backtracking > 0.0
            && self.backtracking < 1.0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && !matches!(self.direction, Direction::Lbfgs { memory: 0 });
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid optimizer settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIterations,
    /// The line search could not decrease the value any further (rounding floor).
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub status: Status,
    pub trace: Vec<TraceRow>,
}

fn sup_norm(g: &[f64], frozen: &[bool]) -> f64 {
    g.iter()
        .zip(frozen)
        .filter(|(_, f)| !**f)
        .fold(0.0, |m, (v, _)| m.max(v.abs()))
}

fn non_finite(iteration: usize, what: &str) -> Error {
    Error::Numerical {
        iteration,
        reason: format!("non-finite {what}"),
    }
}

const MAX_BACKTRACKS: usize = 80;

/// Backtracking descent from `start` with the coordinates marked in `frozen`
/// held fixed. Every accepted step satisfies the Armijo test, so the value
/// sequence is strictly decreasing.
pub fn minimize<O: Objective>(
    objective: &O,
    start: Vec<f64>,
    frozen: &[bool],
    settings: &OptimizerSettings,
) -> Result<Minimum> {
    settings.validate()?;
    let n = objective.dim();
    if start.len() != n || frozen.len() != n {
        return Err(Error::domain(format!(
            "dimension mismatch: objective {n}, start {}, mask {}",
            start.len(),
            frozen.len()
        )));
    }

    let metric = match settings.direction {
        Direction::Preconditioned => objective.metric().map(|mut m| {
            m.freeze(frozen);
            m
        }),
        _ => None,
    };
    let memory = match settings.direction {
        Direction::Lbfgs { memory } => memory,
        _ => 0,
    };
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::with_capacity(memory);

    let mut x = start;
    let mut grad = vec![0.0; n];
    let mut value = objective.value_grad(&x, &mut grad);
    mask(&mut grad, frozen);
    if !value.is_finite() {
        return Err(non_finite(0, "energy"));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(non_finite(0, "gradient"));
    }

    let mut trace = Vec::new();
    let mut grad_norm = sup_norm(&grad, frozen);
    if settings.record_trace {
        trace.push(TraceRow {
            iter: 0,
            energy: value,
            grad_norm,
            step: 0.0,
        });
    }

    let mut step = settings.initial_step;
    let mut trial = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];
    let mut status = Status::MaxIterations;
    let mut iterations = 0;

    while iterations < settings.max_iterations {
        if grad_norm <= settings.gradient_tolerance {
            status = Status::Converged;
            break;
        }

        let mut newton = false;
        let mut direction = if memory > 0 {
            two_loop(&grad, &history, |q| {
                let mut q = q.to_vec();
                mask(&mut q, frozen);
                objective.precondition(&x, &q)
            })
        } else if matches!(settings.direction, Direction::Preconditioned) {
            let mut g = grad.clone();
            mask(&mut g, frozen);
            match objective.precondition(&x, &g) {
                Some(d) => {
                    newton = true;
                    d
                }
                None => metric
                    .as_ref()
                    .and_then(|m| m.solve(&grad))
                    .unwrap_or_else(|| grad.clone()),
            }
        } else {
            grad.clone()
        };
        for d in direction.iter_mut() {
            *d = -*d;
        }
        mask(&mut direction, frozen);
        let mut slope = dot(&grad, &direction);
        if !(slope < 0.0) {
            // quasi-Newton direction lost descent: restart from the gradient
            history.clear();
            direction = grad.iter().map(|g| -g).collect();
            slope = -dot(&grad, &grad);
        }

        // quasi-Newton steps are naturally scaled once curvature pairs exist;
        // without them the first move is capped at `initial_step` per coordinate.
        // Steps from a per-point Hessian model always try `initial_step` first;
        // the other rules grow the last accepted step.
        let mut t = if memory > 0 {
            if history.is_empty() {
                let largest = direction.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                (settings.initial_step / largest).min(1.0)
            } else {
                1.0
            }
        } else if iterations == 0 || newton {
            settings.initial_step
        } else {
            step / settings.backtracking
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                trial[i] = x[i] + t * direction[i];
            }
            let v = objective.value_grad(&trial, &mut trial_grad);
            if v.is_finite() && v <= value + settings.armijo * t * slope && v < value {
                accepted = Some(v);
                break;
            }
            t *= settings.backtracking;
        }
        let Some(new_value) = accepted else {
            status = Status::Stalled;
            break;
        };
        mask(&mut trial_grad, frozen);
        if trial_grad.iter().any(|g| !g.is_finite()) {
            return Err(non_finite(iterations + 1, "gradient"));
        }

        if memory > 0 {
            let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-300 && sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
                if history.len() == memory {
                    history.remove(0);
                }
                history.push((s, y, 1.0 / sy));
            }
        }

        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        value = new_value;
        step = t;
        iterations += 1;
        grad_norm = sup_norm(&grad, frozen);
        if settings.record_trace {
            trace.push(TraceRow {
                iter: iterations,
                energy: value,
                grad_norm,
                step: t,
            });
        }
    }
    if status == Status::MaxIterations && grad_norm <= settings.gradient_tolerance {
        status = Status::Converged;
    }

    Ok(Minimum {
        x,
        value,
        iterations,
        grad_norm,
        status,
        trace,
    })
}

fn mask(v: &mut [f64], frozen: &[bool]) {
    for (x, &f) in v.iter_mut().zip(frozen) {
        if f {
            *x = 0.0;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `H g` for the implicit inverse-Hessian approximation, seeded with the
/// objective's preconditioner when `seed` provides one and with the usual
/// `s.y / y.y` scaling otherwise.
fn two_loop(
    grad: &[f64],
    history: &[(Vec<f64>, Vec<f64>, f64)],
    seed: impl Fn(&[f64]) -> Option<Vec<f64>>,
) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some(p) = seed(&q) {
        q = p;
    } else if let Some((s, y, _)) = history.last() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q
}
