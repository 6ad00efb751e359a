//! Trigonometric identities and the two-variable limit behind the lower
//! bound, plus the discrete double-well/gradient bound itself.

use serde::{Deserialize, Serialize};

use crate::chirality::ChiralityField;
use crate::{Error, Result};

/// `4 sin^2 x - sin^2(2x) - 4 sin^4 x`, zero up to rounding.
pub fn quartic_identity_residual(x: f64) -> f64 {
    let s = x.sin();
    let d = (2.0 * x).sin();
    4.0 * s * s - d * d - 4.0 * s.powi(4)
}

/// `sin^2 x + sin^2 y - (1 - cos(x + y)) - [(sin x - sin y)^2 - (1 - cos(x - y))]`.
pub fn pair_identity_residual(x: f64, y: f64) -> f64 {
    let (sx, sy) = (x.sin(), y.sin());
    let left = sx * sx + sy * sy - (1.0 - (x + y).cos());
    let right = (sx - sy) * (sx - sy) - (1.0 - (x - y).cos());
    left - right
}

/// `(sin^2 x + sin^2 y - (1 - cos(x + y))) / (sin(x/2) - sin(y/2))^2`,
/// which tends to 2 as `(x, y) -> 0` with `x != y`.
pub fn limit_ratio(x: f64, y: f64) -> f64 {
    let (sx, sy) = (x.sin(), y.sin());
    let num = sx * sx + sy * sy - (1.0 - (x + y).cos());
    let den = (0.5 * x).sin() - (0.5 * y).sin();
    num / (den * den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiminfBound {
    /// `(sqrt(2 delta)/lambda) sum lambda ((z^i)^2 - 1)^2`
    pub well: f64,
    /// `(lambda/sqrt(2 delta)) (1 - gamma) sum lambda ((z^{i+1} - z^i)/lambda)^2`
    pub gradient: f64,
    pub gamma: f64,
}

impl LiminfBound {
    pub fn total(&self) -> f64 {
        self.well + self.gradient
    }
}

/// Right-hand side of the lower bound for `H^hf / (sqrt 2 lambda delta^{3/2})`,
/// sums over `i = 0..len-2`.
pub fn liminf_bound(field: &ChiralityField, gamma: f64) -> Result<LiminfBound> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::domain(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    let z = field.z();
    let lambda = field.spacing();
    let root = (2.0 * field.delta()).sqrt();
    let mut well = 0.0;
    let mut gradient = 0.0;
    for i in 0..z.len().saturating_sub(1) {
        let q = z[i] * z[i] - 1.0;
        well += lambda * q * q;
        let d = (z[i + 1] - z[i]) / lambda;
        gradient += lambda * d * d;
    }
    Ok(LiminfBound {
        well: root / lambda * well,
        gradient: lambda / root * (1.0 - gamma) * gradient,
        gamma,
    })
}

/// Outcome of one named check of the identity suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn check(name: &str, worst: f64, tolerance: f64) -> IdentityCheck {
    IdentityCheck {
        name: name.to_string(),
        worst,
        tolerance,
        passed: worst <= tolerance,
    }
}

/// Both trigonometric identities at `samples` angle pairs drawn from `rng`,
/// and the limit ratio along `x = y + 1e-4`, `|y| <= 1e-3`.
pub fn identity_suite(samples: usize, seed: u64) -> Vec<IdentityCheck> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pi = std::f64::consts::PI;
    let mut quartic = 0.0f64;
    let mut pair = 0.0f64;
    for _ in 0..samples {
        let x: f64 = rng.gen_range(-pi..pi);
        let y: f64 = rng.gen_range(-pi..pi);
        quartic = quartic.max(quartic_identity_residual(x).abs());
        pair = pair.max(pair_identity_residual(x, y).abs());
    }
    let mut limit = 0.0f64;
    for k in 0..=200 {
        let y = -1e-3 + 1e-5 * k as f64;
        limit = limit.max((limit_ratio(y + 1e-4, y) - 2.0).abs());
    }
    vec![
        check("4sin^2(x) - sin^2(2x) = 4sin^4(x)", quartic, 1e-12),
        check(
            "sin^2 x + sin^2 y - (1 - cos(x+y)) = (sin x - sin y)^2 - (1 - cos(x-y))",
            pair,
            1e-12,
        ),
        check("limit ratio -> 2 at x = y + 1e-4, |y| <= 1e-3", limit, 1e-2),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for c in identity_suite(100, 3) {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn ratio_moves_away_from_two_at_large_angles() {
        assert!((limit_ratio(1.2, 0.4) - 2.0).abs() > 0.1);
        assert!((limit_ratio(1e-4, -1e-4) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn bound_of_plateau_is_zero() {
        let field = ChiralityField::from_z(vec![1.0; 100], 0.01, 0.01).unwrap();
        let b = liminf_bound(&field, 0.05).unwrap();
        assert_eq!(b.total(), 0.0);
        assert!(liminf_bound(&field, 1.0).is_err());
    }
}
