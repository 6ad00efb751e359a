//! Chirality-transition energies along sequences `(lambda, delta)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chirality::{field_from_increments, jump_count, profile_fit, ChiralityField, ProfileFit};
use crate::minimize::{descend, Clamp, Direction, OptimizerSettings, Status, TraceRow};
use crate::spin::{check_delta, lattice_count, IncrementField, ModelParams, SpinChain};
use crate::{Error, Result};

/// `l = lambda / sqrt(2 delta)`.
pub fn ratio(spacing: f64, delta: f64) -> f64 {
    spacing / (2.0 * delta).sqrt()
}

/// Energy unit of a transition, `sqrt 2 lambda delta^{3/2}`.
pub fn energy_unit(spacing: f64, delta: f64) -> f64 {
    2f64.sqrt() * spacing * delta.powf(1.5)
}

pub const ZERO_BELOW: f64 = 0.05;
pub const INFINITE_ABOVE: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    LZero,
    LFinite { l: f64 },
    LInfinite,
}

impl Regime {
    /// `< 0.05` zero, `<= 20` finite, above infinite.
    pub fn classify(ratio: f64) -> Regime {
        if ratio < ZERO_BELOW {
            Regime::LZero
        } else if ratio <= INFINITE_ABOVE {
            Regime::LFinite { l: ratio }
        } else {
            Regime::LInfinite
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::LZero => "l_zero",
            Regime::LFinite { .. } => "l_finite",
            Regime::LInfinite => "l_infinite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingEntry {
    pub lambda: f64,
    pub delta: f64,
    pub ratio: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalingSequence {
    entries: Vec<ScalingEntry>,
}

impl ScalingSequence {
    pub fn new(pairs: &[(f64, f64)]) -> Result<Self> {
        let mut entries = Vec::with_capacity(pairs.len());
        for &(lambda, delta) in pairs {
            if !(lambda > 0.0 && lambda < 1.0) {
                return Err(Error::domain(format!("lambda must lie in (0, 1), got {lambda}")));
            }
            check_delta(delta)?;
            let r = ratio(lambda, delta);
            entries.push(ScalingEntry {
                lambda,
                delta,
                ratio: r,
                regime: Regime::classify(r),
            });
        }
        Ok(ScalingSequence { entries })
    }

    pub fn entries(&self) -> &[ScalingEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].ratio <= w[1].ratio)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransitionSettings {
    pub max_iterations: usize,
    /// Gradient tolerance in units of `lambda delta^{3/2}`.
    pub relative_tolerance: f64,
    pub direction: Direction,
    /// Accept transitions wider than a tenth of the chain.
    pub allow_wide: bool,
    pub threshold: f64,
    pub record_trace: bool,
}

impl Default for TransitionSettings {
    fn default() -> Self {
        TransitionSettings {
            max_iterations: 1_000_000,
            relative_tolerance: 1e-6,
            direction: Direction::Preconditioned,
            allow_wide: false,
            threshold: 0.5,
            record_trace: false,
        }
    }
}

impl TransitionSettings {
    pub fn optimizer(&self, spacing: f64, delta: f64) -> OptimizerSettings {
        OptimizerSettings {
            max_iterations: self.max_iterations,
            gradient_tolerance: self.relative_tolerance * spacing * delta.powf(1.5),
            direction: self.direction,
            record_trace: self.record_trace,
            ..OptimizerSettings::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionReport {
    pub lambda: f64,
    pub delta: f64,
    pub ratio: f64,
    pub regime: Regime,
    /// `H^hf / (sqrt 2 lambda delta^{3/2})`
    pub scaled_energy: f64,
    pub energy: f64,
    pub jumps: usize,
    pub fit: Option<ProfileFit>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub status: Status,
    /// The forcing used: two increments pinned at each end.
    pub clamp: Clamp,
    pub wide: bool,
    #[serde(skip)]
    pub increments: Option<IncrementField>,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

impl TransitionReport {
    pub fn field(&self) -> Option<ChiralityField> {
        self.increments
            .as_ref()
            .map(|incr| field_from_increments(incr, self.delta))
    }

    pub fn chain(&self) -> Option<SpinChain> {
        self.increments
            .as_ref()
            .map(|incr| SpinChain::from_increments(0.0, incr))
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::near_transition(self.delta, self.lambda)
    }
}

/// Start of a transition: `z = tanh((x - 1/2)/l) / tanh(1/(2l))` on the
/// cell endpoints, mapped to increments `2 asin(sqrt(delta/2) z)`.
pub fn transition_seed(spacing: f64, delta: f64) -> Result<IncrementField> {
    check_delta(delta)?;
    let n = lattice_count(spacing)?;
    let l = ratio(spacing, delta);
    let norm = (0.5 / l).tanh();
    let amplitude = (0.5 * delta).sqrt();
    let thetas = (0..n)
        .map(|i| {
            let z = (((spacing * i as f64 - 0.5) / l).tanh() / norm).clamp(-1.0, 1.0);
            2.0 * (amplitude * z).asin()
        })
        .collect();
    IncrementField::new(thetas, spacing)
}

/// Minimizes `H^hf` with opposite chiralities clamped at the ends and reports
/// the scaled energy, jumps and `tanh` fit of the resulting order parameter.
pub fn transition_energy(spacing: f64, delta: f64, settings: &TransitionSettings) -> Result<TransitionReport> {
    if !(spacing > 0.0 && spacing < 1.0) {
        return Err(Error::domain(format!("lambda must lie in (0, 1), got {spacing}")));
    }
    check_delta(delta)?;
    let r = ratio(spacing, delta);
    let wide = 10.0 * r > 1.0;
    if wide && !settings.allow_wide {
        return Err(Error::precondition(format!(
            "transition width {r:e} exceeds a tenth of the chain; set allow_wide to proceed"
        )));
    }
    let n = lattice_count(spacing)?;
    if n < 8 {
        return Err(Error::domain(format!(
            "{n} increments are too few for a clamped transition"
        )));
    }
    let start = transition_seed(spacing, delta)?;
    let clamp = Clamp::transition(delta)?;
    let d = descend(&start, delta, &clamp, &settings.optimizer(spacing, delta))?;
    let field = field_from_increments(&d.increments, delta);
    let jumps = jump_count(&field, settings.threshold);
    let fit = if jumps == 1 { profile_fit(&field).ok() } else { None };
    Ok(TransitionReport {
        lambda: spacing,
        delta,
        ratio: r,
        regime: Regime::classify(r),
        scaled_energy: d.energy / energy_unit(spacing, delta),
        energy: d.energy,
        jumps,
        fit,
        iterations: d.iterations,
        grad_norm: d.grad_norm,
        status: d.status,
        clamp,
        wide,
        increments: Some(d.increments),
        trace: d.trace,
    })
}

/// Whether the scaled energies of one regime group move monotonically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCheck {
    pub regime: String,
    pub entries: usize,
    /// Scaled energy non-decreasing in the ratio.
    pub increasing: bool,
    /// Distance of the scaled energies from `8/3` shrinking along the group.
    pub converging: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub entry: ScalingEntry,
    pub report: Option<TransitionReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    pub trends: Vec<TrendCheck>,
}

/// One transition per entry, run on `workers` threads (`0` for the rayon
/// default) and merged by entry index. Wide entries are allowed and flagged.
pub fn regime_sweep(seq: &ScalingSequence, settings: &TransitionSettings, workers: usize) -> Result<Sweep> {
    if !seq.is_sorted() {
        return Err(Error::precondition("sweep entries must be sorted by ratio"));
    }
    let settings = TransitionSettings {
        allow_wide: true,
        ..*settings
    };
    let run = |e: &ScalingEntry| match transition_energy(e.lambda, e.delta, &settings) {
        Ok(report) => SweepRow {
            entry: *e,
            report: Some(report),
            error: None,
        },
        Err(err) => SweepRow {
            entry: *e,
            report: None,
            error: Some(err.to_string()),
        },
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::domain(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| seq.entries().par_iter().map(run).collect());
    let trends = trend_checks(&rows);
    Ok(Sweep { rows, trends })
}

fn trend_checks(rows: &[SweepRow]) -> Vec<TrendCheck> {
    let mut out = Vec::new();
    for label in ["l_zero", "l_finite", "l_infinite"] {
        let energies: Vec<f64> = rows
            .iter()
            .filter(|r| r.entry.regime.label() == label)
            .filter_map(|r| r.report.as_ref().map(|rep| rep.scaled_energy))
            .collect();
        if energies.is_empty() {
            continue;
        }
        let gaps: Vec<f64> = energies.iter().map(|e| (e - 8.0 / 3.0).abs()).collect();
        out.push(TrendCheck {
            regime: label.to_string(),
            entries: energies.len(),
            increasing: energies.windows(2).all(|w| w[1] >= w[0]),
            converging: gaps.windows(2).all(|w| w[1] <= w[0]),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert_eq!(Regime::classify(0.049).label(), "l_zero");
        assert_eq!(Regime::classify(0.05).label(), "l_finite");
        assert_eq!(Regime::classify(20.0).label(), "l_finite");
        assert_eq!(Regime::classify(20.1).label(), "l_infinite");
        assert!((ratio(1e-3, 5e-7) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sequence_validation() {
        assert!(ScalingSequence::new(&[(0.0, 0.1)]).is_err());
        assert!(ScalingSequence::new(&[(0.1, 1.0)]).is_err());
        let s = ScalingSequence::new(&[(1e-2, 1e-2), (1e-2, 1e-4)]).unwrap();
        assert!(s.is_sorted());
        let s = ScalingSequence::new(&[(1e-2, 1e-4), (1e-2, 1e-2)]).unwrap();
        assert!(!s.is_sorted());
        assert!(regime_sweep(&s, &TransitionSettings::default(), 1).is_err());
    }

    #[test]
    fn empty_sweep() {
        let s = ScalingSequence::new(&[]).unwrap();
        let sweep = regime_sweep(&s, &TransitionSettings::default(), 1).unwrap();
        assert!(sweep.rows.is_empty());
        assert!(sweep.trends.is_empty());
    }

    #[test]
    fn seed_respects_clamp_values() {
        let delta = 1e-2;
        let seed = transition_seed(1e-3, delta).unwrap();
        let phi = (1.0f64 - delta).acos();
        let t = seed.thetas();
        assert!((t[0] + phi).abs() < 1e-12);
        assert!((t[t.len() - 1] - phi).abs() < 1e-3);
    }

    #[test]
    fn wide_transition_needs_override() {
        let err = transition_energy(1e-2, 1e-4, &TransitionSettings::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn narrow_transition_costs_one_interface() {
        let lambda = 2e-3;
        let delta = 0.05;
        let rep = transition_energy(lambda, delta, &TransitionSettings::default()).unwrap();
        assert_eq!(rep.jumps, 1);
        assert_eq!(rep.regime, Regime::LZero);
        assert!((rep.scaled_energy / (8.0 / 3.0) - 1.0).abs() < 0.05, "{rep:?}");
        let fit = rep.fit.unwrap();
        let width = lambda / (2.0 * delta).sqrt();
        assert!(fit.width > 0.5 * width && fit.width < 2.0 * width);
    }
}
