//! Subcommand bodies and file emission.

use std::fs;
use std::path::PathBuf;

use helichain::chirality::{jump_count, order_parameter};
use helichain::gamma::{
    continuum_min, continuum_settings, energy_unit, fhom_bounds, fhom_estimate, identity_suite, mm_energy,
    mm_limit_constant, ratio, regime_sweep, transition_energy, FhomSettings, MMConfig, RecoveryProfile, Regime,
    ScalingSequence, TransitionSettings, Well,
};
use helichain::io::{
    envelope, write_chain, write_field, write_increments, write_json, write_sweep, write_table, write_trace,
};
use helichain::minimize::{brute_force_min, descend, Clamp, OptimizerSettings};
use helichain::spin::{
    boundary_ok, bulk_weight, energy_e, energy_ehf, energy_h, energy_hhf, ground_state, lattice_count,
    min_energy_analytic, reduced_hhf, Chirality, IncrementField, ModelParams, SpinChain,
};
use helichain::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, Emit, Run, RunConfig};

/// Collects the files of one run under `<out>/<command>*`.
pub struct Output<'a> {
    config: &'a RunConfig,
    hash: String,
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl<'a> Output<'a> {
    pub fn new(run: &'a Run) -> Result<Self> {
        fs::create_dir_all(&run.out)?;
        Ok(Output {
            config: &run.config,
            hash: run.config.hash(),
            dir: run.out.clone(),
            written: Vec::new(),
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}", self.config.command))
    }

    fn file(&mut self, kind: Emit, suffix: &str, body: impl FnOnce(&mut Vec<u8>, &str) -> Result<()>) -> Result<()> {
        if !self.config.wants(kind) {
            return Ok(());
        }
        let mut buf = Vec::new();
        body(&mut buf, &self.hash)?;
        let path = self.path(suffix);
        fs::write(&path, buf)?;
        self.written.push(path);
        Ok(())
    }

    fn csv(&mut self, suffix: &str, body: impl FnOnce(&mut Vec<u8>, &str) -> Result<()>) -> Result<()> {
        self.file(Emit::Csv, suffix, body)
    }

    fn plot(&mut self, suffix: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        self.file(Emit::Plotdata, suffix, |w, h| write_table(w, h, columns, rows))
    }

    fn json(&mut self, result: &impl Serialize) -> Result<()> {
        let kind = self.config.command;
        let config = self.config;
        self.file(Emit::Json, ".json", |w, h| {
            write_json(w, &envelope(kind, h, config, result)?)
        })
    }

    /// Sidecar with the only non-deterministic content of a run.
    pub fn log(&mut self, started: u64, elapsed: f64, outcome: &str) -> Result<()> {
        let mut text = format!(
            "started_unix={started}\nelapsed_seconds={elapsed:.3}\ncommand={}\nconfig_hash={}\noutcome={outcome}\n",
            self.config.command, self.hash
        );
        for p in &self.written {
            text.push_str(&format!("wrote={}\n", p.display()));
        }
        let path = self.path(".log");
        fs::write(&path, text)?;
        Ok(())
    }
}

/// What a command reports back besides its files.
pub struct Summary {
    pub line: String,
    /// A self-check inside the command failed (identities).
    pub failed: bool,
}

fn summary(line: String) -> Summary {
    Summary { line, failed: false }
}

pub fn execute(command: Command, run: &Run, out: &mut Output) -> Result<Summary> {
    let c = &run.config;
    match command {
        Command::Energy => energy(c, out),
        Command::GroundState => ground(c, out),
        Command::Minimize => minimize(c, out),
        Command::Transition => transition(c, out),
        Command::Sweep => sweep(c, out),
        Command::Fhom => fhom(c, out),
        Command::MmCheck => mm_check(c, out),
        Command::Oracle => oracle(c, out),
        Command::Identities => identities(c, out),
    }
}

fn one(values: &[f64]) -> f64 {
    values[0]
}

/// `delta` as given, or `lambda^2 / (2 l^2)` from the ratio.
fn delta_of(c: &RunConfig, lambda: f64) -> Result<f64> {
    match (c.delta.first(), c.l.first()) {
        (Some(&d), _) => Ok(d),
        (None, Some(&l)) if l > 0.0 && l.is_finite() => Ok(lambda * lambda / (2.0 * l * l)),
        (None, Some(&l)) => Err(Error::Domain(format!("l must be positive, got {l}"))),
        (None, None) => Err(Error::Domain("missing delta".into())),
    }
}

fn energy(c: &RunConfig, out: &mut Output) -> Result<Summary> {
    let lambda = one(&c.lambda);
    let j1 = c.j1.unwrap();
    let chain = SpinChain::random_periodic(lambda, c.seed.unwrap())?;
    let p = ModelParams::new(j1, lambda)?;
    let e = energy_e(&chain, &p)?;
    let h = energy_h(&chain, &p)?;
    let offset = (1.0 + j1 * j1 / 8.0) * bulk_weight(lambda)?;
    let mut result = json!({
        "sites": chain.len(),
        "energy_e": e,
        "energy_h": h,
        "identity_residual": e - (h - offset),
        "boundary_ok": boundary_ok(&chain, 1e-9),
    });
    if let Some(&delta) = c.delta.first() {
        result["energy_ehf"] = json!(energy_ehf(&chain, delta)?);
        result["energy_hhf"] = json!(energy_hhf(&chain, delta)?);
    }
    out.csv("_chain.csv", |w, h| write_chain(w, h, &chain))?;
    out.json(&result)?;
    Ok(summary(format!("E = {e:.16e}, H = {h:.16e}")))
}

fn ground(c: &RunConfig, out: &mut Output) -> Result<Summary> {
    let lambda = one(&c.lambda);
    let p = ModelParams::new(c.j1.unwrap(), lambda)?;
    let gs = ground_state(&p, Chirality::CounterClockwise, 0.0)?;
    let e = energy_e(&gs.chain, &p)?;
    let analytic = min_energy_analytic(&p)?;
    let incr = IncrementField::constant(gs.angle, lambda)?;
    out.csv("_chain.csv", |w, h| write_chain(w, h, &gs.chain))?;
    out.csv("_increments.csv", |w, h| write_increments(w, h, &incr))?;
    let rows: Vec<Vec<f64>> = gs
        .chain
        .spins()
        .iter()
        .enumerate()
        .map(|(i, s)| vec![lambda * i as f64, s[0], s[1]])
        .collect();
    out.plot("_plot.csv", &["x", "u1", "u2"], &rows)?;
    out.json(&json!({
        "phase": gs.phase,
        "angle": gs.angle,
        "energy_e": e,
        "min_energy_analytic": analytic,
        "difference": e - analytic,
    }))?;
    Ok(summary(format!("E = {e:.16e}, analytic {analytic:.16e}")))
}

fn minimize(c: &RunConfig, out: &mut Output) -> Result<Summary> {
    let lambda = one(&c.lambda);
    let delta = delta_of(c, lambda)?;
    let start = IncrementField::random(lambda, delta, c.seed.unwrap())?;
    let settings = OptimizerSettings {
        seed: c.seed.unwrap(),
        record_trace: c.wants(Emit::Plotdata),
        ..OptimizerSettings::for_spacing(lambda)
    };
    let d = descend(&start, delta, &Clamp::none(), &settings)?;
    let chain = SpinChain::from_increments(0.0, &d.increments);
    let field = order_parameter(&chain, delta)?;
    let jumps = jump_count(&field, c.threshold.unwrap());
    out.csv("_increments.csv", |w, h| write_increments(w, h, &d.increments))?;
    out.csv("_field.csv", |w, h| write_field(w, h, &field))?;
    out.file(Emit::Plotdata, "_trace.csv", |w, h| write_trace(w, h, &d.trace))?;
    out.json(&json!({
        "energy_hhf": d.energy,
        "scaled_energy": d.energy / energy_unit(lambda, delta),
        "iterations": d.iterations,
        "grad_norm": d.grad_norm,
        "status": d.status,
        "jumps": jumps,
        "z_min": field.z().iter().copied().fold(f64::INFINITY, f64::min),
        "z_max": field.z().iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }))?;
    Ok(summary(format!(
        "H^hf = {:.6e} after {} iterations ({:?}), {jumps} jumps",
        d.energy, d.iterations, d.status
    )))
}

fn transition(c: &RunConfig, out: &mut Output) -> Result<Summary> {
    let lambda = one(&c.lambda);
    let delta = delta_of(c, lambda)?;
    let settings = TransitionSettings {
        threshold: c.threshold.unwrap(),
        allow_wide: true,
        record_trace: c.wants(Emit::Plotdata),
        ..TransitionSettings::default()
    };
    let r = transition_energy(lambda, delta, &settings)?;
    let field = r.field().expect("report keeps its increments");
    // the diffuse regime has a computable continuum counterpart
    let continuum = match r.regime {
        Regime::LFinite { .. } => {
            let n = lattice_count(lambda)? as f64;
            let samples = 2001;
            let m = continuum_min(r.ratio * n / (n - 3.0), samples, &continuum_settings(samples))?;
            Some(json!({"l": r.ratio * n / (n - 3.0), "samples": samples, "energy": m.energy, "status": m.status}))
        }
        _ => None,
    };
    out.csv("_increments.csv", |w, h| {
        write_increments(w, h, r.increments.as_ref().unwrap())
    })?;
    out.csv("_field.csv", |w, h| write_field(w, h, &field))?;
    if let Some(fit) = r.fit {
        let rows: Vec<Vec<f64>> = field
            .cell_positions()
            .iter()
            .zip(field.z())
            .map(|(&x, &z)| {
                let s = if field.z()[0] < 0.0 { 1.0 } else { -1.0 };
                vec![x, z, s * ((x - fit.center) / fit.width).tanh()]
            })
            .collect();
        out.plot("_profile.csv", &["x", "z", "fit"], &rows)?;
    } else {
        let rows: Vec<Vec<f64>> = field
            .cell_positions()
            .iter()
            .zip(field.z())
            .map(|(&x, &z)| vec![x, z])
            .collect();
        out.plot("_profile.csv", &["x", "z"], &rows)?;
    }
    out.file(Emit::Plotdata, "_trace.csv", |w, h| write_trace(w, h, &r.trace))?;
    let mut result = serde_json::to_value(&r).map_err(|e| Error::Parse(e.to_string()))?;
    result["continuum"] = continuum.unwrap_or(Value::Null);
    out.json(&result)?;
    Ok(summary(format!(
        "scaled energy {:.6} ({}, l = {:.3e}), {} jumps, {:?}",
        r.scaled_energy,
        r.regime.label(),
        r.ratio,
        r.jumps,
        r.status
    )))
}

fn sweep(c: &RunConfig, out: &mut Output) -> Result<Summary> {
    let mut pairs = Vec::new();
    for &lambda in &c.lambda {
        for &delta in &c.delta {
            pairs.push((lambda, delta));
        }
        for &l in &c.l {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Domain(format!("l must be positive, got {l}")));
            }
            pairs.push((lambda, lambda * lambda / (2.0 * l * l)));
        }
    }
    pairs.sort_by(|a, b| ratio(a.0, a.1).total_cmp(&ratio(b.0, b.1)));
    let seq = ScalingSequence::new(&pairs)?;
    let settings = TransitionSettings {
        threshold: c.threshold.unwrap(),
        ..TransitionSettings::default()
    };
    let s = regime_sweep(&seq, &settings, c.workers.unwrap())?;
    out.csv(".csv", |w, h| write_sweep(w, h, &s.rows))?;
    let rows: Vec<Vec<f64>> = s
        .rows
        .iter()
        .filter_map(|r| r.report.as_ref().map(|rep| vec![r.entry.ratio, rep.scaled_energy]))
        .collect();
    out.plot("_plot.csv", &["ratio", "scaled_energy"], &rows)?;
    out.json(&s)?;
    let failed = s.rows.iter().filter(|r| r.error.is_some()).count();
    Ok(summary(format!("{} entries, {failed} failed", s.rows.len())))
}

fn fhom(c: &RunConfig, out: &mut Output) -> Result<Summary> {
    let radii = c.grid.unwrap();
    if radii < 2 {
        return Err(Error::Domain(format!("--grid needs at least 2 radii, got {radii}")));
    }
    let j1 = c.j1.unwrap();
    let settings = FhomSettings {
        seed: c.seed.unwrap(),
        ..FhomSettings::default()
    };
    let mut estimates = Vec::with_capacity(radii);
    let mut rows = Vec::with_capacity(radii);
    let mut outside = 0;
    for i in 0..radii {
        let r = i as f64 / (radii - 1) as f64;
        let e = fhom_estimate([r, 0.0], j1, c.cell_size.unwrap(), c.rho.unwrap(), &settings)?;
        let (lo, hi) = fhom_bounds(j1, r);
        outside += usize::from(e.value < lo - 0.02 || e.value > hi + 0.02);
        rows.push(vec![r, e.value, lo, hi]);
        estimates.push(json!({"r": r, "lower": lo, "upper": hi, "estimate": e}));
    }
    out.csv(".csv", |w, h| {
        write_table(w, h, &["r", "value", "lower", "upper"], &rows)
    })?;
    out.plot("_plot.csv", &["r", "value", "lower", "upper"], &rows)?;
    out.json(&json!({"settings": settings, "points": estimates}))?;
    Ok(summary(format!("{radii} radii, {outside} outside the bounds")))
}

fn mm_check(c: &RunConfig, out: &mut Output) -> Result<Summary> {
    let lambda = one(&c.lambda);
    let delta = delta_of(c, lambda)?;
    let constant = mm_limit_constant(Well::Standard)?;
    let l = ratio(lambda, delta);
    let profile = RecoveryProfile::new(1e-3)?;
    let z = profile.sample(lambda, delta)?;
    let e = mm_energy(&z, &MMConfig::new(l, l, Well::Standard)?, lambda);
    let rows: Vec<Vec<f64>> = z.iter().enumerate().map(|(i, &v)| vec![lambda * i as f64, v]).collect();
    out.csv("_profile.csv", |w, h| write_table(w, h, &["x", "z"], &rows))?;
    out.plot("_plot.csv", &["x", "z"], &rows)?;
    out.json(&json!({
        "limit_constant": constant,
        "recovery_energy": e,
        "relative_gap": e / constant - 1.0,
        "profile": profile,
    }))?;
    Ok(summary(format!("C_W = {constant:.16e}, recovery energy {e:.6}")))
}

fn oracle(c: &RunConfig, out: &mut Output) -> Result<Summary> {
    let lambda = one(&c.lambda);
    let p = ModelParams::new(c.j1.unwrap(), lambda)?;
    let sites = lattice_count(lambda)? + 1;
    let bf = brute_force_min(sites, &p, c.grid.unwrap())?;
    let analytic = min_energy_analytic(&p)?;
    let incr = IncrementField::new(bf.increments.clone(), lambda)?;
    out.csv("_increments.csv", |w, h| write_increments(w, h, &incr))?;
    out.json(&json!({
        "sites": sites,
        "grid": bf.grid_points,
        "brute_force": bf.energy,
        "argmin": bf.increments,
        "analytic": analytic,
        "gap": bf.energy - analytic,
    }))?;
    Ok(summary(format!(
        "brute force {:.16e}, analytic {analytic:.16e}",
        bf.energy
    )))
}

fn identities(c: &RunConfig, out: &mut Output) -> Result<Summary> {
    use rand::{Rng, SeedableRng};
    let samples = c.grid.unwrap();
    let seed = c.seed.unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut e_h = 0.0f64;
    let mut reduced = 0.0f64;
    let mut symmetry = 0.0f64;
    for s in 0..samples as u64 {
        let lambda = 1.0 / rng.gen_range(5..300) as f64;
        let chain = SpinChain::random_periodic(lambda, seed.wrapping_add(s))?;
        let j1 = rng.gen_range(0.1..4.0);
        let p = ModelParams::new(j1, lambda)?;
        let e = energy_e(&chain, &p)?;
        let h = energy_h(&chain, &p)?;
        e_h = e_h.max((e - h + (1.0 + j1 * j1 / 8.0) * bulk_weight(lambda)?).abs());
        let turned = energy_e(&chain.rotate(rng.gen_range(-3.0..3.0)).reflect(), &p)?;
        symmetry = symmetry.max((turned - e).abs());

        let delta = rng.gen_range(1e-4..0.5);
        let incr = IncrementField::random(lambda, delta, seed.wrapping_add(s))?;
        let direct = energy_hhf(&SpinChain::from_increments(0.0, &incr), delta)?;
        reduced = reduced.max((direct - reduced_hhf(&incr, delta)?).abs());
    }
    let mut checks = identity_suite(samples, seed);
    for (name, worst, tol) in [
        ("E = H - (1 + J1^2/8)(1 - c lambda)", e_h, 1e-12),
        ("E invariant under rotation and reflection", symmetry, 1e-12),
        ("reduced H^hf = direct H^hf", reduced, 1e-10),
    ] {
        checks.push(helichain::gamma::IdentityCheck {
            name: name.into(),
            worst,
            tolerance: tol,
            passed: worst <= tol,
        });
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    out.json(&checks)?;
    Ok(Summary {
        line: format!("{} checks, {failed} failed", checks.len()),
        failed: failed > 0,
    })
}

/// `2` for numerical failures, `1` for everything else.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_numerical_from_domain() {
        let numerical = Error::Numerical {
            iteration: 3,
            reason: "nan".into(),
        };
        assert_eq!(exit_code(&numerical), 2);
        assert_eq!(exit_code(&Error::Quadrature("depth".into())), 2);
        assert_eq!(exit_code(&Error::Domain("lambda".into())), 1);
        assert_eq!(exit_code(&Error::Precondition("wide".into())), 1);
    }
}
