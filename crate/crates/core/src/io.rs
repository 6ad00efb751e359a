//! CSV and JSON emission.
//!
//! Every CSV starts with a comment line `# schema=helichain/v1 config_hash=...`
//! followed by the column header; floats are written with 17 significant
//! digits so they round-trip exactly. JSON documents wrap a result in an
//! envelope carrying the same schema tag and hash next to the resolved
//! configuration.

use std::io::{BufRead, Write};

use serde::Serialize;
use serde_json::{json, Value};

use crate::chirality::ChiralityField;
use crate::gamma::SweepRow;
use crate::minimize::TraceRow;
use crate::spin::{IncrementField, SpinChain};
use crate::{Error, Result, SCHEMA_TAG};

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn preamble(w: &mut impl Write, config_hash: &str, columns: &[&str]) -> Result<()> {
    writeln!(w, "# schema={SCHEMA_TAG} config_hash={config_hash}")?;
    writeln!(w, "{}", columns.join(","))?;
    Ok(())
}

/// Generic numeric table, used for plot data.
pub fn write_table(w: &mut impl Write, config_hash: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    preamble(w, config_hash, columns)?;
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::domain(format!(
                "row of {} values for {} columns",
                row.len(),
                columns.len()
            )));
        }
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// `i,x,y`
pub fn write_chain(w: &mut impl Write, config_hash: &str, chain: &SpinChain) -> Result<()> {
    preamble(w, config_hash, &["i", "x", "y"])?;
    for (i, s) in chain.spins().iter().enumerate() {
        writeln!(w, "{i},{},{}", fmt_f64(s[0]), fmt_f64(s[1]))?;
    }
    Ok(())
}

/// `i,theta`
pub fn write_increments(w: &mut impl Write, config_hash: &str, incr: &IncrementField) -> Result<()> {
    preamble(w, config_hash, &["i", "theta"])?;
    for (i, t) in incr.thetas().iter().enumerate() {
        writeln!(w, "{i},{}", fmt_f64(*t))?;
    }
    Ok(())
}

/// `i,x,z` with `x` the left endpoint of cell `i`.
pub fn write_field(w: &mut impl Write, config_hash: &str, field: &ChiralityField) -> Result<()> {
    preamble(w, config_hash, &["i", "x", "z"])?;
    for (i, (x, z)) in field.cell_positions().iter().zip(field.z()).enumerate() {
        writeln!(w, "{i},{},{}", fmt_f64(*x), fmt_f64(*z))?;
    }
    Ok(())
}

/// `iter,energy,grad_norm,step`
pub fn write_trace(w: &mut impl Write, config_hash: &str, trace: &[TraceRow]) -> Result<()> {
    preamble(w, config_hash, &["iter", "energy", "grad_norm", "step"])?;
    for r in trace {
        writeln!(
            w,
            "{},{},{},{}",
            r.iter,
            fmt_f64(r.energy),
            fmt_f64(r.grad_norm),
            fmt_f64(r.step)
        )?;
    }
    Ok(())
}

/// `lambda,delta,ratio,regime,scaled_energy,jumps,center,width,iters`; cells
/// without a value (failed entry, no single jump) are left empty.
pub fn write_sweep(w: &mut impl Write, config_hash: &str, rows: &[SweepRow]) -> Result<()> {
    preamble(
        w,
        config_hash,
        &[
            "lambda",
            "delta",
            "ratio",
            "regime",
            "scaled_energy",
            "jumps",
            "center",
            "width",
            "iters",
        ],
    )?;
    for row in rows {
        let e = &row.entry;
        let (scaled, jumps, center, width, iters) = match &row.report {
            Some(r) => (
                fmt_f64(r.scaled_energy),
                r.jumps.to_string(),
                r.fit.map(|f| fmt_f64(f.center)).unwrap_or_default(),
                r.fit.map(|f| fmt_f64(f.width)).unwrap_or_default(),
                r.iterations.to_string(),
            ),
            None => Default::default(),
        };
        writeln!(
            w,
            "{},{},{},{},{scaled},{jumps},{center},{width},{iters}",
            fmt_f64(e.lambda),
            fmt_f64(e.delta),
            fmt_f64(e.ratio),
            e.regime.label()
        )?;
    }
    Ok(())
}

/// Rows of a CSV written by this module, with the comment line checked and
/// the header returned separately.
pub fn read_table(r: impl BufRead) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = r.lines();
    let first = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Parse("empty file".into()))?;
    if !first.starts_with(&format!("# schema={SCHEMA_TAG} ")) {
        return Err(Error::Parse(format!("missing schema line, found {first:?}")));
    }
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Parse("missing header".into()))?;
    let columns: Vec<String> = header.split(',').map(str::to_owned).collect();
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<String> = line.split(',').map(str::to_owned).collect();
        if cells.len() != columns.len() {
            return Err(Error::Parse(format!("expected {} cells in {line:?}", columns.len())));
        }
        rows.push(cells);
    }
    Ok((columns, rows))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

/// Inverse of [`write_chain`].
pub fn read_chain(r: impl BufRead, spacing: f64) -> Result<SpinChain> {
    let (columns, rows) = read_table(r)?;
    if columns != ["i", "x", "y"] {
        return Err(Error::Parse(format!("not a chain table: {columns:?}")));
    }
    let spins = rows
        .iter()
        .map(|c| Ok([parse_f64(&c[1])?, parse_f64(&c[2])?]))
        .collect::<Result<Vec<_>>>()?;
    SpinChain::new(spins, spacing)
}

/// Inverse of [`write_increments`].
pub fn read_increments(r: impl BufRead, spacing: f64) -> Result<IncrementField> {
    let (columns, rows) = read_table(r)?;
    if columns != ["i", "theta"] {
        return Err(Error::Parse(format!("not an increment table: {columns:?}")));
    }
    let thetas = rows.iter().map(|c| parse_f64(&c[1])).collect::<Result<Vec<_>>>()?;
    IncrementField::new(thetas, spacing)
}

/// `{schema, kind, config_hash, config, result}`.
pub fn envelope(kind: &str, config_hash: &str, config: &impl Serialize, result: &impl Serialize) -> Result<Value> {
    let parse = |e: serde_json::Error| Error::Parse(e.to_string());
    Ok(json!({
        "schema": SCHEMA_TAG,
        "kind": kind,
        "config_hash": config_hash,
        "config": serde_json::to_value(config).map_err(parse)?,
        "result": serde_json::to_value(result).map_err(parse)?,
    }))
}

/// Pretty JSON with a trailing newline. Floats use the shortest text that
/// parses back to the same value.
pub fn write_json(w: &mut impl Write, value: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}
