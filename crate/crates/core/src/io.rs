//! File formats: spectral data and index sequences as JSON, potentials and
//! grid functions as CSV.
//!
//! Every decoder returns [`Error::Parse`] with a line/column or field name,
//! and never panics on malformed input.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::eigen::{SpectralData, SpectralDatum};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::halfaxis::SurgeryPlan;
use crate::isospectral::TSequence;
use crate::potential::PotentialMatrix;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectralFile {
    alpha: f64,
    beta: f64,
    items: Vec<SpectralDatum>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TEntry {
    n: i64,
    t: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TFile {
    entries: Vec<TEntry>,
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse(format!("line {} column {}: {e}", e.line(), e.column()))
}

fn field(path: &str, e: Error) -> Error {
    match e {
        Error::Input(m) => Error::Parse(format!("{path}: {m}")),
        other => other,
    }
}

pub fn parse_spectral_json(text: &str) -> Result<SpectralData> {
    let f: SpectralFile = serde_json::from_str(text).map_err(json_error)?;
    for (name, v) in [("alpha", f.alpha), ("beta", f.beta)] {
        if !v.is_finite() {
            return Err(Error::Parse(format!("{name}: not finite")));
        }
    }
    for (i, w) in f.items.windows(2).enumerate() {
        if w[1].n <= w[0].n {
            return Err(Error::Parse(format!("items[{}].n: index {} does not follow {}", i + 1, w[1].n, w[0].n)));
        }
    }
    let s = SpectralData::from_items(f.alpha, f.beta, f.items);
    s.validate().map_err(|e| field("items", e))?;
    Ok(s)
}

pub fn emit_spectral_json(s: &SpectralData) -> String {
    let f = SpectralFile { alpha: s.alpha, beta: s.beta, items: s.items.values().copied().collect() };
    let mut out = serde_json::to_string_pretty(&f).expect("plain data serializes");
    out.push('\n');
    out
}

pub fn parse_tsequence_json(text: &str) -> Result<TSequence> {
    let f: TFile = serde_json::from_str(text).map_err(json_error)?;
    TSequence::new(f.entries.into_iter().map(|e| (e.n, e.t))).map_err(|e| field("entries", e))
}

pub fn emit_tsequence_json(t: &TSequence) -> String {
    let f = TFile { entries: t.entries.iter().map(|(&n, &t)| TEntry { n, t }).collect() };
    let mut out = serde_json::to_string_pretty(&f).expect("plain data serializes");
    out.push('\n');
    out
}

pub fn parse_plan_json(text: &str) -> Result<SurgeryPlan> {
    let plan: SurgeryPlan = serde_json::from_str(text).map_err(json_error)?;
    plan.validate().map_err(|e| field("plan", e))?;
    Ok(plan)
}

pub fn emit_plan_json(plan: &SurgeryPlan) -> String {
    let mut out = serde_json::to_string_pretty(plan).expect("plain data serializes");
    out.push('\n');
    out
}

/// 17 significant digits: enough to round-trip every `f64`.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn read_rows(text: &str, header: &[&str]) -> Result<(Vec<Vec<f64>>, Vec<u64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let head = rdr.headers().map_err(|e| Error::Parse(format!("header: {e}")))?;
    if head.iter().collect::<Vec<_>>() != header {
        return Err(Error::Parse(format!("line 1: expected header {}", header.join(","))));
    }
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse(format!("line {line}: {e}"))
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let mut row = Vec::with_capacity(header.len());
        for (col, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Parse(format!("line {line} column {}: `{cell}` is not a number", col + 1)))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("line {line} column {}: not finite", col + 1)));
            }
            row.push(v);
        }
        rows.push(row);
        lines.push(line);
    }
    Ok((rows, lines))
}

/// Rebuilds the uniform grid behind a column of abscissae.
fn grid_of(xs: &[f64], lines: &[u64]) -> Result<Grid> {
    if xs.len() < 4 {
        return Err(Error::Parse(format!("need at least 4 rows, got {}", xs.len())));
    }
    let grid = Grid::new(xs[0], xs[xs.len() - 1], xs.len() - 1).map_err(|e| field("x", e))?;
    let slack = 1e-9 * grid.h();
    for (i, x) in xs.iter().enumerate() {
        if (x - grid.node(i)).abs() > slack {
            return Err(Error::Parse(format!("line {}: x = {x} breaks the uniform grid", lines[i])));
        }
    }
    Ok(grid)
}

/// Potential CSV with header `x,p,q` on a uniform grid.
pub fn parse_potential_csv(text: &str) -> Result<PotentialMatrix> {
    let (rows, lines) = read_rows(text, &["x", "p", "q"])?;
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let grid = grid_of(&xs, &lines)?;
    let p = rows.iter().map(|r| r[1]).collect();
    let q = rows.iter().map(|r| r[2]).collect();
    PotentialMatrix::sampled(grid, p, q)
}

pub fn emit_potential_csv(pot: &PotentialMatrix, grid: &Grid) -> Result<String> {
    let (p, q) = pot.sample(grid)?;
    let mut out = String::from("x,p,q\n");
    for i in 0..grid.len() {
        writeln!(out, "{},{},{}", num(grid.node(i)), num(p[i]), num(q[i])).expect("writing to a String");
    }
    Ok(out)
}

/// Grid function CSV with header `x,value`.
pub fn parse_grid_function_csv(text: &str) -> Result<GridFunction> {
    let (rows, lines) = read_rows(text, &["x", "value"])?;
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let grid = grid_of(&xs, &lines)?;
    GridFunction::new(grid, rows.iter().map(|r| r[1]).collect())
}

pub fn emit_grid_function_csv(f: &GridFunction) -> String {
    let mut out = String::from("x,value\n");
    for (i, v) in f.values.iter().enumerate() {
        writeln!(out, "{},{}", num(f.grid.node(i)), num(*v)).expect("writing to a String");
    }
    out
}

/// Arbitrary named columns, one row per entry of `x`.
pub fn emit_columns_csv(x_name: &str, x: &[f64], cols: &[(&str, &[f64])]) -> String {
    let mut out = String::from(x_name);
    for (name, _) in cols {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, xi) in x.iter().enumerate() {
        out.push_str(&num(*xi));
        for (_, c) in cols {
            out.push(',');
            out.push_str(&num(c[i]));
        }
        out.push('\n');
    }
    out
}
