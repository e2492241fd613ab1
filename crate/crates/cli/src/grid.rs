//! Evaluation grids and their CSV form.

use std::fmt::Write as _;

use crate::error::{CliError, Result};
use phasemix::distributions::ExitLaw;
use rayon::prelude::*;
use serde::Serialize;

/// Largest number of points accepted on one axis.
const MAX_AXIS: usize = 1_000_000;

pub fn invalid(message: String) -> CliError {
    CliError::Core(phasemix::Error::InvalidInput(message))
}

/// Round-trip exact rendering: 17 significant digits, '.' decimal.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Parses `a:b`.
pub fn parse_range(text: &str) -> Result<(f64, f64)> {
    let bad = || {
        invalid(format!(
            "range `{text}` must look like a:b with finite a <= b"
        ))
    };
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(bad());
    }
    Ok((a, b))
}

/// `a, a + h, …` up to `b` (inclusive up to rounding).
pub fn axis(range: (f64, f64), step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid(format!("grid step {step} must be positive")));
    }
    let (a, b) = range;
    let count = ((b - a) / step + 1e-9).floor();
    if count >= MAX_AXIS as f64 {
        return Err(invalid(format!(
            "grid axis would have more than {MAX_AXIS} points"
        )));
    }
    Ok((0..=count as usize).map(|i| a + i as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub t1: f64,
    pub t2: f64,
    pub region: &'static str,
    pub value: f64,
}

/// Rows of the bivariate law: the continuous part at every grid point
/// (row-major, `t1` outer), then the singular part at grid points with
/// `t1 = t2 > t`, then the atom at `(t, t)`.
pub fn grid_rows(law: &ExitLaw, t1: &[f64], t2: &[f64]) -> Result<Vec<GridRow>> {
    let t = law.t();
    let mut rows: Vec<GridRow> = t1
        .par_iter()
        .map(|&x| {
            t2.iter()
                .map(|&y| {
                    let d = law.abs_cont_biv(x, y)?;
                    Ok(GridRow {
                        t1: x,
                        t2: y,
                        region: d.region.label(),
                        value: d.value,
                    })
                })
                .collect::<phasemix::Result<Vec<_>>>()
        })
        .collect::<phasemix::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let diagonal: Vec<f64> = t1
        .iter()
        .copied()
        .filter(|&x| x > t && t2.contains(&x))
        .collect();
    for d in diagonal_rows(law, &diagonal)? {
        rows.push(d);
    }
    let atom = law.dens_biv(t, t)?;
    rows.push(GridRow {
        t1: t,
        t2: t,
        region: atom.region.label(),
        value: atom.value,
    });
    Ok(rows)
}

/// Singular part `f^(0)(u, u)` at each `u > t`.
pub fn diagonal_rows(law: &ExitLaw, points: &[f64]) -> Result<Vec<GridRow>> {
    let rows = points
        .par_iter()
        .map(|&u| {
            let d = law.dens_biv(u, u)?;
            Ok(GridRow {
                t1: u,
                t2: u,
                region: d.region.label(),
                value: d.value,
            })
        })
        .collect::<phasemix::Result<Vec<_>>>()?;
    Ok(rows)
}

pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut out = String::from("t1,t2,region,value\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt17(r.t1),
            fmt17(r.t2),
            r.region,
            fmt17(r.value)
        );
    }
    out
}

/// A table with a header and numeric rows.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|&x| fmt17(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
