//! CSV tables and the JSON run manifest.
//!
//! CSV schema contract: a header row is always present, values are
//! comma-separated with "." as the decimal mark, floats carry 17
//! significant digits, lines end with "\n", and optional cells are empty.
//! Files are written atomically (temp file in the target directory, then
//! rename), so a failed run leaves no partial output behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use udw_cavity::experiments::{EstimatorPoint, RowFlag, SweepRow};

use crate::CliError;

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn fmt_flags(flags: &[RowFlag]) -> String {
    flags
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// A fully rendered CSV table.
pub struct Table {
    pub name: String,
    pub text: String,
}

impl Table {
    pub fn new(name: &str, header: &str, rows: Vec<String>) -> Self {
        let mut text = String::with_capacity(rows.len() * 96 + header.len() + 1);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(&row);
            text.push('\n');
        }
        Table {
            name: name.to_string(),
            text,
        }
    }
}

const SWEEP_HEADER: &str = "R,L,m,anchor,a,tau_transit_schwarzschild,tau_transit_rindler,\
                            p1_schwarzschild,p1_rindler,ratio,estimator,flags";

pub fn sweep_table(name: &str, rows: &[SweepRow]) -> Table {
    let body = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                fmt_float(r.radius),
                fmt_float(r.length),
                fmt_float(r.mass),
                r.anchor,
                fmt_opt(r.accel),
                fmt_opt(r.tau_end_schwarzschild),
                fmt_opt(r.tau_end_rindler),
                fmt_opt(r.p1_schwarzschild),
                fmt_opt(r.p1_rindler),
                fmt_opt(r.ratio),
                fmt_opt(r.estimator),
                fmt_flags(&r.flags)
            )
        })
        .collect();
    Table::new(name, SWEEP_HEADER, body)
}

const PROFILE_HEADER: &str = "fraction,R,L,m,anchor,a,tau_end_schwarzschild,tau_end_rindler,\
                              p1_schwarzschild,p1_rindler,ratio,estimator,flags";

pub fn profile_table(name: &str, rows: &[SweepRow]) -> Table {
    let body = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                fmt_opt(r.tau_fraction),
                fmt_float(r.radius),
                fmt_float(r.length),
                fmt_float(r.mass),
                r.anchor,
                fmt_opt(r.accel),
                fmt_opt(r.tau_end_schwarzschild),
                fmt_opt(r.tau_end_rindler),
                fmt_opt(r.p1_schwarzschild),
                fmt_opt(r.p1_rindler),
                fmt_opt(r.ratio),
                fmt_opt(r.estimator),
                fmt_flags(&r.flags)
            )
        })
        .collect();
    Table::new(name, PROFILE_HEADER, body)
}

/// Estimator tables carry exactly the four documented columns; callers must
/// ensure every grid point is valid beforehand.
pub fn estimator_table(name: &str, points: &[EstimatorPoint]) -> Result<Table, CliError> {
    let mut body = Vec::with_capacity(points.len());
    for p in points {
        let ratio = p.ratio.ok_or_else(|| {
            CliError::validation(format!(
                "estimator grid point R = {}, L = {} places the cavity inside the horizon",
                p.radius, p.length
            ))
        })?;
        body.push(format!(
            "{},{},{},{}",
            fmt_float(p.radius),
            fmt_float(p.length),
            fmt_float(p.mass),
            fmt_float(ratio)
        ));
    }
    Ok(Table::new(name, "R,L,m,estimator", body))
}

/// Estimator table for user-chosen grids, where invalid cells are flagged
/// rather than rejected.
pub fn estimator_sweep_table(name: &str, points: &[EstimatorPoint]) -> Table {
    let body = points
        .iter()
        .map(|p| {
            format!(
                "{},{},{},{},{}",
                fmt_float(p.radius),
                fmt_float(p.length),
                fmt_float(p.mass),
                fmt_opt(p.ratio),
                fmt_flags(&p.flags)
            )
        })
        .collect();
    Table::new(name, "R,L,m,estimator,flags", body)
}

/// Conventions in force for every number this binary emits, echoed in the
/// manifest so outputs are self-describing.
#[derive(Debug, Serialize)]
pub struct Conventions {
    /// Per-mode normalization of the interaction: each mode enters the
    /// probabilities with weight 1/(omega_n L).
    pub mode_normalization: &'static str,
    /// The estimator is the tortoise-coordinate difference over the proper
    /// length; the closed form carries a plus sign on the logarithm.
    pub estimator_form: &'static str,
    pub estimator_log_sign: &'static str,
    /// Sharp switching: the coupling is the indicator of the transit window.
    pub switching: &'static str,
    pub units: &'static str,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            mode_normalization: "1/sqrt(omega_n * L) per mode amplitude; 1/(omega_n * L) per probability term",
            estimator_form: "tortoise_difference_over_proper_length",
            estimator_log_sign: "plus",
            switching: "sharp_transit_window",
            units: "geometric (G = c = hbar = 1), quantities in units of the black-hole mass",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub config: &'a crate::config::RunConfig,
    pub conventions: Conventions,
    pub outputs: Vec<String>,
    pub rows: usize,
    pub skipped_rows: usize,
    pub unitarity_residual_max: Option<f64>,
    pub threads: usize,
    pub wall_time_ms: u128,
}

/// Write `text` to `dir/name` atomically.
pub fn write_atomic(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("cannot create output directory {dir:?}: {e}")))?;
    let mut tmp = tempfile::Builder::new()
        .prefix(".")
        .suffix(".tmp")
        .tempfile_in(dir)
        .map_err(|e| CliError::io(format!("cannot create temp file in {dir:?}: {e}")))?;
    tmp.write_all(text.as_bytes())
        .map_err(|e| CliError::io(format!("write failed: {e}")))?;
    tmp.flush().map_err(|e| CliError::io(format!("flush failed: {e}")))?;
    let path = dir.join(name);
    tmp.persist(&path)
        .map_err(|e| CliError::io(format!("cannot move output into place at {path:?}: {e}")))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_has_17_significant_digits() {
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        let x = 5.109968638639047e-8;
        let parsed: f64 = fmt_float(x).parse().unwrap();
        assert_eq!(parsed, x, "17 significant digits round-trip f64");
    }

    #[test]
    fn tables_have_header_and_lf_endings() {
        let t = Table::new("x.csv", "a,b", vec!["1,2".into(), "3,4".into()]);
        assert_eq!(t.text, "a,b\n1,2\n3,4\n");
        assert!(!t.text.contains('\r'));
    }
}
