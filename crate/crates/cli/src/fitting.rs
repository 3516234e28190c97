//! Refitting of CSV files produced by earlier runs (or by anything else
//! with a header row).
//!
//! * `power` with `lambda_ep`: columns `lambda`, `value` by default; the
//!   exponent of value against |λ − λ_EP|.
//! * `power` without `lambda_ep`: first two columns as (t, D); the decay
//!   exponent −δ of D ~ t^−δ over `window` (default: last decade).
//! * `exp`: first two columns as (t, D); the relaxation time τ over the
//!   final `tail_fraction` of the samples.
//!
//! Rows whose chosen cells are empty or not numbers are skipped, which is
//! how failed scan points appear.

use std::path::{Path, PathBuf};

use ptflow::criticality::{fit_exponent, Observable, ScanRecord, ScanResult};
use ptflow::dynamics::{relaxation_time, tail_exponent, DistinguishabilitySeries};
use serde::Serialize;

use crate::config::{FitKind, FitSpec};
use crate::error::{CliError, CliResult, NumericContext};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub source: String,
    pub kind: FitKind,
    pub x_column: String,
    pub y_column: String,
    pub lambda_ep: Option<f64>,
    /// Power-law slope; `None` for `exp`.
    pub exponent: Option<f64>,
    /// Relaxation time; `None` for `power`.
    pub tau: Option<f64>,
    pub stderr: f64,
    pub window: (f64, f64),
    pub points: usize,
    pub r_squared: Option<f64>,
    pub amplitude: Option<f64>,
}

pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for r in rdr.records() {
        rows.push(r.map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect());
    }
    Ok(Table { headers, rows })
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Config(format!("{}: malformed CSV: {other:?}", path.display())),
    }
}

impl Table {
    fn column(&self, name: Option<&str>, fallback: usize, default_name: &str) -> CliResult<(usize, String)> {
        let want = name.unwrap_or(default_name);
        if let Some(i) = self.headers.iter().position(|h| h == want) {
            return Ok((i, want.to_string()));
        }
        if name.is_none() && fallback < self.headers.len() {
            return Ok((fallback, self.headers[fallback].clone()));
        }
        Err(CliError::Config(format!("CSV has no column `{want}` (columns: {})", self.headers.join(", "))))
    }

    /// Numeric (x, y) pairs, skipping rows where either cell is blank or not a finite number.
    fn pairs(&self, xi: usize, yi: usize) -> (Vec<f64>, Vec<f64>) {
        let num = |s: Option<&String>| s.and_then(|v| v.parse::<f64>().ok()).filter(|v| v.is_finite());
        self.rows.iter().filter_map(|r| Some((num(r.get(xi))?, num(r.get(yi))?))).unzip()
    }
}

pub fn run_fit(spec: &FitSpec, csv_path: &Path) -> CliResult<FitReport> {
    let table = read_table(csv_path)?;
    let power_vs_lambda = spec.kind == FitKind::Power && spec.lambda_ep.is_some();
    let (xi, x_name) = table.column(spec.x.as_deref(), 0, if power_vs_lambda { "lambda" } else { "t" })?;
    let (yi, y_name) = table.column(spec.y.as_deref(), 1, if power_vs_lambda { "value" } else { "D" })?;
    let (x, y) = table.pairs(xi, yi);
    if x.len() < 2 {
        return Err(CliError::Config(format!("{}: fewer than two numeric rows in `{x_name}`, `{y_name}`", csv_path.display())));
    }
    let mut report = FitReport {
        source: csv_path.display().to_string(),
        kind: spec.kind,
        x_column: x_name,
        y_column: y_name,
        lambda_ep: spec.lambda_ep,
        exponent: None,
        tau: None,
        stderr: f64::NAN,
        window: (f64::NAN, f64::NAN),
        points: 0,
        r_squared: None,
        amplitude: None,
    };
    if let (FitKind::Power, Some(ep)) = (spec.kind, spec.lambda_ep) {
        let window = spec.window.map(|[lo, hi]| (lo, hi));
        let keep = |d: f64| window.is_none_or(|(lo, hi)| d >= lo && d <= hi);
        let records: Vec<ScanRecord> = x
            .iter()
            .zip(&y)
            .filter(|(l, _)| keep((**l - ep).abs()))
            .map(|(&lambda, &value)| ScanRecord { lambda, phase: None, value: Some(value), stderr: None, fit_window: None, error: None })
            .collect();
        let sr = ScanResult {
            family: serde_json::Value::Null,
            // only the records matter to the fit
            observable: Observable::RecurrenceT,
            lambdas: records.iter().map(|r| r.lambda).collect(),
            records,
        };
        let f = fit_exponent(&sr, ep).context("power-law fit")?;
        report.exponent = Some(f.exponent);
        report.stderr = f.stderr;
        report.window = f.window;
        report.points = f.points;
        report.r_squared = Some(f.r_squared);
        report.amplitude = Some(f.amplitude);
        return Ok(report);
    }
    let series = DistinguishabilitySeries::from_samples(x, y).context("reading series")?;
    let r = match spec.kind {
        FitKind::Power => tail_exponent(&series, spec.window.map(|[lo, hi]| (lo, hi))).context("decay exponent fit")?,
        FitKind::Exp => relaxation_time(&series, spec.tail_fraction).context("relaxation fit")?,
    };
    match spec.kind {
        FitKind::Power => report.exponent = Some(-r.value),
        FitKind::Exp => report.tau = Some(r.value),
    }
    report.stderr = r.stderr;
    report.window = r.fit_window;
    report.points = series.times.iter().filter(|t| **t >= r.fit_window.0 && **t <= r.fit_window.1).count();
    Ok(report)
}

/// Spec for the `fit` subcommand.
pub fn spec_from_args(csv: PathBuf, kind: FitKind, lambda_ep: Option<f64>, x: Option<String>, y: Option<String>, window: Option<Vec<f64>>) -> CliResult<FitSpec> {
    let window = match window.as_deref() {
        None => None,
        Some(&[lo, hi]) if lo < hi => Some([lo, hi]),
        Some(w) => return Err(CliError::Config(format!("--window takes LO,HI with LO < HI, got {w:?}"))),
    };
    Ok(FitSpec { csv, kind, lambda_ep, x, y, window, tail_fraction: 0.5 })
}
