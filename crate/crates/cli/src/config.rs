//! Experiment configuration: one TOML document per run.
//!
//! ```toml
//! schema_version = 1
//! output = "out/fig1a"     # optional; `--out` wins
//! seed = 0                 # drives every `"random"` state
//! plot = true
//!
//! [experiment]
//! kind = "twolevel-series" # | scan | embed | optics | fit
//! ...                      # kind-specific keys, see the structs below
//! ```
//!
//! Relative paths in a config (`output`, `csv`) resolve against the
//! directory holding the config; `--out` resolves against the working
//! directory.

use std::fs;
use std::path::{Path, PathBuf};

use ptflow::criticality::{FamilySpec, Observable};
use ptflow::optics::{EPVariant, OpticsConfig};
use ptflow::spectral::ModelKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub plot: bool,
    pub experiment: Experiment,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    TwolevelSeries(SeriesSpec),
    Scan(ScanSpec),
    Embed(EmbedSpec),
    Optics(OpticsSpec),
    Fit(FitSpec),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::TwolevelSeries(_) => "twolevel-series",
            Experiment::Scan(_) => "scan",
            Experiment::Embed(_) => "embed",
            Experiment::Optics(_) => "optics",
            Experiment::Fit(_) => "fit",
        }
    }
}

/// A named basis state, a seeded random state, or explicit `[re, im]` amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(NamedState),
    Amplitudes(Vec<[f64; 2]>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedState {
    /// Basis state 0.
    Up,
    /// Basis state 1.
    Down,
    Random,
}

fn up() -> StateSpec {
    StateSpec::Named(NamedState::Up)
}

fn down() -> StateSpec {
    StateSpec::Named(NamedState::Down)
}

/// D(t) for the two-level model at several values of `a`, one CSV each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    #[serde(default = "one")]
    pub s: f64,
    pub a: Vec<f64>,
    pub t_max: f64,
    #[serde(default = "series_points")]
    pub points: usize,
    #[serde(default = "up")]
    pub psi: StateSpec,
    #[serde(default = "down")]
    pub phi: StateSpec,
}

fn one() -> f64 {
    1.0
}

fn series_points() -> usize {
    2000
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Below,
    Above,
}

/// Offsets |λ − λ_EP| log-spaced over [lo, hi] on one side of the EP.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffsetGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub side: Side,
}

/// Observable against λ; exactly one of `lambdas` and `offsets` is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub family: FamilySpec,
    pub observable: Observable,
    #[serde(default)]
    pub lambda_ep: Option<f64>,
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default)]
    pub offsets: Option<OffsetGrid>,
    /// Time samples per simulated series.
    #[serde(default)]
    pub points: Option<usize>,
    /// Also run the EP classification at `lambda_ep`.
    #[serde(default)]
    pub classify: bool,
    #[serde(default = "up")]
    pub psi: StateSpec,
    #[serde(default = "down")]
    pub phi: StateSpec,
}

impl ScanSpec {
    /// Ascending λ grid.
    pub fn grid(&self) -> CliResult<Vec<f64>> {
        match (&self.lambdas, &self.offsets) {
            (Some(l), None) => Ok(l.clone()),
            (None, Some(o)) => {
                let ep = self.lambda_ep.ok_or_else(|| cfg_err("scan: `offsets` needs `lambda_ep`"))?;
                let d = ptflow::criticality::log_grid(o.lo, o.hi, o.n);
                Ok(match o.side {
                    Side::Below => d.iter().rev().map(|x| ep - x).collect(),
                    Side::Above => d.iter().map(|x| ep + x).collect(),
                })
            }
            _ => Err(cfg_err("scan: give exactly one of `lambdas` and `offsets`")),
        }
    }
}

/// Entanglement entropy of the Hermitian dilation next to D(t).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedSpec {
    pub model: ModelKind,
    pub t_max: f64,
    #[serde(default = "series_points")]
    pub points: usize,
    #[serde(default = "up")]
    pub psi: StateSpec,
    #[serde(default = "down")]
    pub phi: StateSpec,
}

/// Beam-pair experiments; `params` defaults to the reference configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsSpec {
    #[serde(default = "both_variants")]
    pub variants: Vec<EPVariant>,
    /// Write the final fields as binary snapshots.
    #[serde(default)]
    pub snapshots: bool,
    #[serde(default)]
    pub params: OpticsConfig,
}

fn both_variants() -> Vec<EPVariant> {
    vec![EPVariant::DifferentCenters, EPVariant::DifferentWidths]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// Power law: against |λ − λ_EP| when `lambda_ep` is set, else the decay exponent of a series.
    Power,
    /// Exponential relaxation time of a decaying series.
    Exp,
}

/// Refit an existing CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub csv: PathBuf,
    /// `kind` itself names the experiment.
    #[serde(rename = "fit")]
    pub kind: FitKind,
    #[serde(default)]
    pub lambda_ep: Option<f64>,
    #[serde(default)]
    pub x: Option<String>,
    #[serde(default)]
    pub y: Option<String>,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default = "half")]
    pub tail_fraction: f64,
}

fn half() -> f64 {
    0.5
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parsed config plus the raw bytes it was read from.
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub raw: Vec<u8>,
    pub path: PathBuf,
}

impl LoadedConfig {
    /// Resolves a path named inside the config against the config's directory.
    pub fn relative(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            return p.to_path_buf();
        }
        self.path.parent().map_or_else(|| p.to_path_buf(), |d| d.join(p))
    }
}

pub fn load(path: &Path) -> CliResult<LoadedConfig> {
    let raw = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = std::str::from_utf8(&raw).map_err(|e| cfg_err(format!("{}: not UTF-8: {e}", path.display())))?;
    let config = parse(text).map_err(|e| match e {
        CliError::Config(m) => cfg_err(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok(LoadedConfig { config, raw, path: path.to_path_buf() })
}

pub fn parse(text: &str) -> CliResult<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
    validate(&config)?;
    Ok(config)
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(cfg_err(format!("`{name}` must be positive and finite, got {v}")))
    }
}

fn min_points(name: &str, n: usize) -> CliResult<()> {
    if n >= 2 {
        Ok(())
    } else {
        Err(cfg_err(format!("`{name}` must be at least 2, got {n}")))
    }
}

/// Checks that need no numerics; anything subtler is left to the core and
/// surfaces as a numeric failure.
pub fn validate(c: &ExperimentConfig) -> CliResult<()> {
    if c.schema_version != SCHEMA_VERSION {
        return Err(cfg_err(format!("unsupported schema_version {} (this build reads {SCHEMA_VERSION})", c.schema_version)));
    }
    match &c.experiment {
        Experiment::TwolevelSeries(s) => {
            if s.a.is_empty() {
                return Err(cfg_err("twolevel-series: `a` is empty"));
            }
            if let Some(bad) = s.a.iter().find(|a| !a.is_finite() || **a < 0.0) {
                return Err(cfg_err(format!("twolevel-series: `a` entries must be finite and non-negative, got {bad}")));
            }
            positive("s", s.s)?;
            positive("t_max", s.t_max)?;
            min_points("points", s.points)
        }
        Experiment::Scan(s) => {
            let grid = s.grid()?;
            if grid.is_empty() || grid.iter().any(|l| !l.is_finite()) {
                return Err(cfg_err("scan: λ grid is empty or not finite"));
            }
            if let Some(o) = s.offsets {
                positive("offsets.lo", o.lo)?;
                if !(o.hi > o.lo) || o.n < 2 {
                    return Err(cfg_err("scan: `offsets` needs hi > lo and n >= 2"));
                }
            }
            if s.classify && s.lambda_ep.is_none() {
                return Err(cfg_err("scan: `classify` needs `lambda_ep`"));
            }
            s.points.map_or(Ok(()), |p| min_points("points", p))
        }
        Experiment::Embed(e) => {
            positive("t_max", e.t_max)?;
            min_points("points", e.points)
        }
        Experiment::Optics(o) => {
            if o.variants.is_empty() {
                return Err(cfg_err("optics: `variants` is empty"));
            }
            if o.variants.iter().enumerate().any(|(i, v)| o.variants[..i].contains(v)) {
                return Err(cfg_err("optics: `variants` lists a variant twice"));
            }
            Ok(())
        }
        Experiment::Fit(f) => {
            if let Some([lo, hi]) = f.window {
                if !(lo < hi) {
                    return Err(cfg_err(format!("fit: window [{lo}, {hi}] is empty")));
                }
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SERIES: &str = r#"
schema_version = 1
seed = 3

[experiment]
kind = "twolevel-series"
a = [0.25, 0.5]
t_max = 10.0
"#;

    #[test]
    fn parses_with_defaults() {
        let c = parse(SERIES).unwrap();
        assert!(c.plot);
        match c.experiment {
            Experiment::TwolevelSeries(s) => {
                assert_eq!(s.points, 2000);
                assert_eq!(s.psi, StateSpec::Named(NamedState::Up));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = parse(&SERIES.replace("t_max", "tmax")).unwrap_err();
        assert!(e.to_string().contains("tmax"), "{e}");
    }

    #[test]
    fn syntax_errors_name_the_line() {
        let e = parse("schema_version = 1\n[experiment\nkind = 1\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn wrong_schema_version() {
        let e = parse(&SERIES.replace("schema_version = 1", "schema_version = 7")).unwrap_err();
        assert!(matches!(e, CliError::Config(_)));
    }

    #[test]
    fn offset_grids_ascend() {
        let text = r#"
schema_version = 1
[experiment]
kind = "scan"
family = { kind = "two_level", s = 1.0 }
observable = "recurrence_t"
lambda_ep = 1.0
offsets = { lo = 1e-3, hi = 1e-1, n = 5, side = "below" }
"#;
        let c = parse(text).unwrap();
        let Experiment::Scan(s) = c.experiment else { panic!() };
        let g = s.grid().unwrap();
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!((g[4] - 0.999).abs() < 1e-12);
    }

    #[test]
    fn explicit_amplitudes() {
        let c = parse(&SERIES.replace("t_max = 10.0", "t_max = 10.0\npsi = [[1.0, 0.0], [0.0, 1.0]]\nphi = \"random\"")).unwrap();
        let Experiment::TwolevelSeries(s) = c.experiment else { panic!() };
        assert_eq!(s.psi, StateSpec::Amplitudes(vec![[1.0, 0.0], [0.0, 1.0]]));
        assert_eq!(s.phi, StateSpec::Named(NamedState::Random));
    }
}
