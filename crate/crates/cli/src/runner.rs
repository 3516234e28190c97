//! One function per experiment kind. Each computes, then hands every
//! artifact to the emitter in a fixed order.

use std::f64::consts::PI;

use ptflow::criticality::{classify_ep, fit_exponent, scan, Family, ScanOptions};
use ptflow::dynamics::{
    distinguishability_series, first_return, recurrence_time, relaxation_time, tail_exponent, DensityMatrix, TimescaleResult,
    DEFAULT_RECURRENCE_EPS,
};
use ptflow::embedding::{entanglement_series, extended_hamiltonian};
use ptflow::io::csv_columns;
use ptflow::metric::metric_pair_for;
use ptflow::optics::{ep_decay_experiment, snapshot_parts, EPVariant};
use ptflow::spectral::{build_pt_hamiltonian, classify_hamiltonian, default_phase_tol, two_level, ModelKind, Phase};
use ptflow::{Matrix, Series64, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EmbedSpec, Experiment, LoadedConfig, NamedState, OpticsSpec, ScanSpec, SeriesSpec, StateSpec};
use crate::emit::Emitter;
use crate::error::{CliError, CliResult, NumericContext};
use crate::fitting::run_fit;
use crate::plot::{Line, Plot};

pub fn run(loaded: &LoadedConfig, em: &mut Emitter) -> CliResult<()> {
    let cfg = &loaded.config;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    log::info!("running {} experiment", cfg.experiment.name());
    match &cfg.experiment {
        Experiment::TwolevelSeries(s) => series(s, cfg.plot, &mut rng, em),
        Experiment::Scan(s) => scan_run(s, cfg.plot, &mut rng, em),
        Experiment::Embed(s) => embed(s, cfg.plot, &mut rng, em),
        Experiment::Optics(s) => optics(s, cfg.plot, em),
        Experiment::Fit(s) => {
            let report = run_fit(s, &loaded.relative(&s.csv))?;
            em.json("fit.json", &report)
        }
    }
}

/// Normalised state of dimension `dim`; random states draw from `rng` in
/// config order, so a seed fixes all of them.
fn resolve_state(spec: &StateSpec, dim: usize, rng: &mut ChaCha8Rng) -> CliResult<Vec<C64>> {
    let mut v: Vec<C64> = match spec {
        StateSpec::Named(NamedState::Up) => basis(dim, 0)?,
        StateSpec::Named(NamedState::Down) => basis(dim, 1)?,
        StateSpec::Named(NamedState::Random) => (0..dim).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
        StateSpec::Amplitudes(a) => {
            if a.len() != dim {
                return Err(CliError::Config(format!("state has {} amplitudes, the model has dimension {dim}", a.len())));
            }
            a.iter().map(|[re, im]| C64::new(*re, *im)).collect()
        }
    };
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(CliError::Config("state has zero or non-finite norm".into()));
    }
    v.iter_mut().for_each(|c| *c /= norm);
    Ok(v)
}

fn basis(dim: usize, k: usize) -> CliResult<Vec<C64>> {
    if k >= dim {
        return Err(CliError::Config(format!("basis state {k} does not exist in dimension {dim}")));
    }
    Ok((0..dim).map(|i| C64::new(if i == k { 1.0 } else { 0.0 }, 0.0)).collect())
}

fn state_pair(psi: &StateSpec, phi: &StateSpec, dim: usize, rng: &mut ChaCha8Rng) -> CliResult<(Vec<C64>, Vec<C64>)> {
    Ok((resolve_state(psi, dim, rng)?, resolve_state(phi, dim, rng)?))
}

#[derive(Serialize)]
struct Predicted {
    kind: &'static str,
    value: f64,
}

#[derive(Serialize)]
struct SeriesEntry {
    a: f64,
    phase: Phase,
    csv: String,
    predicted: Predicted,
    measured: Option<TimescaleResult>,
    measurement_error: Option<String>,
}

#[derive(Serialize)]
struct SeriesSummary<'a> {
    experiment: &'static str,
    s: f64,
    t_max: f64,
    points: usize,
    psi: &'a [C64],
    phi: &'a [C64],
    entries: Vec<SeriesEntry>,
}

/// Closed-form timescale of the two-level model: T below the EP, τ above,
/// the tail exponent at it.
fn two_level_prediction(s: f64, a: f64, phase: Phase) -> Predicted {
    match phase {
        Phase::Unbroken => Predicted { kind: "recurrence_time", value: PI / (s * (1.0 - a * a).sqrt()) },
        Phase::Broken => Predicted { kind: "relaxation_time", value: 1.0 / (2.0 * s * (a * a - 1.0).sqrt()) },
        Phase::Exceptional => Predicted { kind: "tail_exponent", value: 2.0 },
    }
}

/// D below this is rounding residue of the normalised evolution.
const D_FLOOR: f64 = 1e-10;

/// Prefix of a decaying series before it first reaches [`D_FLOOR`].
fn above_floor(sr: &Series64) -> Series64 {
    let n = sr.values.iter().position(|d| *d <= D_FLOOR).unwrap_or(sr.len());
    Series64 { times: sr.times[..n].to_vec(), values: sr.values[..n].to_vec(), meta: None }
}

fn series(spec: &SeriesSpec, plot: bool, rng: &mut ChaCha8Rng, em: &mut Emitter) -> CliResult<()> {
    let (psi, phi) = state_pair(&spec.psi, &spec.phi, 2, rng)?;
    let r1 = DensityMatrix::pure(&psi).context("initial state psi")?;
    let r2 = DensityMatrix::pure(&phi).context("initial state phi")?;
    let mut entries = Vec::new();
    let mut lines = Vec::new();
    for &a in &spec.a {
        let ctx = format!("two-level series at a = {a}");
        let h = two_level(spec.s, a).context(&ctx)?;
        let phase = classify_hamiltonian(&h, default_phase_tol::<f64>()).context(&ctx)?.phase;
        let sr = distinguishability_series(&h, &r1, &r2, spec.t_max, spec.points).context(&ctx)?;
        let csv = format!("distinguishability_a{a}.csv");
        em.text(&csv, &sr.to_csv())?;
        let measured = match phase {
            Phase::Unbroken => recurrence_time(&sr, DEFAULT_RECURRENCE_EPS),
            Phase::Broken => relaxation_time(&above_floor(&sr), 0.5),
            Phase::Exceptional => tail_exponent(&sr, None),
        };
        if let Err(e) = &measured {
            log::warn!("a = {a}: timescale not measured: {e}");
        }
        entries.push(SeriesEntry {
            a,
            phase,
            csv,
            predicted: two_level_prediction(spec.s, a, phase),
            measurement_error: measured.as_ref().err().map(|e| e.to_string()),
            measured: measured.ok(),
        });
        lines.push(Line { label: format!("a = {a}"), x: sr.times, y: sr.values });
    }
    let all_decay = entries.iter().all(|e| e.phase != Phase::Unbroken);
    em.json(
        "summary.json",
        &SeriesSummary { experiment: "twolevel-series", s: spec.s, t_max: spec.t_max, points: spec.points, psi: &psi, phi: &phi, entries },
    )?;
    if plot {
        let p = Plot {
            title: "Distinguishability of the two-level model".into(),
            x_label: "t".into(),
            y_label: "D(t)".into(),
            log_x: all_decay,
            log_y: all_decay,
            lines,
        };
        em.text("distinguishability.svg", &p.render())?;
    }
    Ok(())
}

fn scan_run(spec: &ScanSpec, plot: bool, rng: &mut ChaCha8Rng, em: &mut Emitter) -> CliResult<()> {
    let grid = spec.grid()?;
    let mut opts = ScanOptions::<f64>::default();
    if let Some(p) = spec.points {
        opts.points = p;
    }
    let default_states = spec.psi == StateSpec::Named(NamedState::Up) && spec.phi == StateSpec::Named(NamedState::Down);
    if !default_states {
        let dim = Family::<f64>::hamiltonian(&spec.family, grid[0]).context("building the family at the first grid point")?.dim();
        opts.states = Some(state_pair(&spec.psi, &spec.phi, dim, rng)?);
    }
    let sr = scan(&spec.family, &grid, spec.observable, &opts).context("scan")?;
    let failed = sr.records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} of {} scan points failed; see scan.csv", grid.len());
    }
    em.text("scan.csv", &sr.to_csv())?;
    em.json("scan.json", &sr)?;
    let ok = sr.successes();
    if let Some(ep) = spec.lambda_ep {
        let fit = fit_exponent(&sr, ep).context("exponent fit over the scan")?;
        log::info!("exponent {:.4} ± {:.4}", fit.exponent, fit.stderr);
        em.json("fit.json", &fit)?;
        if spec.classify {
            let cls = classify_ep(&spec.family, ep, None).context("EP classification")?;
            em.json("classification.json", &cls)?;
        }
    }
    if plot {
        let (x, log, x_label) = match spec.lambda_ep {
            Some(ep) => (ok.iter().map(|p| (p.0 - ep).abs()).collect(), true, "|λ − λ_EP|"),
            None => (ok.iter().map(|p| p.0).collect(), false, "λ"),
        };
        let y_label = serde_json::to_value(spec.observable).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        let p = Plot {
            title: format!("{y_label} scan"),
            x_label: x_label.into(),
            y_label: y_label.clone(),
            log_x: log,
            log_y: log,
            lines: vec![Line { label: y_label, x, y: ok.iter().map(|p| p.1).collect() }],
        };
        em.text("scan.svg", &p.render())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EmbedSummary<'a> {
    experiment: &'static str,
    model: ModelKind,
    psi: &'a [C64],
    phi: &'a [C64],
    c: f64,
    eta_eigenvalues: &'a [f64],
    hermiticity_residual: f64,
    /// π/(2s√(1−a²)) for the two-level model.
    predicted_entropy_period: Option<f64>,
    entropy_period: Option<f64>,
    distinguishability_period: Option<f64>,
    eta: &'a Matrix,
    h_s: &'a Matrix,
    v: &'a Matrix,
}

fn embed(spec: &EmbedSpec, plot: bool, rng: &mut ChaCha8Rng, em: &mut Emitter) -> CliResult<()> {
    let h = build_pt_hamiltonian::<f64>(&spec.model).context("building the model")?;
    let (psi, phi) = state_pair(&spec.psi, &spec.phi, h.dim(), rng)?;
    let mp = metric_pair_for(&h).context("metric of the model")?;
    let eh = extended_hamiltonian(&h, &mp).context("extended Hamiltonian")?;
    let es = entanglement_series(&h, &mp, &psi, &phi, spec.t_max, spec.points).context("entanglement series")?;
    em.text("entanglement.csv", &es.to_csv())?;
    let period = |v: &[f64], what: &str| match first_return(&es.times, v, DEFAULT_RECURRENCE_EPS) {
        Ok((t, _)) => Some(t),
        Err(e) => {
            log::warn!("{what} period not found: {e}");
            None
        }
    };
    let predicted = match spec.model {
        ModelKind::TwoLevel { s, a } => Some(PI / (2.0 * s * (1.0 - a * a).sqrt())),
        ModelKind::GainlossChain { .. } => None,
    };
    em.json(
        "embed.json",
        &EmbedSummary {
            experiment: "embed",
            model: spec.model,
            psi: &psi,
            phi: &phi,
            c: mp.c,
            eta_eigenvalues: &mp.eta_eigenvalues,
            hermiticity_residual: eh.hermiticity_residual,
            predicted_entropy_period: predicted,
            entropy_period: period(&es.entropy, "entropy"),
            distinguishability_period: period(&es.distinguishability, "distinguishability"),
            eta: &mp.eta,
            h_s: &eh.h_s,
            v: &eh.v,
        },
    )?;
    if plot {
        let p = Plot {
            title: "Entanglement entropy and distinguishability".into(),
            x_label: "t".into(),
            y_label: "S(t), D(t)".into(),
            lines: vec![
                Line { label: "S".into(), x: es.times.clone(), y: es.entropy.clone() },
                Line { label: "D".into(), x: es.times.clone(), y: es.distinguishability.clone() },
            ],
            ..Plot::default()
        };
        em.text("entanglement.svg", &p.render())?;
    }
    Ok(())
}

fn variant_name(v: EPVariant) -> &'static str {
    match v {
        EPVariant::DifferentCenters => "different_centers",
        EPVariant::DifferentWidths => "different_widths",
    }
}

#[derive(Serialize)]
struct OpticsEntry {
    variant: EPVariant,
    csv: String,
    fit: Option<ptflow::criticality::ExponentFit>,
    d_inf: Option<f64>,
    oscillation_period: Option<f64>,
}

#[derive(Serialize)]
struct OpticsSummary<'a> {
    experiment: &'static str,
    params: &'a ptflow::optics::OpticsConfig,
    results: Vec<OpticsEntry>,
}

fn optics(spec: &OpticsSpec, plot: bool, em: &mut Emitter) -> CliResult<()> {
    // variants are independent; results come back in config order
    let results = spec
        .variants
        .par_iter()
        .map(|&v| ep_decay_experiment::<f64>(&spec.params, v).context(format!("optics {}", variant_name(v))))
        .collect::<CliResult<Vec<_>>>()?;
    let mut entries = Vec::new();
    let mut lines = Vec::new();
    for r in &results {
        let name = variant_name(r.variant);
        let csv = format!("optics_{name}.csv");
        em.text(&csv, &r.series.to_csv())?;
        if spec.snapshots {
            for (k, beam) in [&r.final_fields.0, &r.final_fields.1].into_iter().enumerate() {
                let (bytes, meta) = snapshot_parts(beam);
                em.bytes(&format!("optics_{name}_beam{}.bin", k + 1), &bytes)?;
                em.json(&format!("optics_{name}_beam{}.json", k + 1), &meta)?;
            }
        }
        lines.push(Line { label: format!("{name} D"), x: r.series.z.clone(), y: r.series.d.clone() });
        if let Some(d_inf) = r.d_inf {
            let dev: Vec<f64> = r.series.d.iter().map(|d| (d - d_inf).abs()).collect();
            em.text(&format!("optics_{name}_deviation.csv"), &csv_columns(&["z", "abs_D_minus_D_inf"], &[&r.series.z, &dev]))?;
            lines.push(Line { label: format!("{name} |D−D∞|"), x: r.series.z.clone(), y: dev });
        }
        entries.push(OpticsEntry { variant: r.variant, csv, fit: r.fit.clone(), d_inf: r.d_inf, oscillation_period: r.oscillation_period });
    }
    let at_ep = results.iter().all(|r| r.fit.is_some());
    em.json("optics.json", &OpticsSummary { experiment: "optics", params: &spec.params, results: entries })?;
    if plot {
        let p = Plot {
            title: "Beam distinguishability".into(),
            x_label: "z".into(),
            y_label: "D(z)".into(),
            log_x: at_ep,
            log_y: at_ep,
            lines,
        };
        em.text("optics.svg", &p.render())?;
    }
    Ok(())
}
