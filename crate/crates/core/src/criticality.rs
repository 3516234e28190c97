//! Parameter scans over Hamiltonian families H(λ), power-law exponents of
//! timescales and gaps near an exceptional point, and the classification
//! that predicts the decay exponent at the EP.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{distinguishability_series, recurrence_time, relaxation_time, spectral_recurrence, DensityMatrix, DEFAULT_RECURRENCE_EPS};
use crate::error::{Error, Result};
use crate::fit::{log_log_fit, FLAT_SLOPE};
use crate::io::fmt_g17;
use crate::linalg::{eigenvalues, eigh, normalized, phase_aligned_distance, ComplexMatrix};
use crate::scalar::{cx, re, Cx, Scalar};
use crate::spectral::{classify_phase, decades, eig_biorthogonal, ep_order, gainloss_chain, min_gap, two_level, default_phase_tol, Phase};

/// Largest distance to the EP eigenvector that still counts as coalesced.
pub const COALESCENCE_TOL: f64 = 0.05;

/// A one-parameter family of Hamiltonians.
pub trait Family<T: Scalar>: Sync {
    fn hamiltonian(&self, lambda: T) -> Result<ComplexMatrix<T>>;

    /// JSON description stored alongside scan output.
    fn describe(&self) -> serde_json::Value;
}

/// Built-in families; λ is `a` for the two-level and spectator models and
/// γ for the chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    TwoLevel { s: f64 },
    GainlossChain { n: usize, j: f64 },
    /// Two-level block plus a decoupled real level at `energy`.
    Spectator { s: f64, energy: f64 },
}

impl<T: Scalar> Family<T> for FamilySpec {
    fn hamiltonian(&self, lambda: T) -> Result<ComplexMatrix<T>> {
        match *self {
            FamilySpec::TwoLevel { s } => two_level(T::lit(s), lambda),
            FamilySpec::GainlossChain { n, j } => gainloss_chain(n, T::lit(j), lambda),
            FamilySpec::Spectator { s, energy } => spectator_model(T::lit(s), lambda, T::lit(energy)),
        }
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

/// Wraps a closure as a family.
pub struct FnFamily<F> {
    pub name: String,
    pub f: F,
}

impl<T: Scalar, F: Fn(T) -> Result<ComplexMatrix<T>> + Sync> Family<T> for FnFamily<F> {
    fn hamiltonian(&self, lambda: T) -> Result<ComplexMatrix<T>> {
        (self.f)(lambda)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "kind": "custom", "name": self.name })
    }
}

/// s(σx + i a σz) ⊕ [energy]. For a > 1 the spectator's Γ = 0 sits between
/// the block's ±s√(a²−1), so it is the second-largest-Γ eigenstate and does
/// not take part in the coalescence at a = 1.
pub fn spectator_model<T: Scalar>(s: T, a: T, energy: T) -> Result<ComplexMatrix<T>> {
    if !energy.is_finite() {
        return Err(Error::NonFinite("spectator energy".into()));
    }
    let b = two_level(s, a)?;
    let mut h = ComplexMatrix::zeros(3);
    for i in 0..2 {
        for j in 0..2 {
            h[(i, j)] = b[(i, j)];
        }
    }
    h[(2, 2)] = re(energy);
    Ok(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// First return time of D(t); unbroken side.
    RecurrenceT,
    /// Exponential decay time of D(t); broken side.
    RelaxationTau,
    /// Smallest level spacing; unbroken side.
    GapDeltaOmega,
    /// Γ₁ − Γ₂; broken side.
    GammaGapDeltaGamma,
}

impl Observable {
    fn required_phase(self) -> Phase {
        match self {
            Observable::RecurrenceT | Observable::GapDeltaOmega => Phase::Unbroken,
            Observable::RelaxationTau | Observable::GammaGapDeltaGamma => Phase::Broken,
        }
    }
}

/// Controls how timescales are measured from simulated D(t).
#[derive(Clone, Debug)]
pub struct ScanOptions<T> {
    /// Initial pure states; basis states 0 and 1 when `None`.
    pub states: Option<(Vec<Cx<T>>, Vec<Cx<T>>)>,
    pub points: usize,
    /// Recurrence series length in units of the spectral period.
    pub recurrence_periods: f64,
    /// Relaxation series length in units of 1/ΔΓ.
    pub relaxation_times: f64,
    pub tail_fraction: f64,
    pub recurrence_eps: f64,
}

impl<T> Default for ScanOptions<T> {
    fn default() -> Self {
        Self {
            states: None,
            points: 4000,
            recurrence_periods: 1.5,
            relaxation_times: 12.0,
            tail_fraction: 0.5,
            recurrence_eps: DEFAULT_RECURRENCE_EPS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRecord {
    pub lambda: f64,
    pub phase: Option<Phase>,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    /// Time window the timescale was read from; `None` for spectral observables.
    pub fit_window: Option<(f64, f64)>,
    pub error: Option<String>,
}

impl ScanRecord {
    fn failed(lambda: f64, phase: Option<Phase>, e: Error) -> Self {
        Self { lambda, phase, value: None, stderr: None, fit_window: None, error: Some(e.to_string()) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    pub family: serde_json::Value,
    pub observable: Observable,
    pub lambdas: Vec<f64>,
    pub records: Vec<ScanRecord>,
}

impl ScanResult {
    /// (λ, value) of the points that succeeded.
    pub fn successes(&self) -> Vec<(f64, f64)> {
        self.records.iter().filter_map(|r| r.value.map(|v| (r.lambda, v))).collect()
    }

    /// CSV with columns lambda, value, stderr, phase, error; failed cells are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,value,stderr,phase,error\n");
        let num = |v: Option<f64>| v.map(fmt_g17).unwrap_or_default();
        for r in &self.records {
            let phase = r.phase.map(|p| format!("{p:?}")).unwrap_or_default();
            let err = r.error.as_deref().unwrap_or("").replace('"', "'");
            let err = if err.is_empty() { err } else { format!("\"{err}\"") };
            let _ = writeln!(out, "{},{},{},{},{}", fmt_g17(r.lambda), num(r.value), num(r.stderr), phase, err);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scan result is always serialisable")
    }
}

/// `n` logarithmically spaced values over [lo, hi], ascending.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n).map(|k| (l0 + (l1 - l0) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Default EP probe offsets: 12 log-spaced |Δλ| over [1e-3, 1e-1].
pub fn default_probe_grid() -> Vec<f64> {
    log_grid(1e-3, 1e-1, 12)
}

fn observe<T: Scalar>(h: &ComplexMatrix<T>, observable: Observable, opts: &ScanOptions<T>) -> Result<(Phase, f64, Option<f64>, Option<(f64, f64)>)> {
    let es = eig_biorthogonal(h)?;
    let phase = classify_phase(&es, default_phase_tol::<T>()).phase;
    let want = observable.required_phase();
    if phase != want {
        return Err(match want {
            Phase::Unbroken => Error::BrokenPhase { max_gamma: es.max_abs_gamma().as_f64() },
            _ => Error::InvalidInput(format!("{observable:?} needs the broken phase, found {phase:?}")),
        });
    }
    let gammas: Vec<f64> = es.eigenvalues.iter().map(|e| e.im.as_f64()).collect();
    let delta_gamma = || -> Result<f64> {
        if gammas.len() < 2 {
            return Err(Error::BadDimension("ΔΓ needs at least two levels".into()));
        }
        Ok(gammas[0] - gammas[1])
    };
    let states = || -> Result<(DensityMatrix<T>, DensityMatrix<T>)> {
        match &opts.states {
            Some((a, b)) => Ok((DensityMatrix::pure(a)?, DensityMatrix::pure(b)?)),
            None => Ok((DensityMatrix::basis(h.dim(), 0)?, DensityMatrix::basis(h.dim(), 1)?)),
        }
    };
    match observable {
        Observable::GapDeltaOmega => Ok((phase, min_gap(h)?.as_f64(), None, None)),
        Observable::GammaGapDeltaGamma => Ok((phase, delta_gamma()?, None, None)),
        Observable::RecurrenceT => {
            let sr = spectral_recurrence(&es)?;
            let horizon = sr.lcm_period.unwrap_or(sr.period) * opts.recurrence_periods;
            let (r1, r2) = states()?;
            let series = distinguishability_series(h, &r1, &r2, T::lit(horizon), opts.points)?;
            let r = recurrence_time(&series, opts.recurrence_eps)?;
            Ok((phase, r.value, Some(r.stderr), Some(r.fit_window)))
        }
        Observable::RelaxationTau => {
            let dg = delta_gamma()?;
            if !(dg > 0.0) {
                return Err(Error::InvalidInput("top two decay rates coincide; no single relaxation time".into()));
            }
            let (r1, r2) = states()?;
            let series = distinguishability_series(h, &r1, &r2, T::lit(opts.relaxation_times / dg), opts.points)?;
            let r = relaxation_time(&series, opts.tail_fraction)?;
            Ok((phase, r.value, Some(r.stderr), Some(r.fit_window)))
        }
    }
}

/// Evaluates `observable` at every grid point in parallel. Failures at
/// individual points are recorded, not propagated.
pub fn scan<T: Scalar, F: Family<T> + ?Sized>(family: &F, grid: &[T], observable: Observable, opts: &ScanOptions<T>) -> Result<ScanResult>
where
    ScanOptions<T>: Sync,
{
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("scan grid".into()));
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::InvalidInput("scan grid must be strictly monotone".into()));
    }
    let records = grid
        .par_iter()
        .map(|&l| {
            let lf = l.as_f64();
            let h = match family.hamiltonian(l) {
                Ok(h) => h,
                Err(e) => return ScanRecord::failed(lf, None, e),
            };
            match observe(&h, observable, opts) {
                Ok((phase, v, se, win)) => ScanRecord { lambda: lf, phase: Some(phase), value: Some(v), stderr: se, fit_window: win, error: None },
                Err(e) => {
                    let phase = eig_biorthogonal(&h).ok().map(|es| classify_phase(&es, default_phase_tol::<T>()).phase);
                    ScanRecord::failed(lf, phase, e)
                }
            }
        })
        .collect();
    Ok(ScanResult { family: family.describe(), observable, lambdas: grid.iter().map(|l| l.as_f64()).collect(), records })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    /// Slope of log(observable) against log|λ − λ_EP|.
    pub exponent: f64,
    pub amplitude: f64,
    pub stderr: f64,
    pub r_squared: f64,
    /// λ-range of the points used.
    pub window: (f64, f64),
    pub points: usize,
}

/// Power law observable ≈ amplitude·|λ − λ_EP|^exponent over the successful
/// scan points.
pub fn fit_exponent(sr: &ScanResult, lambda_ep: f64) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> = sr.successes().into_iter().filter(|&(l, v)| v > 0.0 && l != lambda_ep).collect();
    let x: Vec<f64> = pts.iter().map(|&(l, _)| (l - lambda_ep).abs()).collect();
    let y: Vec<f64> = pts.iter().map(|&(_, v)| v).collect();
    let span = decades(&x);
    if pts.len() < 5 || span < 1.0 - 1e-9 {
        return Err(Error::InsufficientDecades { needed: 5, points: pts.len(), decades: span });
    }
    let fit = log_log_fit(&x, &y)?;
    if fit.slope_stderr > 0.1 {
        return Err(Error::FitUnstable { stderr: fit.slope_stderr, reason: "exponent fit".into() });
    }
    if fit.slope.abs() <= FLAT_SLOPE {
        return Err(Error::FitUnstable { stderr: fit.slope_stderr, reason: "observable does not depend on the distance to the EP".into() });
    }
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(ExponentFit {
        exponent: fit.slope,
        amplitude: fit.intercept.exp(),
        stderr: fit.slope_stderr,
        r_squared: fit.r_squared.clamp(0.0, 1.0),
        window: (lo, hi),
        points: pts.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EPClassification {
    pub order: u32,
    pub phi2_coalesces: bool,
    /// Tail exponent δ of D(t) at the EP: 2 on coalescence, else p − 1.
    pub predicted_delta: u32,
    /// +1 or −1: side of λ_EP on which the spectrum is complex.
    pub broken_side: i8,
    /// |Δλ| probes, largest first, with the distance of |φ₂⟩ to |EP⟩ at each.
    pub probe_offsets: Vec<f64>,
    pub distances: Vec<f64>,
}

/// Right eigenvector at the EP: null vector of H − E_EP, with E_EP the
/// midpoint of the closest eigenvalue pair.
fn ep_vector<T: Scalar>(h: &ComplexMatrix<T>) -> Result<Vec<Cx<T>>> {
    let ev = eigenvalues(h)?;
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..ev.len() {
        for j in i + 1..ev.len() {
            let d = (ev[i] - ev[j]).norm().as_f64();
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    if ev.len() < 2 {
        return Err(Error::NoExceptionalPoint);
    }
    let e = (ev[best.1] + ev[best.2]) * cx(T::half(), T::zero());
    let mut a = h.clone();
    for i in 0..a.dim() {
        a[(i, i)] -= e;
    }
    let eig = eigh(&a.adjoint().matmul(&a))?;
    Ok(eig.vectors.column(0))
}

/// Decides whether the eigenstate with the second-largest Γ coalesces at
/// the EP, probing |Δλ| from the largest value inward on the broken side.
///
/// Coalescing means the distance to |EP⟩ never grows and ends below
/// [`COALESCENCE_TOL`]. A distance that stays flat above the tolerance means
/// a spectator. Anything else is reported as [`Error::AmbiguousLimit`].
pub fn classify_ep<T: Scalar, F: Family<T> + ?Sized>(family: &F, lambda_ep: T, probe: Option<&[f64]>) -> Result<EPClassification> {
    let default = default_probe_grid();
    let mut offs: Vec<f64> = probe.unwrap_or(&default).iter().map(|o| o.abs()).collect();
    offs.sort_by(|a, b| b.total_cmp(a));
    let dmax = offs.first().copied().ok_or(Error::EmptyGrid)?;
    let gamma_at = |o: f64| -> Result<f64> {
        let h = family.hamiltonian(lambda_ep + T::lit(o))?;
        Ok(eigenvalues(&h)?.iter().map(|e| e.im.abs().as_f64()).fold(0.0, f64::max))
    };
    let side: i8 = if gamma_at(-dmax)? > gamma_at(dmax)? { -1 } else { 1 };
    let signed: Vec<T> = offs.iter().map(|&o| T::lit(o * side as f64)).collect();
    let order = match ep_order(|l| family.hamiltonian(l), lambda_ep, &signed) {
        Ok(est) => est.p,
        Err(Error::NoCoalescence) => return Err(Error::NoExceptionalPoint),
        Err(e) => return Err(e),
    };
    let ep = ep_vector(&family.hamiltonian(lambda_ep)?)?;
    let distances = signed
        .iter()
        .map(|&o| {
            let es = eig_biorthogonal(&family.hamiltonian(lambda_ep + o)?)?;
            if es.dim() < 2 {
                return Err(Error::NoExceptionalPoint);
            }
            let phi2 = normalized(&es.right_vectors[1]).ok_or(Error::ZeroBranch)?;
            Ok(phase_aligned_distance(&phi2, &ep).as_f64())
        })
        .collect::<Result<Vec<f64>>>()?;
    let last = *distances.last().expect("probe grid is non-empty");
    let monotone = distances.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12);
    let hi = distances.iter().copied().fold(0.0, f64::max);
    let lo = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let phi2_coalesces = if monotone && last < COALESCENCE_TOL {
        true
    } else if lo >= COALESCENCE_TOL && hi - lo <= COALESCENCE_TOL * lo {
        false
    } else {
        return Err(Error::AmbiguousLimit);
    };
    let predicted_delta = if phi2_coalesces { 2 } else { order.saturating_sub(1).max(1) };
    Ok(EPClassification { order, phi2_coalesces, predicted_delta, broken_side: side, probe_offsets: offs, distances })
}
