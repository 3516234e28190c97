//! Normalised non-unitary evolution ρ(t) = U ρ U† / tr(U ρ U†) with
//! U = e^{−iHt}, trace-distance series, and the timescales read off them.

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{linear_fit, log_log_fit, FLAT_SLOPE};
use crate::io::csv_columns;
use crate::linalg::{eigenvalues, eigvalsh, inner, propagator, ComplexMatrix};
use crate::scalar::{cx, re, Cx, Scalar};
use crate::spectral::{Eigensystem, EXCEPTIONAL_COND};

/// Default return tolerance for [`recurrence_time`].
pub const DEFAULT_RECURRENCE_EPS: f64 = 1e-6;

/// Tolerance that cannot drop below what the scalar type resolves.
fn floor_tol<T: Scalar>(tol: f64) -> T {
    T::lit(tol).max(T::lit(64.0) * T::epsilon())
}

/// Hermitian, unit-trace, positive semidefinite N×N matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityMatrix<T> {
    rho: ComplexMatrix<T>,
}

impl<T: Scalar> DensityMatrix<T> {
    /// Validates Hermiticity and unit trace to 1e-12 and eigenvalues ≥ −1e-10.
    pub fn new(rho: ComplexMatrix<T>) -> Result<Self> {
        if !rho.is_finite() {
            return Err(Error::NonFinite("density matrix".into()));
        }
        let herm = rho.hermiticity_residual();
        if herm > floor_tol(1e-12) {
            return Err(Error::InvalidInput(format!("density matrix not Hermitian (residual {:.3e})", herm.as_f64())));
        }
        let tr = rho.trace();
        if (tr - Cx::from(T::one())).norm() > floor_tol(1e-12) {
            return Err(Error::InvalidInput(format!("density matrix trace is {tr}, expected 1")));
        }
        let min = eigvalsh(&rho)?.first().copied().unwrap_or_else(T::zero);
        if min < -floor_tol::<T>(1e-10) {
            return Err(Error::InvalidInput(format!("density matrix has eigenvalue {min}")));
        }
        Ok(Self { rho: rho.hermitian_part() })
    }

    /// |ψ⟩⟨ψ| for the normalised ψ.
    pub fn pure(psi: &[Cx<T>]) -> Result<Self> {
        let n = psi.len();
        if n == 0 {
            return Err(Error::BadDimension("empty state vector".into()));
        }
        let norm2: T = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > T::zero()) || !norm2.is_finite() {
            return Err(Error::InvalidInput("state vector has zero or non-finite norm".into()));
        }
        let m = ComplexMatrix::outer(psi, psi).scale_real(T::one() / norm2);
        Ok(Self { rho: m.hermitian_part() })
    }

    /// Basis projector |k⟩⟨k|.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::BadDimension(format!("basis index {k} out of range for dimension {n}")));
        }
        let mut v = vec![Cx::zero(); n];
        v[k] = Cx::from(T::one());
        Self::pure(&v)
    }

    /// Rescales an unnormalised positive operator to unit trace.
    fn from_unnormalized(m: ComplexMatrix<T>) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::Overflow("propagated density matrix".into()));
        }
        let tr = m.trace().re;
        let guard = T::lit(1e-300).max(T::min_positive_value());
        if !(tr > guard) {
            return Err(Error::NormalizationUnderflow { trace: tr.as_f64() });
        }
        Ok(Self { rho: m.scale_real(T::one() / tr).hermitian_part() })
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        eigvalsh(&self.rho)
    }
}

/// Largest Im E over the spectrum, used to keep e^{−iHt} bounded; the
/// scalar factor cancels in the normalisation.
fn growth_rate<T: Scalar>(h: &ComplexMatrix<T>) -> Result<T> {
    Ok(eigenvalues(h)?.iter().map(|e| e.im).fold(T::neg_infinity(), T::max).max(T::zero()))
}

fn shifted<T: Scalar>(h: &ComplexMatrix<T>, gamma: T) -> ComplexMatrix<T> {
    let mut hs = h.clone();
    for i in 0..hs.dim() {
        hs[(i, i)] += cx(T::zero(), -gamma);
    }
    hs
}

fn check_time<T: Scalar>(t: T) -> Result<()> {
    if !t.is_finite() || t < T::zero() {
        return Err(Error::InvalidInput(format!("evolution time must be finite and non-negative, got {t}")));
    }
    Ok(())
}

fn conjugate<T: Scalar>(u: &ComplexMatrix<T>, rho: &DensityMatrix<T>) -> ComplexMatrix<T> {
    u.matmul(rho.matrix()).matmul(&u.adjoint())
}

/// ρ(t) under the normalised PT dynamics, via the Padé matrix exponential
/// (valid at exceptional points).
pub fn evolve<T: Scalar>(h: &ComplexMatrix<T>, rho0: &DensityMatrix<T>, t: T) -> Result<DensityMatrix<T>> {
    check_time(t)?;
    if h.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch(h.dim(), rho0.dim()));
    }
    if t == T::zero() {
        return Ok(rho0.clone());
    }
    let hs = shifted(h, growth_rate(h)?);
    let u = propagator(&hs, t)?;
    DensityMatrix::from_unnormalized(conjugate(&u, rho0))
}

/// Same as [`evolve`] but through the spectral decomposition Σ e^{−iE_n t}|φ_n⟩⟨χ_n|/⟨χ_n|φ_n⟩.
pub fn evolve_spectral<T: Scalar>(es: &Eigensystem<T>, rho0: &DensityMatrix<T>, t: T) -> Result<DensityMatrix<T>> {
    check_time(t)?;
    if es.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch(es.dim(), rho0.dim()));
    }
    if !(es.cond_eigvec.as_f64() <= EXCEPTIONAL_COND) {
        return Err(Error::DefectiveMatrix { cond: es.cond_eigvec.as_f64() });
    }
    let g = es.eigenvalues.iter().map(|e| e.im).fold(T::zero(), T::max);
    let u = es.spectral_sum(|e| cx((e.im - g) * t, -e.re * t).exp());
    DensityMatrix::from_unnormalized(conjugate(&u, rho0))
}

/// Unnormalised e^{−iHt}ψ.
pub fn propagate_state<T: Scalar>(h: &ComplexMatrix<T>, psi: &[Cx<T>], t: T) -> Result<Vec<Cx<T>>> {
    check_time(t)?;
    if h.dim() != psi.len() {
        return Err(Error::DimensionMismatch(h.dim(), psi.len()));
    }
    let out = propagator(h, t)?.mul_vec(psi);
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Overflow("state propagation".into()));
    }
    Ok(out)
}

/// ½ Σ|μ_i| over the eigenvalues of ρ1 − ρ2, clamped to [0, 1].
pub fn trace_distance<T: Scalar>(rho1: &DensityMatrix<T>, rho2: &DensityMatrix<T>) -> Result<T> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(rho1.dim(), rho2.dim()));
    }
    let diff = rho1.matrix() - rho2.matrix();
    let mu = eigvalsh(&diff)?;
    let d = T::half() * mu.iter().map(|m| m.abs()).sum::<T>();
    Ok(d.max(T::zero()).min(T::one()))
}

/// Trace distance of two pure states, √(1 − |⟨ψ|φ⟩|²) after normalisation.
pub fn pure_state_distance<T: Scalar>(psi: &[Cx<T>], phi: &[Cx<T>]) -> Result<T> {
    if psi.len() != phi.len() {
        return Err(Error::DimensionMismatch(psi.len(), phi.len()));
    }
    let np: T = psi.iter().map(|z| z.norm_sqr()).sum();
    let nf: T = phi.iter().map(|z| z.norm_sqr()).sum();
    if !(np > T::zero() && nf > T::zero()) {
        return Err(Error::InvalidInput("zero state vector".into()));
    }
    let ov = inner(psi, phi).norm_sqr() / (np * nf);
    Ok((T::one() - ov).max(T::zero()).sqrt())
}

/// Provenance of a simulated series.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesMeta<T> {
    pub hamiltonian: ComplexMatrix<T>,
    pub rho1: DensityMatrix<T>,
    pub rho2: DensityMatrix<T>,
}

/// D(t_k) on a uniform grid.
#[derive(Clone, Debug, Serialize)]
pub struct DistinguishabilitySeries<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    pub meta: Option<SeriesMeta<T>>,
}

impl<T: Scalar> DistinguishabilitySeries<T> {
    /// Wraps externally produced samples (no provenance).
    pub fn from_samples(times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch(times.len(), values.len()));
        }
        if times.len() < 2 {
            return Err(Error::InvalidInput("series needs at least two samples".into()));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("series samples".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("series times must increase strictly".into()));
        }
        Ok(Self { times, values, meta: None })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with columns t, D.
    pub fn to_csv(&self) -> String {
        let t: Vec<f64> = self.times.iter().map(|v| v.as_f64()).collect();
        let d: Vec<f64> = self.values.iter().map(|v| v.as_f64()).collect();
        csv_columns(&["t", "D"], &[&t, &d])
    }
}

/// Uniform grid of `points` samples over [0, t_max], endpoints included.
pub fn time_grid<T: Scalar>(t_max: T, points: usize) -> Result<Vec<T>> {
    if points < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 grid points, got {points}")));
    }
    if !(t_max > T::zero()) || !t_max.is_finite() {
        return Err(Error::InvalidInput(format!("t_max must be positive, got {t_max}")));
    }
    let dt = t_max / T::from_usize_lossy(points - 1);
    Ok((0..points).map(|k| if k == points - 1 { t_max } else { dt * T::from_usize_lossy(k) }).collect())
}

/// D(t) between the two evolved states on `points` grid samples over
/// [0, t_max]. Grid points are evaluated independently and in parallel.
pub fn distinguishability_series<T: Scalar>(
    h: &ComplexMatrix<T>,
    rho1: &DensityMatrix<T>,
    rho2: &DensityMatrix<T>,
    t_max: T,
    points: usize,
) -> Result<DistinguishabilitySeries<T>> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(rho1.dim(), rho2.dim()));
    }
    if h.dim() != rho1.dim() {
        return Err(Error::DimensionMismatch(h.dim(), rho1.dim()));
    }
    let times = time_grid(t_max, points)?;
    let hs = shifted(h, growth_rate(h)?);
    let values = times
        .par_iter()
        .map(|&t| {
            if t == T::zero() {
                return trace_distance(rho1, rho2);
            }
            let u = propagator(&hs, t)?;
            let a = DensityMatrix::from_unnormalized(conjugate(&u, rho1))?;
            let b = DensityMatrix::from_unnormalized(conjugate(&u, rho2))?;
            trace_distance(&a, &b)
        })
        .collect::<Result<Vec<T>>>()?;
    let meta = SeriesMeta { hamiltonian: h.clone(), rho1: rho1.clone(), rho2: rho2.clone() };
    Ok(DistinguishabilitySeries { times, values, meta: Some(meta) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TimescaleKind {
    Recurrence,
    Relaxation,
    TailExponent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimescaleResult {
    pub kind: TimescaleKind,
    pub value: f64,
    pub stderr: f64,
    pub fit_window: (f64, f64),
}

/// First return of a sampled signal to its initial value, after it has
/// departed by more than 10·eps.
///
/// A return is either a crossing of v(0) in the same direction the signal
/// left it, located by linear interpolation, or a tangential touch (local
/// minimum of |v − v(0)| that is below eps, or that is at least 16 times
/// deeper than both neighbours and small against the largest excursion),
/// located at the vertex of the parabola through the three samples.
/// Returns (time, uncertainty) with uncertainty half a grid step.
pub fn first_return(times: &[f64], values: &[f64], eps: f64) -> Result<(f64, f64)> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch(times.len(), values.len()));
    }
    if times.len() < 3 {
        return Err(Error::NoRecurrence);
    }
    let g: Vec<f64> = values.iter().map(|v| v - values[0]).collect();
    let mut departed = false;
    let mut max_dev: f64 = 0.0;
    let mut initial_dir = 0.0;
    for k in 1..g.len() {
        if initial_dir == 0.0 && g[k] != 0.0 {
            initial_dir = g[k].signum();
        }
        if !departed {
            if g[k].abs() > 10.0 * eps {
                departed = true;
            }
            max_dev = max_dev.max(g[k].abs());
            continue;
        }
        max_dev = max_dev.max(g[k].abs());
        let h = times[k] - times[k - 1];
        // transverse crossing in the original direction
        if g[k - 1] * g[k] < 0.0 && (g[k] - g[k - 1]).signum() == initial_dir {
            let frac = g[k - 1] / (g[k - 1] - g[k]);
            return Ok((times[k - 1] + frac * h, 0.5 * h));
        }
        if g[k] == 0.0 && (g[k] - g[k - 1]).signum() == initial_dir {
            return Ok((times[k], 0.5 * h));
        }
        if k + 1 < g.len() {
            let (a, b, c) = (g[k - 1].abs(), g[k].abs(), g[k + 1].abs());
            let is_min = b <= a && b <= c;
            let deep = b <= a.min(c) / 16.0 && b < 0.05 * max_dev;
            if is_min && (b < eps || deep) {
                let denom = g[k - 1] - 2.0 * g[k] + g[k + 1];
                let shift = if denom != 0.0 { 0.5 * (g[k - 1] - g[k + 1]) / denom } else { 0.0 };
                return Ok((times[k] + shift.clamp(-1.0, 1.0) * h, 0.5 * h));
            }
        }
    }
    Err(Error::NoRecurrence)
}

/// Operational recurrence time of a distinguishability series.
pub fn recurrence_time<T: Scalar>(series: &DistinguishabilitySeries<T>, eps: f64) -> Result<TimescaleResult> {
    let t: Vec<f64> = series.times.iter().map(|v| v.as_f64()).collect();
    let d: Vec<f64> = series.values.iter().map(|v| v.as_f64()).collect();
    let (value, stderr) = first_return(&t, &d, eps)?;
    Ok(TimescaleResult { kind: TimescaleKind::Recurrence, value, stderr, fit_window: (t[0], value) })
}

/// Recurrence estimate from the spectrum alone.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralRecurrence {
    /// 2π / Δω_min over distinct Bohr frequencies.
    pub period: f64,
    /// All Bohr frequencies are small-integer ratios of Δω_min.
    pub commensurate: bool,
    /// Exact common period when commensurate.
    pub lcm_period: Option<f64>,
}

/// Spectral recurrence data of an unbroken eigensystem.
pub fn spectral_recurrence<T: Scalar>(es: &Eigensystem<T>) -> Result<SpectralRecurrence> {
    let scale = es.h_norm.as_f64().max(f64::MIN_POSITIVE);
    if es.max_abs_gamma().as_f64() > 1e-9 * scale {
        return Err(Error::BrokenPhase { max_gamma: es.max_abs_gamma().as_f64() });
    }
    let e: Vec<f64> = es.eigenvalues.iter().map(|z| z.re.as_f64()).collect();
    let mut omegas: Vec<f64> = Vec::new();
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            let w = (e[i] - e[j]).abs();
            if w > 1e-9 * scale {
                omegas.push(w);
            }
        }
    }
    let wmin = omegas.iter().copied().fold(f64::INFINITY, f64::min);
    if !wmin.is_finite() {
        return Err(Error::NoRecurrence);
    }
    let period = 2.0 * std::f64::consts::PI / wmin;
    // each ratio w/wmin = p/q with q ≤ 12 ⇒ common period 2π·lcm(q)/wmin
    let mut lcm: u64 = 1;
    let mut commensurate = true;
    for w in &omegas {
        let r = w / wmin;
        match (1..=12u64).find(|&q| ((r * q as f64) - (r * q as f64).round()).abs() < 1e-8 * r * q as f64) {
            Some(q) => lcm = lcm / gcd(lcm, q) * q,
            None => {
                commensurate = false;
                break;
            }
        }
    }
    let lcm_period = commensurate.then(|| period * lcm as f64);
    Ok(SpectralRecurrence { period, commensurate, lcm_period })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// τ = −1/slope of ln D against t over the final `tail_fraction` of the series.
pub fn relaxation_time<T: Scalar>(series: &DistinguishabilitySeries<T>, tail_fraction: f64) -> Result<TimescaleResult> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!("tail fraction must lie in (0, 1], got {tail_fraction}")));
    }
    let n = series.len();
    let count = ((n as f64 * tail_fraction).ceil() as usize).clamp(3.min(n), n);
    let start = n - count;
    let t: Vec<f64> = series.times[start..].iter().map(|v| v.as_f64()).collect();
    let d: Vec<f64> = series.values[start..].iter().map(|v| v.as_f64()).collect();
    if d.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidInput("relaxation fit needs a positive tail".into()));
    }
    let ln: Vec<f64> = d.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&t, &ln)?;
    if fit.r_squared < 0.99 || fit.slope >= 0.0 {
        return Err(Error::NonExponentialTail { r_squared: fit.r_squared });
    }
    let tau = -1.0 / fit.slope;
    Ok(TimescaleResult {
        kind: TimescaleKind::Relaxation,
        value: tau,
        stderr: fit.slope_stderr / (fit.slope * fit.slope),
        fit_window: (t[0], t[t.len() - 1]),
    })
}

/// δ from a log-log fit of D against t over `window` (default: the last
/// temporal decade of the series).
pub fn tail_exponent<T: Scalar>(series: &DistinguishabilitySeries<T>, window: Option<(f64, f64)>) -> Result<TimescaleResult> {
    let t_end = series.times[series.len() - 1].as_f64();
    let (lo, hi) = window.unwrap_or((t_end / 10.0, t_end));
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidInput(format!("tail window [{lo}, {hi}] is empty or touches t = 0")));
    }
    let t0 = series.times[0].as_f64();
    let slack = 1e-9 * t_end.abs().max(1.0);
    if lo < t0 - slack || hi > t_end + slack {
        return Err(Error::InvalidInput(format!("tail window [{lo}, {hi}] exceeds the series support")));
    }
    let (t, d): (Vec<f64>, Vec<f64>) = series
        .times
        .iter()
        .zip(&series.values)
        .map(|(a, b)| (a.as_f64(), b.as_f64()))
        .filter(|&(a, _)| a >= lo - slack && a <= hi + slack)
        .unzip();
    if t.len() < 3 {
        return Err(Error::InvalidInput("tail window holds fewer than 3 samples".into()));
    }
    if d.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidInput("tail exponent fit needs positive values".into()));
    }
    let fit = log_log_fit(&t, &d)?;
    if fit.slope_stderr > 0.1 {
        return Err(Error::FitUnstable { stderr: fit.slope_stderr, reason: "tail exponent".into() });
    }
    if fit.slope >= -FLAT_SLOPE {
        return Err(Error::FitUnstable { stderr: fit.slope_stderr, reason: "series does not decay".into() });
    }
    Ok(TimescaleResult {
        kind: TimescaleKind::TailExponent,
        value: -fit.slope,
        stderr: fit.slope_stderr,
        fit_window: (lo, hi),
    })
}

/// Basis state |↑⟩ = (1, 0) or |↓⟩ = (0, 1) of a two-level system.
pub fn spin<T: Scalar>(up: bool) -> Vec<Cx<T>> {
    if up {
        vec![re(T::one()), Cx::zero()]
    } else {
        vec![Cx::zero(), re(T::one())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{eig_biorthogonal, two_level};

    fn closed_form_d(a: f64, t: f64) -> f64 {
        let w = (1.0 - a * a).sqrt();
        let th = w * t;
        let x = 2.0 * a * th.sin().powi(2) / (1.0 - a * a);
        1.0 / (1.0 + x * x).sqrt()
    }

    #[test]
    fn zero_time_is_identity() {
        let h = two_level(1.0, 0.4).unwrap();
        let r = DensityMatrix::basis(2, 0).unwrap();
        assert_eq!(evolve(&h, &r, 0.0).unwrap(), r);
    }

    #[test]
    fn matches_closed_form_state() {
        // ψ(t) ∝ U ψ0 with U = [√(1−a²)cosθ + a sinθ, −i sinθ; −i sinθ, √(1−a²)cosθ − a sinθ]/√(1−a²)
        let a: f64 = 0.75;
        let t = 1.0;
        let w = (1.0 - a * a).sqrt();
        let th = w * t;
        let up = [cx((w * th.cos() + a * th.sin()) / w, 0.0), cx(0.0, -th.sin() / w)];
        let n_up = 1.0 - a * a * (2.0 * th).cos() + a * w * (2.0 * th).sin();
        let norm2 = up[0].norm_sqr() + up[1].norm_sqr();
        assert!((norm2 - n_up / (1.0 - a * a)).abs() < 1e-12);
        let expect = DensityMatrix::pure(&up).unwrap();
        let got = evolve(&two_level(1.0, a).unwrap(), &DensityMatrix::basis(2, 0).unwrap(), t).unwrap();
        assert!(got.matrix().distance(expect.matrix()) < 1e-10);
    }

    #[test]
    fn hermitian_evolution_preserves_spectrum() {
        let h = ComplexMatrix::<f64>::from_rows(&[
            vec![re(1.0), cx(0.2, 0.3), re(0.0)],
            vec![cx(0.2, -0.3), re(-0.5), re(0.7)],
            vec![re(0.0), re(0.7), re(0.1)],
        ]);
        let rho = DensityMatrix::new(ComplexMatrix::from_diag(&[re(0.5), re(0.3), re(0.2)])).unwrap();
        let out = evolve(&h, &rho, 3.7).unwrap();
        let (a, b) = (rho.eigenvalues().unwrap(), out.eigenvalues().unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn spectral_route_agrees_with_pade() {
        let h = two_level(1.0, 0.5).unwrap();
        let es = eig_biorthogonal(&h).unwrap();
        let rho = DensityMatrix::pure(&[cx(0.6, 0.0), cx(0.0, 0.8)]).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let a = evolve(&h, &rho, t).unwrap();
            let b = evolve_spectral(&es, &rho, t).unwrap();
            assert!(a.matrix().distance(b.matrix()) < 1e-8);
        }
    }

    #[test]
    fn diagonal_real_hamiltonian_leaves_diagonal_state() {
        let h = ComplexMatrix::from_diag(&[re(1.0), re(-2.0)]);
        let rho = DensityMatrix::new(ComplexMatrix::from_diag(&[re(0.7), re(0.3)])).unwrap();
        let es = eig_biorthogonal(&h).unwrap();
        assert!(evolve_spectral(&es, &rho, 5.0).unwrap().matrix().distance(rho.matrix()) < 1e-14);
    }

    #[test]
    fn broken_phase_converges_to_dominant_eigenstate() {
        let h = two_level(1.0, 1.25).unwrap();
        let es = eig_biorthogonal(&h).unwrap();
        let target = DensityMatrix::pure(&es.right_vectors[0]).unwrap();
        let rho = DensityMatrix::basis(2, 1).unwrap();
        let out = evolve_spectral(&es, &rho, 30.0).unwrap();
        assert!(out.matrix().distance(target.matrix()) < 1e-12);
        // the unshifted Padé route would overflow far earlier than this
        let far = evolve(&h, &rho, 2000.0).unwrap();
        assert!(far.matrix().distance(target.matrix()) < 1e-10);
    }

    #[test]
    fn trace_distance_basics() {
        let up = DensityMatrix::<f64>::basis(2, 0).unwrap();
        let dn = DensityMatrix::basis(2, 1).unwrap();
        assert!((trace_distance(&up, &dn).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(trace_distance(&up, &up).unwrap(), 0.0);
        let three = DensityMatrix::basis(3, 0).unwrap();
        assert!(matches!(trace_distance(&up, &three), Err(Error::DimensionMismatch(2, 3))));
    }

    #[test]
    fn series_matches_eq11_closed_form() {
        let a = 0.6;
        let h = two_level(1.0, a).unwrap();
        let s = distinguishability_series(
            &h,
            &DensityMatrix::basis(2, 0).unwrap(),
            &DensityMatrix::basis(2, 1).unwrap(),
            10.0,
            501,
        )
        .unwrap();
        for (t, d) in s.times.iter().zip(&s.values) {
            assert!((d - closed_form_d(a, *t)).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn closed_form_value_at_a_075() {
        // θ = √0.4375, sin²θ ≈ 0.3774, 2a sin²θ/(1−a²) ≈ 1.294
        let d = closed_form_d(0.75, 1.0);
        let th = 0.4375f64.sqrt();
        let x = 1.5 * th.sin().powi(2) / 0.4375;
        assert!((d - 1.0 / (1.0 + x * x).sqrt()).abs() < 1e-15);
        assert!((d - 0.6115).abs() < 5e-4);
        let h = two_level(1.0, 0.75).unwrap();
        let rho = evolve(&h, &DensityMatrix::basis(2, 0).unwrap(), 1.0).unwrap();
        let sigma = evolve(&h, &DensityMatrix::basis(2, 1).unwrap(), 1.0).unwrap();
        assert!((trace_distance(&rho, &sigma).unwrap() - d).abs() < 1e-10);
    }

    #[test]
    fn recurrence_of_two_level_series() {
        for a in [0.6f64, 0.75] {
            let period = std::f64::consts::PI / (1.0 - a * a).sqrt();
            let h = two_level(1.0, a).unwrap();
            let s = distinguishability_series(
                &h,
                &DensityMatrix::basis(2, 0).unwrap(),
                &DensityMatrix::basis(2, 1).unwrap(),
                3.0 * period,
                2000,
            )
            .unwrap();
            let r = recurrence_time(&s, DEFAULT_RECURRENCE_EPS).unwrap();
            assert!((r.value - period).abs() < 1e-3 * period, "a={a}: {} vs {period}", r.value);
        }
        let h = two_level(1.0, 1.25).unwrap();
        let s = distinguishability_series(
            &h,
            &DensityMatrix::basis(2, 0).unwrap(),
            &DensityMatrix::basis(2, 1).unwrap(),
            20.0,
            2000,
        )
        .unwrap();
        assert!(matches!(recurrence_time(&s, DEFAULT_RECURRENCE_EPS), Err(Error::NoRecurrence)));
    }

    #[test]
    fn transverse_crossing_is_detected() {
        // sin(t + 0.3) leaves upward; the downward crossing at π − 0.6 is not a return
        let t: Vec<f64> = (0..4000).map(|k| k as f64 * 0.005).collect();
        let v: Vec<f64> = t.iter().map(|x| (x + 0.3).sin()).collect();
        let (tr, err) = first_return(&t, &v, 1e-6).unwrap();
        assert!((tr - 2.0 * std::f64::consts::PI).abs() < 1e-4, "{tr}");
        assert!(err <= 0.0025 + 1e-12);
    }

    #[test]
    fn spectral_recurrence_of_two_level() {
        let es = eig_biorthogonal(&two_level(1.0, 0.6).unwrap()).unwrap();
        let r = spectral_recurrence(&es).unwrap();
        assert!((r.period - std::f64::consts::PI / 0.8).abs() < 1e-12);
        assert!(r.commensurate);
        let chain = crate::spectral::gainloss_chain(3, 1.0, 0.0).unwrap();
        // levels 0, ±√2: frequencies √2 and 2√2 are commensurate
        let r = spectral_recurrence(&eig_biorthogonal(&chain).unwrap()).unwrap();
        assert!(r.commensurate);
        assert!((r.lcm_period.unwrap() - 2.0 * std::f64::consts::PI / 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn synthetic_relaxation_and_tail() {
        let t: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
        let d: Vec<f64> = t.iter().map(|x| (-2.0 * x).exp()).collect();
        let s = DistinguishabilitySeries::from_samples(t, d).unwrap();
        let r = relaxation_time(&s, 0.5).unwrap();
        assert!((r.value - 0.5).abs() < 1e-10);

        let t: Vec<f64> = (1..=1000).map(|k| k as f64 * 0.1).collect();
        let d: Vec<f64> = t.iter().map(|x| 1.0 / x).collect();
        let s = DistinguishabilitySeries::from_samples(t, d).unwrap();
        let r = tail_exponent(&s, None).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert_eq!(r.fit_window, (10.0, 100.0));
    }

    #[test]
    fn relaxation_rejects_oscillating_tail() {
        let t: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
        let d: Vec<f64> = t.iter().map(|x| 0.5 + 0.4 * (3.0 * x).cos()).collect();
        let s = DistinguishabilitySeries::from_samples(t, d).unwrap();
        assert!(matches!(relaxation_time(&s, 0.5), Err(Error::NonExponentialTail { .. })));
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = ComplexMatrix::from_diag(&[re(0.5), re(0.4)]);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let negative = ComplexMatrix::from_diag(&[re(1.5), re(-0.5)]);
        assert!(DensityMatrix::new(negative).is_err());
        let mut nonherm = ComplexMatrix::from_diag(&[re(0.5), re(0.5)]);
        nonherm[(0, 1)] = re(0.1);
        assert!(DensityMatrix::new(nonherm).is_err());
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let s = DistinguishabilitySeries::from_samples(vec![0.0, 0.5], vec![1.0, 0.75]).unwrap();
        assert_eq!(s.to_csv(), "t,D\n0,1\n0.5,0.75\n");
    }
}
