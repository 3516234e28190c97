//! Paraxial beam propagation i∂_zψ = −[∂_x² + V(x)]ψ in the periodic
//! potential V(x) = V₀[cos(2πx/a) + iλ sin(2πx/a)], split-step Fourier in z.
//!
//! The transverse grid is x_j = −L/2 + jL/N, periodic, N a power of two.

use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use num_traits::Zero;
use rustfft::{Fft, FftNum, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::criticality::ExponentFit;
use crate::dynamics::first_return;
use crate::error::{Error, Result};
use crate::fit::log_log_fit;
use crate::io::csv_columns;
use crate::scalar::{cx, Cx, Scalar};

/// max|ψ| above which propagation is aborted.
pub const OVERFLOW_LIMIT: f64 = 1e100;

/// Sampled field on the periodic transverse grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BeamState<T> {
    pub length: T,
    pub field: Vec<Cx<T>>,
    pub z: T,
}

impl<T: Scalar> BeamState<T> {
    pub fn new(length: T, field: Vec<Cx<T>>, z: T) -> Result<Self> {
        if field.len() < 2 || !field.len().is_power_of_two() {
            return Err(Error::BadDimension(format!("grid size must be a power of two, got {}", field.len())));
        }
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::InvalidInput(format!("domain length must be positive, got {length}")));
        }
        if field.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("beam field".into()));
        }
        Ok(Self { length, field, z })
    }

    pub fn n(&self) -> usize {
        self.field.len()
    }

    pub fn dx(&self) -> T {
        self.length / T::from_usize_lossy(self.n())
    }

    pub fn x(&self, j: usize) -> T {
        -self.length * T::half() + self.dx() * T::from_usize_lossy(j)
    }

    /// ⟨ψ,ψ⟩ by the rectangle rule, exact for band-limited periodic fields.
    pub fn norm_sqr(&self) -> T {
        self.field.iter().map(|c| c.norm_sqr()).sum::<T>() * self.dx()
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.n() == other.n() && self.length == other.length
    }
}

/// Gaussian input exp[−((x − x₀)/w)² + i k₀ x].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub w: f64,
    pub k0: f64,
    pub x0: f64,
}

/// Quadratic absorber of the given width at both edges of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingLayer {
    pub width: f64,
    pub strength: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpticsConfig {
    pub v0: f64,
    pub lam: f64,
    /// Potential period.
    pub a: f64,
    /// Domain length, an integer multiple of `a`.
    pub l: f64,
    pub n: usize,
    pub dz: f64,
    pub z_max: f64,
    /// Steps between recorded samples of D(z).
    pub sample_every: usize,
    pub absorbing: Option<AbsorbingLayer>,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        Self { v0: 0.3, lam: 1.0, a: 2.0 * pi, l: 64.0 * pi, n: 4096, dz: 0.01, z_max: 200.0, sample_every: 10, absorbing: None }
    }
}

impl OpticsConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.v0, self.lam, self.a, self.l, self.dz, self.z_max].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("optics configuration".into()));
        }
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(Error::BadDimension(format!("grid size must be a power of two, got {}", self.n)));
        }
        if !(self.dz > 0.0) || !(self.z_max > 0.0) {
            return Err(Error::InvalidInput("dz and z_max must be positive".into()));
        }
        if !(self.lam >= 0.0) {
            return Err(Error::InvalidInput(format!("non-Hermiticity λ must be non-negative, got {}", self.lam)));
        }
        if !(self.a > 0.0) || !(self.l > 0.0) {
            return Err(Error::InvalidInput("period and domain length must be positive".into()));
        }
        let cells = self.l / self.a;
        if (cells - cells.round()).abs() > 1e-9 * cells.max(1.0) || cells.round() < 1.0 {
            return Err(Error::InvalidInput(format!("domain length {} is not a multiple of the period {}", self.l, self.a)));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidInput("sample_every must be at least 1".into()));
        }
        if let Some(abs) = self.absorbing {
            if !(abs.width > 0.0 && abs.width < self.l / 2.0) || !(abs.strength >= 0.0) {
                return Err(Error::InvalidInput("absorbing layer must be thinner than half the domain".into()));
            }
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.l / self.n as f64
    }

    /// Number of dz steps that reach z_max.
    pub fn total_steps(&self) -> usize {
        (self.z_max / self.dz).round().max(1.0) as usize
    }

    pub fn potential(&self, x: f64) -> Cx<f64> {
        let p = 2.0 * std::f64::consts::PI * x / self.a;
        cx(self.v0 * p.cos(), self.v0 * self.lam * p.sin())
    }
}

pub fn make_gaussian<T: Scalar>(cfg: &OpticsConfig, g: &GaussianSpec) -> Result<BeamState<T>> {
    cfg.validate()?;
    if !(g.w > 0.0) || !g.w.is_finite() || !g.k0.is_finite() || !g.x0.is_finite() {
        return Err(Error::InvalidInput(format!("Gaussian width must be positive and parameters finite: {g:?}")));
    }
    let dx = cfg.dx();
    if g.w < 4.0 * dx {
        return Err(Error::GridTooCoarse { width: g.w, spacing: dx });
    }
    let field = (0..cfg.n)
        .map(|j| {
            let x = -cfg.l / 2.0 + dx * j as f64;
            let u = (x - g.x0) / g.w;
            let c = Cx::from_polar((-u * u).exp(), g.k0 * x);
            cx(T::lit(c.re), T::lit(c.im))
        })
        .collect();
    BeamState::new(T::lit(cfg.l), field, T::zero())
}

/// Precomputed phases and FFT plans for one configuration.
pub struct Propagator<T: FftNum> {
    half_potential: Vec<Cx<T>>,
    full_potential: Vec<Cx<T>>,
    /// e^{−ik²dz}/N; the 1/N undoes the unnormalised inverse FFT.
    kinetic: Vec<Cx<T>>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    dz: T,
    length: T,
}

impl<T: Scalar + FftNum> Propagator<T> {
    pub fn new(cfg: &OpticsConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n;
        let dx = cfg.dx();
        let absorb = |x: f64| -> f64 {
            match cfg.absorbing {
                Some(AbsorbingLayer { width, strength }) => {
                    let depth = (x.abs() - (cfg.l / 2.0 - width)).max(0.0) / width;
                    strength * depth * depth
                }
                None => 0.0,
            }
        };
        // e^{i(V + iσ)h}: gain/loss from Im V, damping from the absorber
        let phase = |h: f64| -> Vec<Cx<T>> {
            (0..n)
                .map(|j| {
                    let x = -cfg.l / 2.0 + dx * j as f64;
                    let v = cfg.potential(x) + cx(0.0, absorb(x));
                    let e = (Cx::new(0.0, h) * v).exp();
                    cx(T::lit(e.re), T::lit(e.im))
                })
                .collect()
        };
        let dk = 2.0 * std::f64::consts::PI / cfg.l;
        let kinetic = (0..n)
            .map(|m| {
                let k = if m < n / 2 { m as f64 } else { m as f64 - n as f64 } * dk;
                let e = Cx::from_polar(1.0 / n as f64, -k * k * cfg.dz);
                cx(T::lit(e.re), T::lit(e.im))
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            half_potential: phase(cfg.dz / 2.0),
            full_potential: phase(cfg.dz),
            kinetic,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            dz: T::lit(cfg.dz),
            length: T::lit(cfg.l),
        })
    }

    /// Advances by `steps` Strang steps. Adjacent potential half-steps are
    /// merged, so the result equals `steps` separate half-kick-half steps.
    pub fn advance(&self, psi: &mut BeamState<T>, steps: usize) -> Result<()> {
        if steps == 0 {
            return Err(Error::InvalidInput("steps must be at least 1".into()));
        }
        if psi.n() != self.kinetic.len() || psi.length != self.length {
            return Err(Error::GridMismatch);
        }
        let limit = T::lit(OVERFLOW_LIMIT);
        let mul = |f: &mut [Cx<T>], p: &[Cx<T>]| f.iter_mut().zip(p).for_each(|(a, b)| *a = *a * *b);
        let mut scratch = vec![Cx::<T>::zero(); self.forward.get_inplace_scratch_len()];
        mul(&mut psi.field, &self.half_potential);
        for s in 0..steps {
            self.forward.process_with_scratch(&mut psi.field, &mut scratch);
            mul(&mut psi.field, &self.kinetic);
            self.inverse.process_with_scratch(&mut psi.field, &mut scratch);
            mul(&mut psi.field, if s + 1 == steps { &self.half_potential } else { &self.full_potential });
            let peak = psi.field.iter().map(|c| c.norm_sqr()).fold(T::zero(), T::max).sqrt();
            if !(peak <= limit) {
                return Err(Error::Overflow(format!("beam amplitude {peak} at z = {}", psi.z + self.dz * T::from_usize_lossy(s + 1))));
            }
        }
        psi.z += self.dz * T::from_usize_lossy(steps);
        Ok(())
    }
}

/// Returns ψ advanced by `steps` steps of `cfg.dz`.
pub fn propagate<T: Scalar + FftNum>(psi: &BeamState<T>, cfg: &OpticsConfig, steps: usize) -> Result<BeamState<T>> {
    let prop = Propagator::new(cfg)?;
    let mut out = psi.clone();
    prop.advance(&mut out, steps)?;
    Ok(out)
}

/// √(1 − |⟨ψ,φ⟩|²/(⟨ψ,ψ⟩⟨φ,φ⟩)), clamped to [0, 1].
pub fn optics_distinguishability<T: Scalar>(psi: &BeamState<T>, phi: &BeamState<T>) -> Result<T> {
    if !psi.same_grid(phi) {
        return Err(Error::GridMismatch);
    }
    let ov = psi.field.iter().zip(&phi.field).fold(Cx::<T>::zero(), |acc, (a, b)| acc + a.conj() * *b);
    let na: T = psi.field.iter().map(|c| c.norm_sqr()).sum();
    let nb: T = phi.field.iter().map(|c| c.norm_sqr()).sum();
    if !(na > T::zero() && nb > T::zero()) {
        return Err(Error::ZeroBranch);
    }
    let f = (ov.norm_sqr() / na / nb).min(T::one());
    Ok((T::one() - f).max(T::zero()).sqrt())
}

/// D(z) with the beam norms ‖ψ‖, ‖φ‖ at each sample.
#[derive(Clone, Debug, Serialize)]
pub struct OpticsSeries {
    pub z: Vec<f64>,
    pub d: Vec<f64>,
    pub norm1: Vec<f64>,
    pub norm2: Vec<f64>,
}

impl OpticsSeries {
    /// CSV with columns z, D.
    pub fn to_csv(&self) -> String {
        csv_columns(&["z", "D"], &[&self.z, &self.d])
    }
}

/// Propagates both beams to z_max, sampling every `cfg.sample_every` steps.
/// Returns the series and the final fields.
pub fn distinguishability_run<T: Scalar + FftNum>(
    cfg: &OpticsConfig,
    g1: &GaussianSpec,
    g2: &GaussianSpec,
) -> Result<(OpticsSeries, BeamState<T>, BeamState<T>)> {
    let prop = Propagator::<T>::new(cfg)?;
    let mut b1 = make_gaussian::<T>(cfg, g1)?;
    let mut b2 = make_gaussian::<T>(cfg, g2)?;
    let total = cfg.total_steps();
    let mut series = OpticsSeries { z: Vec::new(), d: Vec::new(), norm1: Vec::new(), norm2: Vec::new() };
    let mut done = 0;
    loop {
        series.z.push(cfg.dz * done as f64);
        series.d.push(optics_distinguishability(&b1, &b2)?.as_f64());
        series.norm1.push(b1.norm_sqr().sqrt().as_f64());
        series.norm2.push(b2.norm_sqr().sqrt().as_f64());
        if done == total {
            break;
        }
        let k = cfg.sample_every.min(total - done);
        let (r1, r2) = rayon::join(|| prop.advance(&mut b1, k), || prop.advance(&mut b2, k));
        r1?;
        r2?;
        done += k;
    }
    Ok((series, b1, b2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EPVariant {
    /// Widths 6π, centres ±10, k₀ = −1.
    DifferentCenters,
    /// Widths 6π and 3π, both centred at 0, k₀ = −1.
    DifferentWidths,
}

impl EPVariant {
    pub fn inputs(self) -> (GaussianSpec, GaussianSpec) {
        let pi = std::f64::consts::PI;
        match self {
            EPVariant::DifferentCenters => (GaussianSpec { w: 6.0 * pi, k0: -1.0, x0: 10.0 }, GaussianSpec { w: 6.0 * pi, k0: -1.0, x0: -10.0 }),
            EPVariant::DifferentWidths => (GaussianSpec { w: 6.0 * pi, k0: -1.0, x0: 0.0 }, GaussianSpec { w: 3.0 * pi, k0: -1.0, x0: 0.0 }),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EPDecayResult<T> {
    pub variant: EPVariant,
    pub series: OpticsSeries,
    /// Power-law fit; `None` off the EP.
    pub fit: Option<ExponentFit>,
    /// Tail estimate of the limit of D, used by the different-centres fit.
    pub d_inf: Option<f64>,
    /// First return of D(z) to D(0) in the unbroken phase.
    pub oscillation_period: Option<f64>,
    /// Both beams at z_max.
    #[serde(skip)]
    pub final_fields: (BeamState<T>, BeamState<T>),
}

/// Mean of the last 10% of samples.
pub fn tail_mean(d: &[f64]) -> f64 {
    let k = (d.len() / 10).max(1);
    d[d.len() - k..].iter().sum::<f64>() / k as f64
}

/// Fits z ↦ y over [lo, hi] on a log-log scale.
fn power_fit(z: &[f64], y: &[f64], lo: f64, hi: f64) -> Result<ExponentFit> {
    let (x, v): (Vec<f64>, Vec<f64>) = z.iter().zip(y).filter(|(a, _)| **a >= lo && **a <= hi).map(|(a, b)| (*a, *b)).unzip();
    if x.len() < 5 {
        return Err(Error::InsufficientDecades { needed: 5, points: x.len(), decades: (hi / lo).log10() });
    }
    if v.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::FitUnstable { stderr: f64::INFINITY, reason: "fitted quantity changes sign inside the window".into() });
    }
    let fit = log_log_fit(&x, &v)?;
    if fit.slope_stderr > 0.1 {
        return Err(Error::FitUnstable { stderr: fit.slope_stderr, reason: "optics decay exponent".into() });
    }
    Ok(ExponentFit {
        exponent: fit.slope,
        amplitude: fit.intercept.exp(),
        stderr: fit.slope_stderr,
        r_squared: fit.r_squared.clamp(0.0, 1.0),
        window: (x[0], x[x.len() - 1]),
        points: x.len(),
    })
}

/// At λ = 1: different centres fit |D − D∞| over [z_max/10, 0.9 z_max] with
/// D∞ the tail mean; different widths fit D over [z_max/10, z_max].
/// For λ < 1 the first return period of D is reported instead of a fit.
pub fn ep_decay_experiment<T: Scalar + FftNum>(cfg: &OpticsConfig, variant: EPVariant) -> Result<EPDecayResult<T>> {
    cfg.validate()?;
    if cfg.lam > 1.0 {
        return Err(Error::InvalidInput(format!("λ = {} lies in the broken phase; the decay experiment needs λ ≤ 1", cfg.lam)));
    }
    let (g1, g2) = variant.inputs();
    let (series, b1, b2) = distinguishability_run::<T>(cfg, &g1, &g2)?;
    let final_fields = (b1, b2);
    if cfg.lam < 1.0 {
        let period = first_return(&series.z, &series.d, 1e-3).ok().map(|p| p.0);
        return Ok(EPDecayResult { variant, series, fit: None, d_inf: None, oscillation_period: period, final_fields });
    }
    let (fit, d_inf) = match variant {
        EPVariant::DifferentCenters => {
            let d_inf = tail_mean(&series.d);
            let dev: Vec<f64> = series.d.iter().map(|d| (d - d_inf).abs()).collect();
            (power_fit(&series.z, &dev, cfg.z_max / 10.0, 0.9 * cfg.z_max)?, Some(d_inf))
        }
        EPVariant::DifferentWidths => (power_fit(&series.z, &series.d, cfg.z_max / 10.0, cfg.z_max)?, None),
    };
    Ok(EPDecayResult { variant, series, fit: Some(fit), d_inf, oscillation_period: None, final_fields })
}

/// Grid description written next to a binary field snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub n: usize,
    pub length: f64,
    pub x_min: f64,
    pub dx: f64,
    pub z: f64,
    pub dtype: String,
    pub layout: String,
}

/// Binary payload (little-endian f64 re, im per grid point) and sidecar.
pub fn snapshot_parts<T: Scalar>(beam: &BeamState<T>) -> (Vec<u8>, SnapshotMeta) {
    let mut bytes = Vec::with_capacity(beam.n() * 16);
    for c in &beam.field {
        bytes.extend_from_slice(&c.re.as_f64().to_le_bytes());
        bytes.extend_from_slice(&c.im.as_f64().to_le_bytes());
    }
    let meta = SnapshotMeta {
        n: beam.n(),
        length: beam.length.as_f64(),
        x_min: beam.x(0).as_f64(),
        dx: beam.dx().as_f64(),
        z: beam.z.as_f64(),
        dtype: "float64-le".into(),
        layout: "one (re, im) pair per grid point, ascending x".into(),
    };
    (bytes, meta)
}

/// Writes `<stem>.bin` and the `<stem>.json` sidecar.
pub fn write_snapshot<T: Scalar>(beam: &BeamState<T>, stem: &Path) -> io::Result<()> {
    let (bytes, meta) = snapshot_parts(beam);
    fs::write(stem.with_extension("bin"), bytes)?;
    fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&meta).map_err(io::Error::other)?)
}

pub fn read_snapshot(stem: &Path) -> io::Result<BeamState<f64>> {
    let meta: SnapshotMeta = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?).map_err(io::Error::other)?;
    let bytes = fs::read(stem.with_extension("bin"))?;
    if bytes.len() != meta.n * 16 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "snapshot size disagrees with its sidecar"));
    }
    let f = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8-byte chunk"));
    let field = bytes.chunks_exact(16).map(|c| cx(f(&c[..8]), f(&c[8..]))).collect();
    BeamState::new(meta.length, field, meta.z).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small(lam: f64) -> OpticsConfig {
        OpticsConfig { lam, l: 32.0 * PI, n: 1024, dz: 0.02, z_max: 50.0, ..OpticsConfig::default() }
    }

    #[test]
    fn config_validation() {
        assert!(OpticsConfig::default().validate().is_ok());
        assert!(OpticsConfig { n: 1000, ..small(1.0) }.validate().is_err());
        assert!(OpticsConfig { l: 100.0, ..small(1.0) }.validate().is_err());
        assert!(OpticsConfig { dz: 0.0, ..small(1.0) }.validate().is_err());
        let coarse = make_gaussian::<f64>(&small(1.0), &GaussianSpec { w: 0.2, k0: 0.0, x0: 0.0 });
        assert!(matches!(coarse, Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn gaussian_samples() {
        let cfg = small(0.0);
        let b = make_gaussian::<f64>(&cfg, &GaussianSpec { w: 6.0 * PI, k0: -1.0, x0: 10.0 }).unwrap();
        let j = 700;
        let x = b.x(j);
        let u = (x - 10.0) / (6.0 * PI);
        assert!((b.field[j] - Cx::from_polar((-u * u).exp(), -x)).norm() < 1e-15);
        // wide beams approach the plane wave
        let wide = make_gaussian::<f64>(&cfg, &GaussianSpec { w: 1e6, k0: 2.0, x0: 0.0 }).unwrap();
        assert!(wide.field.iter().enumerate().all(|(j, c)| (c - Cx::from_polar(1.0, 2.0 * wide.x(j))).norm() < 1e-8));
    }

    #[test]
    fn free_diffraction_matches_exact_solution() {
        // ψ = w/√(w² + 4iz) exp[−x²/(w² + 4iz)]
        let cfg = OpticsConfig { v0: 0.0, dz: 0.05, ..small(0.0) };
        let w = 3.0;
        let b0 = make_gaussian::<f64>(&cfg, &GaussianSpec { w, k0: 0.0, x0: 0.0 }).unwrap();
        let b = propagate(&b0, &cfg, 100).unwrap();
        assert!((b.z - 5.0).abs() < 1e-12);
        let q = Cx::new(w * w, 20.0);
        let err = (0..cfg.n).map(|j| (b.field[j] - (-(b.x(j) * b.x(j)) / q).exp() * w / q.sqrt()).norm()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        // |ψ|² width law w(z)² = w²(1 + 16z²/w⁴)
        let m2: f64 = (0..cfg.n).map(|j| b.x(j).powi(2) * b.field[j].norm_sqr()).sum::<f64>() / b.field.iter().map(|c| c.norm_sqr()).sum::<f64>();
        let wz2 = w * w * (1.0 + 16.0 * 25.0 / w.powi(4));
        assert!((m2 - wz2 / 4.0).abs() < 1e-6 * wz2);
    }

    #[test]
    fn hermitian_potential_is_unitary() {
        let cfg = small(0.0);
        let (g1, g2) = EPVariant::DifferentWidths.inputs();
        let (s, _, _) = distinguishability_run::<f64>(&cfg, &g1, &g2).unwrap();
        let n0 = s.norm1[0];
        assert!(s.norm1.iter().all(|n| (n - n0).abs() < 1e-8 * n0));
        assert!(s.d.iter().all(|d| (d - s.d[0]).abs() < 1e-7));
    }

    #[test]
    fn distinguishability_limits() {
        let cfg = small(0.0);
        let a = make_gaussian::<f64>(&cfg, &GaussianSpec { w: 1.0, k0: 0.0, x0: -20.0 }).unwrap();
        let b = make_gaussian::<f64>(&cfg, &GaussianSpec { w: 1.0, k0: 0.0, x0: 20.0 }).unwrap();
        assert_eq!(optics_distinguishability(&a, &a).unwrap(), 0.0);
        assert!((optics_distinguishability(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        let other = make_gaussian::<f64>(&OpticsConfig { n: 2048, ..cfg }, &GaussianSpec { w: 1.0, k0: 0.0, x0: 0.0 }).unwrap();
        assert!(matches!(optics_distinguishability(&a, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn norm_grows_linearly_at_the_ep() {
        let cfg = small(1.0);
        let (g1, _) = EPVariant::DifferentWidths.inputs();
        let (s, _, _) = distinguishability_run::<f64>(&cfg, &g1, &g1).unwrap();
        let fit = power_fit(&s.z, &s.norm1, 25.0, 50.0).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.2, "{fit:?}");
    }

    #[test]
    fn unbroken_potential_oscillates() {
        let cfg = OpticsConfig { lam: 0.5, n: 2048, dz: 0.02, z_max: 400.0, ..OpticsConfig::default() };
        let r = ep_decay_experiment::<f64>(&cfg, EPVariant::DifferentWidths).unwrap();
        assert!(r.fit.is_none());
        let period = r.oscillation_period.expect("D(z) returns to D(0)");
        assert!(period > 100.0 && period < 300.0, "{period}");
    }

    #[test]
    fn broken_gain_trips_the_overflow_guard() {
        let cfg = OpticsConfig { v0: 3.0, lam: 3.0, dz: 0.05, z_max: 5000.0, ..small(3.0) };
        let b = make_gaussian::<f64>(&cfg, &GaussianSpec { w: 6.0 * PI, k0: -1.0, x0: 0.0 }).unwrap();
        assert!(matches!(propagate(&b, &cfg, 100_000), Err(Error::Overflow(_))));
    }

    #[test]
    fn snapshot_round_trip() {
        let cfg = small(1.0);
        let b = propagate(&make_gaussian::<f64>(&cfg, &GaussianSpec { w: 3.0, k0: -1.0, x0: 0.0 }).unwrap(), &cfg, 10).unwrap();
        let dir = std::env::temp_dir().join(format!("ptflow-snap-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let stem = dir.join("beam");
        write_snapshot(&b, &stem).unwrap();
        assert_eq!(read_snapshot(&stem).unwrap(), b);
        fs::remove_dir_all(&dir).unwrap();
    }
}
