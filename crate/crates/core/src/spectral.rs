//! Biorthogonal spectral data of non-Hermitian Hamiltonians, PT-phase
//! classification and exceptional-point order estimation.

use std::cmp::Ordering;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::log_log_fit;
use crate::linalg::{condition_number, eigenvalues, inner, schur, spectral_norm, ComplexMatrix};
use crate::scalar::{cx, re, Cx, Scalar};

/// Eigenvector-matrix condition number above which a matrix is treated as
/// sitting on an exceptional point.
pub const EXCEPTIONAL_COND: f64 = 1e8;

/// Default tolerance, relative to ‖H‖₂, below which |Im E| counts as zero.
pub const DEFAULT_PHASE_TOL: f64 = 1e-9;

/// [`DEFAULT_PHASE_TOL`], raised to 64 ulps where the scalar type is coarser.
pub fn default_phase_tol<T: Scalar>() -> T {
    T::lit(DEFAULT_PHASE_TOL).max(T::lit(64.0) * T::epsilon())
}

/// Relative eigenvalue separation below which levels are treated as degenerate.
const DEGENERACY_TOL: f64 = 1e-8;

/// Spectral data of a diagonalisable H.
///
/// Index n runs over eigenvalues sorted by descending imaginary part, then by
/// descending real part. Both vector families have unit norm, so the
/// biorthogonal normalisation ⟨χ_n|φ_n⟩ is generally not 1.
#[derive(Clone, Debug)]
pub struct Eigensystem<T> {
    pub eigenvalues: Vec<Cx<T>>,
    pub right_vectors: Vec<Vec<Cx<T>>>,
    pub left_vectors: Vec<Vec<Cx<T>>>,
    /// Entry (m, n) is ⟨χ_m|φ_n⟩.
    pub biorth_overlaps: ComplexMatrix<T>,
    pub cond_eigvec: T,
    /// Spectral norm of the decomposed matrix.
    pub h_norm: T,
}

impl<T: Scalar> Eigensystem<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs_gamma(&self) -> T {
        self.eigenvalues.iter().map(|e| e.im.abs()).fold(T::zero(), T::max)
    }

    /// Σ_n f(E_n) |φ_n⟩⟨χ_n| / ⟨χ_n|φ_n⟩.
    pub fn spectral_sum(&self, f: impl Fn(Cx<T>) -> Cx<T>) -> ComplexMatrix<T> {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n);
        for k in 0..n {
            let w = f(self.eigenvalues[k]) / self.biorth_overlaps[(k, k)];
            let phi = &self.right_vectors[k];
            let chi = &self.left_vectors[k];
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += w * phi[i] * chi[j].conj();
                }
            }
        }
        out
    }

    /// Rebuilds H from its spectral decomposition.
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        self.spectral_sum(|e| e)
    }

    /// e^{−iHt} from the spectral decomposition.
    pub fn propagator(&self, t: T) -> ComplexMatrix<T> {
        self.spectral_sum(|e| {
            let z = cx(e.im * t, -e.re * t);
            z.exp()
        })
    }

    /// Right-eigenvector matrix with φ_n as columns.
    pub fn right_matrix(&self) -> ComplexMatrix<T> {
        ComplexMatrix::from_columns(&self.right_vectors)
    }
}

fn unit<T: Scalar>(v: &[Cx<T>]) -> Vec<Cx<T>> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    v.iter().map(|z| *z / n).collect()
}

/// Left/right eigendecomposition with the pairing and ordering conventions
/// described on [`Eigensystem`].
pub fn eig_biorthogonal<T: Scalar>(h: &ComplexMatrix<T>) -> Result<Eigensystem<T>> {
    if !h.is_finite() {
        return Err(Error::NonFinite("Hamiltonian".into()));
    }
    let n = h.dim();
    let h_norm = spectral_norm(h);
    let right = schur(h)?;
    let mu = right.eigenvalues();
    let mut phi = right.eigenvectors();
    let cond = condition_number(&ComplexMatrix::from_columns(&phi));
    if !(cond.as_f64() <= EXCEPTIONAL_COND) {
        return Err(Error::DefectiveMatrix { cond: cond.as_f64() });
    }

    // left vectors: right eigenvectors of H†, whose eigenvalues are conj(E)
    let left = schur(&h.adjoint())?;
    let nu: Vec<Cx<T>> = left.eigenvalues().iter().map(|z| z.conj()).collect();
    let w = left.eigenvectors();
    let pairing = pair_by_overlap(&mu, &nu, &phi, &w, h_norm);
    let mut chi: Vec<Vec<Cx<T>>> = pairing.iter().map(|&m| w[m].clone()).collect();

    // biorthogonalise inside numerically degenerate blocks
    let deg_tol = T::lit(DEGENERACY_TOL) * h_norm.max(T::min_positive_value());
    let mut assigned = vec![false; n];
    for a in 0..n {
        if assigned[a] {
            continue;
        }
        let block: Vec<usize> = (a..n).filter(|&b| !assigned[b] && (mu[b] - mu[a]).norm() <= deg_tol).collect();
        for &b in &block {
            assigned[b] = true;
        }
        if block.len() > 1 {
            biorthogonalise(&block, &mut phi, &mut chi);
        }
    }

    // sort: descending Γ (clustered to a tolerance so the order is total), then descending E
    let cluster_tol = default_phase_tol::<T>() * h_norm.max(T::min_positive_value());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| mu[j].im.partial_cmp(&mu[i].im).unwrap_or(Ordering::Equal));
    let mut sorted = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && mu[order[end - 1]].im - mu[order[end]].im <= cluster_tol {
            end += 1;
        }
        let mut cluster = order[start..end].to_vec();
        cluster.sort_by(|&i, &j| mu[j].re.partial_cmp(&mu[i].re).unwrap_or(Ordering::Equal));
        sorted.extend(cluster);
        start = end;
    }

    let eigenvalues: Vec<Cx<T>> = sorted.iter().map(|&k| mu[k]).collect();
    let right_vectors: Vec<Vec<Cx<T>>> = sorted.iter().map(|&k| unit(&phi[k])).collect();
    let left_vectors: Vec<Vec<Cx<T>>> = sorted.iter().map(|&k| unit(&chi[k])).collect();
    let biorth_overlaps = ComplexMatrix::from_fn(n, |m, k| inner(&left_vectors[m], &right_vectors[k]));
    Ok(Eigensystem { eigenvalues, right_vectors, left_vectors, biorth_overlaps, cond_eigvec: cond, h_norm })
}

/// For each right vector n, the index of its left partner.
fn pair_by_overlap<T: Scalar>(
    mu: &[Cx<T>],
    nu: &[Cx<T>],
    phi: &[Vec<Cx<T>>],
    w: &[Vec<Cx<T>>],
    h_norm: T,
) -> Vec<usize> {
    let n = mu.len();
    let mut cands: Vec<(T, T, usize, usize)> = Vec::with_capacity(n * n);
    for (m, wm) in w.iter().enumerate() {
        for (k, pk) in phi.iter().enumerate() {
            cands.push((inner(wm, pk).norm(), (nu[m] - mu[k]).norm(), m, k));
        }
    }
    cands.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
            .then((a.2, a.3).cmp(&(b.2, b.3)))
    });
    let greedy = assign(&cands, n);
    let tol = T::lit(1e-6) * h_norm.max(T::one());
    if (0..n).all(|k| (nu[greedy[k]] - mu[k]).norm() <= tol) {
        return greedy;
    }
    // overlaps were uninformative; fall back to eigenvalue proximity
    cands.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(Ordering::Equal)
            .then(b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal))
            .then((a.2, a.3).cmp(&(b.2, b.3)))
    });
    assign(&cands, n)
}

fn assign<T>(cands: &[(T, T, usize, usize)], n: usize) -> Vec<usize> {
    let mut left_used = vec![false; n];
    let mut partner = vec![usize::MAX; n];
    for &(_, _, m, k) in cands {
        if !left_used[m] && partner[k] == usize::MAX {
            left_used[m] = true;
            partner[k] = m;
        }
    }
    partner
}

/// Two-sided Gram–Schmidt so that ⟨χ_i|φ_j⟩ = 0 for i ≠ j within `block`.
fn biorthogonalise<T: Scalar>(block: &[usize], phi: &mut [Vec<Cx<T>>], chi: &mut [Vec<Cx<T>>]) {
    for (pos, &i) in block.iter().enumerate() {
        for &j in &block[..pos] {
            let djj = inner(&chi[j], &phi[j]);
            // remove φ_j from φ_i and χ_j from χ_i
            let a = inner(&chi[j], &phi[i]) / djj;
            let b = (inner(&chi[i], &phi[j]) / djj).conj();
            let (pj, cj) = (phi[j].clone(), chi[j].clone());
            for (x, y) in phi[i].iter_mut().zip(&pj) {
                *x -= a * *y;
            }
            for (x, y) in chi[i].iter_mut().zip(&cj) {
                *x -= b * *y;
            }
        }
        phi[i] = unit(&phi[i]);
        chi[i] = unit(&chi[i]);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Unbroken,
    Broken,
    Exceptional,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseLabel<T> {
    pub phase: Phase,
    pub tol: T,
}

/// Classifies a decomposed Hamiltonian; `tol` is relative to ‖H‖₂.
pub fn classify_phase<T: Scalar>(es: &Eigensystem<T>, tol: T) -> PhaseLabel<T> {
    let phase = if !(es.cond_eigvec.as_f64() <= EXCEPTIONAL_COND) {
        Phase::Exceptional
    } else if es.max_abs_gamma() <= tol * es.h_norm {
        Phase::Unbroken
    } else {
        Phase::Broken
    };
    PhaseLabel { phase, tol }
}

/// Decomposes and classifies. A defective matrix is labelled Exceptional;
/// only failures unrelated to the spectrum (non-finite input, no QR
/// convergence) are returned as errors.
pub fn classify_hamiltonian<T: Scalar>(h: &ComplexMatrix<T>, tol: T) -> Result<PhaseLabel<T>> {
    match eig_biorthogonal(h) {
        Ok(es) => Ok(classify_phase(&es, tol)),
        Err(Error::DefectiveMatrix { .. }) => Ok(PhaseLabel { phase: Phase::Exceptional, tol }),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EPOrderEstimate {
    pub p: u32,
    pub fit_exponent: f64,
    pub stderr: f64,
}

/// Smallest pairwise eigenvalue distance of H.
pub fn min_gap<T: Scalar>(h: &ComplexMatrix<T>) -> Result<T> {
    let ev = eigenvalues(h)?;
    let mut gap = T::infinity();
    for i in 0..ev.len() {
        for j in i + 1..ev.len() {
            gap = gap.min((ev[i] - ev[j]).norm());
        }
    }
    Ok(gap)
}

/// Orders of magnitude spanned by the absolute values in `xs`.
pub(crate) fn decades(xs: &[f64]) -> f64 {
    let lo = xs.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    let hi = xs.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if lo > 0.0 {
        (hi / lo).log10()
    } else {
        0.0
    }
}

/// Estimates the EP order from the scaling of the minimum level gap with
/// the distance |Δλ| to the exceptional point.
pub fn ep_order<T: Scalar>(
    family: impl Fn(T) -> Result<ComplexMatrix<T>>,
    lambda_ep: T,
    probe_offsets: &[T],
) -> Result<EPOrderEstimate> {
    let offs: Vec<f64> = probe_offsets.iter().map(|o| o.as_f64()).collect();
    let span = decades(&offs);
    if offs.len() < 4 || span < 1.0 - 1e-12 {
        return Err(Error::InsufficientDecades { needed: 4, points: offs.len(), decades: span });
    }
    let mut gaps = Vec::with_capacity(offs.len());
    for &o in probe_offsets {
        let g = min_gap(&family(lambda_ep + o)?)?.as_f64();
        if !(g > 0.0) {
            return Err(Error::NoCoalescence);
        }
        gaps.push(g);
    }
    let x: Vec<f64> = offs.iter().map(|o| o.abs()).collect();
    let fit = log_log_fit(&x, &gaps)?;
    if fit.slope <= 0.05 {
        return Err(Error::NoCoalescence);
    }
    if fit.slope_stderr > 0.1 {
        return Err(Error::FitUnstable { stderr: fit.slope_stderr, reason: "gap scaling".into() });
    }
    let p = (1.0 / fit.slope).round();
    if p < 2.0 {
        // linear level crossing: coalescing eigenvalues without an EP
        return Err(Error::NoExceptionalPoint);
    }
    Ok(EPOrderEstimate { p: p as u32, fit_exponent: fit.slope, stderr: fit.slope_stderr })
}

/// Model Hamiltonians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// s(σx + i a σz).
    TwoLevel { s: f64, a: f64 },
    /// Open chain of `n` sites, hopping `j`, gain/loss ±iγ.
    GainlossChain { n: usize, j: f64, gamma: f64 },
}

pub fn build_pt_hamiltonian<T: Scalar>(kind: &ModelKind) -> Result<ComplexMatrix<T>> {
    match *kind {
        ModelKind::TwoLevel { s, a } => two_level(T::lit(s), T::lit(a)),
        ModelKind::GainlossChain { n, j, gamma } => gainloss_chain(n, T::lit(j), T::lit(gamma)),
    }
}

pub fn two_level<T: Scalar>(s: T, a: T) -> Result<ComplexMatrix<T>> {
    if !s.is_finite() || !a.is_finite() {
        return Err(Error::NonFinite("two-level parameters".into()));
    }
    if s < T::zero() {
        return Err(Error::InvalidInput(format!("coupling s must be non-negative, got {s}")));
    }
    let g = s * a;
    Ok(ComplexMatrix::from_rows(&[vec![cx(T::zero(), g), re(s)], vec![re(s), cx(T::zero(), -g)]]))
}

/// On-site gain/loss antisymmetric under site reversal: site i and site
/// N−1−i carry opposite signs, the left half alternates starting with +iγ,
/// and the centre site of an odd chain is lossless. For even N this is the
/// plain alternating pattern +,−,+,−,…
pub fn gainloss_chain<T: Scalar>(n: usize, j: T, gamma: T) -> Result<ComplexMatrix<T>> {
    if n < 2 {
        return Err(Error::BadDimension(format!("gain-loss chain needs at least 2 sites, got {n}")));
    }
    if !j.is_finite() || !gamma.is_finite() {
        return Err(Error::NonFinite("chain parameters".into()));
    }
    if j < T::zero() {
        return Err(Error::InvalidInput(format!("hopping J must be non-negative, got {j}")));
    }
    let sign = |i: usize| -> T {
        let mirror = n - 1 - i;
        if i == mirror {
            T::zero()
        } else if i < mirror {
            if i % 2 == 0 { T::one() } else { -T::one() }
        } else if mirror % 2 == 0 {
            -T::one()
        } else {
            T::one()
        }
    };
    Ok(ComplexMatrix::from_fn(n, |r, c| {
        if r == c {
            cx(T::zero(), sign(r) * gamma)
        } else if r.abs_diff(c) == 1 {
            re(j)
        } else {
            Cx::zero()
        }
    }))
}
