//! Pseudo-Hermiticity metric η (ηH = H†η), the scalar c = Σ 1/λ_i over its
//! eigenvalues, ζ = cη − I and the square roots the dilation needs.

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eigh, ComplexMatrix, HermitianEigen};
use crate::scalar::{re, Cx, Scalar};
use crate::spectral::{eig_biorthogonal, default_phase_tol, Eigensystem};

/// cond(η) above which the metric is refused.
pub const MAX_METRIC_COND: f64 = 1e12;

fn check_unbroken<T: Scalar>(es: &Eigensystem<T>) -> Result<()> {
    let g = es.max_abs_gamma();
    if g > default_phase_tol::<T>() * es.h_norm {
        return Err(Error::BrokenPhase { max_gamma: g.as_f64() });
    }
    Ok(())
}

/// η in the unit-determinant gauge, with its eigendecomposition.
fn eta_with_eigen<T: Scalar>(es: &Eigensystem<T>) -> Result<(ComplexMatrix<T>, HermitianEigen<T>)> {
    check_unbroken(es)?;
    let n = es.dim();
    let mut eta = ComplexMatrix::<T>::zeros(n);
    for k in 0..n {
        // χ̃ = χ / conj⟨χ|φ⟩ gives ⟨χ̃_k|φ_k⟩ = 1
        let d = es.biorth_overlaps[(k, k)];
        let w = T::one() / d.norm_sqr();
        let chi = &es.left_vectors[k];
        for i in 0..n {
            for j in 0..n {
                eta[(i, j)] += chi[i] * chi[j].conj() * re(w);
            }
        }
    }
    let eta = eta.hermitian_part();
    let eig = eigh(&eta)?;
    let lmin = eig.min();
    if !(lmin > T::zero()) {
        return Err(Error::NotPositiveDefinite(lmin.as_f64()));
    }
    let cond = eig.max() / lmin;
    if !(cond.as_f64() <= MAX_METRIC_COND) {
        return Err(Error::NearEP { cond: cond.as_f64() });
    }
    // det η = Π λ_i; rescale to det 1 through the log to avoid overflow
    let log_det: T = eig.values.iter().map(|l| l.ln()).sum();
    let scale = (-log_det / T::from_usize_lossy(n)).exp();
    let eig = HermitianEigen { values: eig.values.iter().map(|&l| l * scale).collect(), vectors: eig.vectors };
    Ok((eta.scale_real(scale), eig))
}

/// Metric operator of an unbroken Hamiltonian, normalised to det η = 1.
pub fn metric_eta<T: Scalar>(es: &Eigensystem<T>) -> Result<ComplexMatrix<T>> {
    Ok(eta_with_eigen(es)?.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricPair<T> {
    pub eta: ComplexMatrix<T>,
    /// Eigenvalues of η, ascending.
    pub eta_eigenvalues: Vec<T>,
    pub c: T,
    pub zeta: ComplexMatrix<T>,
    pub zeta_sqrt: ComplexMatrix<T>,
    pub zeta_inv_sqrt: ComplexMatrix<T>,
}

/// η, c, ζ and ζ^{±1/2}. All matrices share η's eigenbasis, so the roots
/// are taken there rather than by a second diagonalisation.
pub fn build_metric_pair<T: Scalar>(es: &Eigensystem<T>) -> Result<MetricPair<T>> {
    let (eta, eig) = eta_with_eigen(es)?;
    let c: T = eig.values.iter().map(|&l| T::one() / l).sum();
    let zeta_vals: Vec<T> = eig.values.iter().map(|&l| c * l - T::one()).collect();
    let zmin = zeta_vals.iter().copied().fold(T::infinity(), T::min);
    if !(zmin > T::zero()) {
        return Err(Error::NotPositive(zmin.as_f64()));
    }
    let zeta = eig.map(|l| re(c * l - T::one())).hermitian_part();
    let zeta_sqrt = eig.map(|l| re((c * l - T::one()).sqrt())).hermitian_part();
    let zeta_inv_sqrt = eig.map(|l| re(T::one() / (c * l - T::one()).sqrt())).hermitian_part();
    Ok(MetricPair { eta, eta_eigenvalues: eig.values, c, zeta, zeta_sqrt, zeta_inv_sqrt })
}

/// Decomposes `h` and builds its metric pair.
pub fn metric_pair_for<T: Scalar>(h: &ComplexMatrix<T>) -> Result<MetricPair<T>> {
    build_metric_pair(&eig_biorthogonal(h)?)
}

/// ⟨ψ|η|ψ⟩.
pub fn eta_expectation<T: Scalar>(eta: &ComplexMatrix<T>, psi: &[Cx<T>]) -> T {
    let e = eta.mul_vec(psi);
    psi.iter().zip(&e).fold(Cx::<T>::zero(), |acc, (a, b)| acc + a.conj() * *b).re
}
