//! Hermitian eigendecomposition by cyclic complex Jacobi rotations, plus the
//! matrix functions built on it.

use num_traits::Zero;

use super::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::{cx, re, Cx, Scalar};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as columns of `vectors`.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: ComplexMatrix<T>,
}

impl<T: Scalar> HermitianEigen<T> {
    /// Rebuilds V f(Λ) V†.
    pub fn map(&self, f: impl Fn(T) -> Cx<T>) -> ComplexMatrix<T> {
        let n = self.values.len();
        let fv: Vec<Cx<T>> = self.values.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n).fold(Cx::zero(), |acc, k| {
                acc + self.vectors[(i, k)] * fv[k] * self.vectors[(j, k)].conj()
            })
        })
    }

    pub fn min(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::zero)
    }

    pub fn max(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }
}

/// Diagonalises the Hermitian part of `a`. The caller is responsible for
/// checking that `a` is Hermitian to its own tolerance.
pub fn eigh<T: Scalar>(a: &ComplexMatrix<T>) -> Result<HermitianEigen<T>> {
    let n = a.dim();
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let total = m.frobenius_norm();
    if total == T::zero() {
        return Ok(HermitianEigen { values: vec![T::zero(); n], vectors: v });
    }
    let thresh = T::epsilon() * total;
    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<T>()
            .sqrt();
        if off <= thresh {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= T::min_positive_value() {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // phase that makes the (p,q) entry real, then a real rotation
                let phase = apq / r;
                let tau = (aqq - app) / (T::two() * r);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                // G = [[c, s·e^{iα}], [−s·e^{−iα}... ]] acting on columns p,q
                let g_pp = re(c);
                let g_pq = phase * s;
                let g_qp = -(phase.conj()) * s;
                let g_qq = re(c);
                // columns: A ← A G
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * g_pp + akq * g_qp;
                    m[(k, q)] = akp * g_pq + akq * g_qq;
                }
                // rows: A ← G† A
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    m[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                m[(p, q)] = Cx::zero();
                m[(q, p)] = Cx::zero();
                m[(p, p)] = re(m[(p, p)].re);
                m[(q, q)] = re(m[(q, q)].re);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(MAX_SWEEPS));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

pub fn eigvalsh<T: Scalar>(a: &ComplexMatrix<T>) -> Result<Vec<T>> {
    Ok(eigh(a)?.values)
}

/// Spectral norm ‖A‖₂ = sqrt(λ_max(A†A)).
pub fn spectral_norm<T: Scalar>(a: &ComplexMatrix<T>) -> T {
    match eigvalsh(&a.adjoint().matmul(a)) {
        Ok(vals) => vals.last().copied().unwrap_or_else(T::zero).max(T::zero()).sqrt(),
        Err(_) => a.frobenius_norm(),
    }
}

fn check_positive<T: Scalar>(m: &ComplexMatrix<T>) -> Result<HermitianEigen<T>> {
    let scale = m.frobenius_norm().max(T::min_positive_value());
    if m.hermiticity_residual() > T::lit(1e-10) * scale.max(T::one()) {
        return Err(Error::InvalidInput(format!(
            "matrix is not Hermitian (residual {:.3e})",
            m.hermiticity_residual().as_f64()
        )));
    }
    let eig = eigh(m)?;
    if eig.min() <= T::zero() {
        return Err(Error::NotPositiveDefinite(eig.min().as_f64()));
    }
    Ok(eig)
}

/// Principal square root of a Hermitian positive-definite matrix.
pub fn herm_sqrt<T: Scalar>(m: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let eig = check_positive(m)?;
    Ok(eig.map(|l| re(l.sqrt())).hermitian_part())
}

/// M^{-1/2} for Hermitian positive-definite M.
pub fn herm_inv_sqrt<T: Scalar>(m: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let eig = check_positive(m)?;
    Ok(eig.map(|l| re(T::one() / l.sqrt())).hermitian_part())
}

/// exp(−i H t) for Hermitian H via its eigenbasis; exactly unitary up to rounding.
pub fn unitary_propagator<T: Scalar>(eig: &HermitianEigen<T>, t: T) -> ComplexMatrix<T> {
    eig.map(|l| {
        let ph = -l * t;
        cx(ph.cos(), ph.sin())
    })
}

/// Von Neumann entropy −Σ p ln p of a spectrum, ignoring non-positive weights.
pub fn entropy_of<T: Scalar>(weights: &[T]) -> T {
    weights
        .iter()
        .filter(|&&p| p > T::zero())
        .map(|&p| -p * p.ln())
        .sum()
}
