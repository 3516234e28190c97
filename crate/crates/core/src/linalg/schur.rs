//! Complex Schur decomposition A = Q T Q† (Householder reduction to
//! Hessenberg form followed by single-shift QR with Wilkinson shifts) and
//! right eigenvectors by back substitution on T.

use num_traits::{One, Zero};

use super::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::{re, Cx, Scalar};

const ITERS_PER_EIGENVALUE: usize = 60;

pub struct Schur<T> {
    pub q: ComplexMatrix<T>,
    pub t: ComplexMatrix<T>,
}

impl<T: Scalar> Schur<T> {
    pub fn eigenvalues(&self) -> Vec<Cx<T>> {
        self.t.diagonal()
    }

    /// Unit-norm right eigenvectors, one per diagonal entry of T.
    ///
    /// Near-equal diagonal entries are separated by a floor of ε‖T‖ in the
    /// back substitution, so a defective matrix yields (numerically) parallel
    /// vectors rather than a division by zero.
    pub fn eigenvectors(&self) -> Vec<Vec<Cx<T>>> {
        let n = self.t.dim();
        let floor = (T::epsilon() * self.t.frobenius_norm()).max(T::min_positive_value());
        (0..n)
            .map(|k| {
                let lambda = self.t[(k, k)];
                let mut x = vec![Cx::<T>::zero(); n];
                x[k] = Cx::one();
                for i in (0..k).rev() {
                    let mut acc = Cx::<T>::zero();
                    for j in i + 1..=k {
                        acc += self.t[(i, j)] * x[j];
                    }
                    let mut den = self.t[(i, i)] - lambda;
                    if den.norm() < floor {
                        den = re(floor);
                    }
                    x[i] = -acc / den;
                    // keep the partial solution bounded
                    let big = x.iter().map(|z| z.norm()).fold(T::zero(), T::max);
                    if big > T::lit(1e100) {
                        for z in x.iter_mut() {
                            *z = *z / big;
                        }
                    }
                }
                let v = self.q.mul_vec(&x);
                let nrm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
                v.into_iter().map(|z| z / nrm).collect()
            })
            .collect()
    }
}

fn householder_hessenberg<T: Scalar>(a: &mut ComplexMatrix<T>, q: &mut ComplexMatrix<T>) {
    let n = a.dim();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Vec<Cx<T>> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if xnorm == T::zero() {
            continue;
        }
        let phase = if x[0].norm() > T::zero() { x[0] / x[0].norm() } else { Cx::one() };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for z in v.iter_mut() {
            *z = *z / vnorm;
        }
        let two = re(T::two());
        // A ← (I − 2vv†) A on rows k+1..n
        for j in 0..n {
            let mut s = Cx::<T>::zero();
            for (idx, i) in (k + 1..n).enumerate() {
                s += v[idx].conj() * a[(i, j)];
            }
            for (idx, i) in (k + 1..n).enumerate() {
                a[(i, j)] -= two * v[idx] * s;
            }
        }
        // A ← A (I − 2vv†) on columns k+1..n; same for Q
        for m in [&mut *a, &mut *q] {
            for i in 0..n {
                let mut s = Cx::<T>::zero();
                for (idx, j) in (k + 1..n).enumerate() {
                    s += m[(i, j)] * v[idx];
                }
                for (idx, j) in (k + 1..n).enumerate() {
                    m[(i, j)] -= two * s * v[idx].conj();
                }
            }
        }
        for i in k + 2..n {
            a[(i, k)] = Cx::zero();
        }
    }
}

fn givens<T: Scalar>(x: Cx<T>, y: Cx<T>) -> (T, Cx<T>) {
    let ax = x.norm();
    let rho = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if rho == T::zero() {
        return (T::one(), Cx::zero());
    }
    if ax == T::zero() {
        return (T::zero(), Cx::one());
    }
    let c = ax / rho;
    let s = (x / ax) * y.conj() / rho;
    (c, s)
}

fn wilkinson_shift<T: Scalar>(a: Cx<T>, b: Cx<T>, c: Cx<T>, d: Cx<T>) -> Cx<T> {
    let half = re(T::half());
    let tr = (a + d) * half;
    let disc = ((a - d) * half * ((a - d) * half) + b * c).sqrt();
    let l1 = tr + disc;
    let l2 = tr - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Full complex Schur form of a square matrix.
pub fn schur<T: Scalar>(a: &ComplexMatrix<T>) -> Result<Schur<T>> {
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix passed to the Schur decomposition".into()));
    }
    let n = a.dim();
    let mut h = a.clone();
    let mut q = ComplexMatrix::identity(n);
    householder_hessenberg(&mut h, &mut q);
    if n == 1 {
        return Ok(Schur { q, t: h });
    }
    let eps = T::epsilon();
    let anorm = h.frobenius_norm().max(T::min_positive_value());
    let max_iter = ITERS_PER_EIGENVALUE * n;
    let mut hi = n - 1;
    let mut iter_since_deflation = 0usize;
    let mut total_iter = 0usize;
    while hi > 0 {
        // locate the bottom of the unreduced block
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            let scale = if diag > T::zero() { diag } else { anorm };
            if sub <= eps * scale {
                h[(lo, lo - 1)] = Cx::zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter_since_deflation = 0;
            continue;
        }
        total_iter += 1;
        iter_since_deflation += 1;
        if total_iter > max_iter {
            return Err(Error::NoConvergence(max_iter));
        }
        let mu = if iter_since_deflation % 11 == 0 {
            // exceptional shift to break cycles
            h[(hi, hi)] + re(T::lit(0.75) * h[(hi, hi - 1)].norm())
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for i in lo..=hi {
            h[(i, i)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            let cc = re(c);
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = cc * x + s * y;
                h[(k + 1, j)] = -s.conj() * x + cc * y;
            }
            h[(k + 1, k)] = Cx::zero();
            rots.push((k, cc, s));
        }
        for &(k, cc, s) in &rots {
            let rows = (k + 2).min(hi) + 1;
            for i in 0..rows {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * cc + y * s.conj();
                h[(i, k + 1)] = -x * s + y * cc;
            }
            for i in 0..n {
                let x = q[(i, k)];
                let y = q[(i, k + 1)];
                q[(i, k)] = x * cc + y * s.conj();
                q[(i, k + 1)] = -x * s + y * cc;
            }
        }
        for i in lo..=hi {
            h[(i, i)] += mu;
        }
    }
    for i in 0..n {
        for j in 0..i {
            h[(i, j)] = Cx::zero();
        }
    }
    Ok(Schur { q, t: h })
}

/// Eigenvalues only.
pub fn eigenvalues<T: Scalar>(a: &ComplexMatrix<T>) -> Result<Vec<Cx<T>>> {
    Ok(schur(a)?.eigenvalues())
}
