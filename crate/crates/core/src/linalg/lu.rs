//! LU factorisation with partial pivoting.

use num_traits::{One, Zero};

use super::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::{Cx, Scalar};

pub struct Lu<T> {
    lu: ComplexMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &ComplexMatrix<T>) -> Result<Self> {
        let n = a.dim();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        let tiny = scale * T::epsilon() * T::from_usize_lossy(n);
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= tiny || pivot == T::zero() {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve_vec(&self, b: &[Cx<T>]) -> Vec<Cx<T>> {
        let n = self.lu.dim();
        let mut x: Vec<Cx<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        x
    }

    /// Solves A X = B column by column.
    pub fn solve(&self, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let n = b.dim();
        let cols: Vec<Vec<Cx<T>>> = (0..n).map(|j| self.solve_vec(&b.column(j))).collect();
        ComplexMatrix::from_columns(&cols)
    }

    pub fn inverse(&self) -> ComplexMatrix<T> {
        self.solve(&ComplexMatrix::identity(self.lu.dim()))
    }

    pub fn determinant(&self) -> Cx<T> {
        let n = self.lu.dim();
        let mut det = Cx::one();
        for i in 0..n {
            det = det * self.lu[(i, i)];
        }
        // parity of the permutation
        let mut seen = vec![false; n];
        let mut swaps = 0usize;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                j = self.perm[j];
                len += 1;
            }
            swaps += len - 1;
        }
        if swaps % 2 == 1 {
            -det
        } else {
            det
        }
    }
}

pub fn inverse<T: Scalar>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    Ok(Lu::factor(a)?.inverse())
}

/// Frobenius-norm condition number ‖A‖_F ‖A⁻¹‖_F; infinite for singular A.
pub fn condition_number<T: Scalar>(a: &ComplexMatrix<T>) -> T {
    match inverse(a) {
        Ok(inv) if inv.is_finite() => a.frobenius_norm() * inv.frobenius_norm(),
        _ => T::infinity(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = ComplexMatrix::from_rows(&[
            vec![cx(0.0, 1.0), cx(2.0, 0.0), cx(0.5, -0.5)],
            vec![cx(1.0, 0.0), cx(0.0, 0.0), cx(3.0, 1.0)],
            vec![cx(-1.0, 2.0), cx(1.0, 1.0), cx(0.0, -2.0)],
        ]);
        let inv = inverse(&a).unwrap();
        assert!((&a * &inv).distance(&ComplexMatrix::identity(3)) < 1e-13);
    }

    #[test]
    fn determinant_tracks_permutation_sign() {
        let a = ComplexMatrix::from_rows(&[
            vec![cx(0.0, 0.0), cx(1.0, 0.0)],
            vec![cx(1.0, 0.0), cx(0.0, 0.0)],
        ]);
        let d = Lu::factor(&a).unwrap().determinant();
        assert!((d - cx(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = ComplexMatrix::from_rows(&[
            vec![cx(1.0, 0.0), cx(2.0, 0.0)],
            vec![cx(2.0, 0.0), cx(4.0, 0.0)],
        ]);
        assert!(matches!(Lu::factor(&a), Err(Error::Singular)));
        assert!(condition_number::<f64>(&a).is_infinite());
    }
}
