use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Cx, Scalar};

/// Dense square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix<T> {
    dim: usize,
    data: Vec<Cx<T>>,
}

impl<T: Scalar> ComplexMatrix<T> {
    /// Builds a matrix from row-major entries; rejects non-square input and
    /// non-finite values.
    pub fn new(dim: usize, data: Vec<Cx<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadDimension("matrix dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::BadDimension(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![Cx::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Cx::one();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Row-major construction from nested rows. Panics on ragged input; meant
    /// for literals in tests and model builders.
    pub fn from_rows(rows: &[Vec<Cx<T>>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "rows must form a square matrix");
        Self { dim, data: rows.iter().flatten().copied().collect() }
    }

    pub fn from_diag(diag: &[Cx<T>]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<Cx<T>>]) -> Self {
        let dim = cols.len();
        assert!(cols.iter().all(|c| c.len() == dim), "columns must form a square matrix");
        Self::from_fn(dim, |i, j| cols[j][i])
    }

    /// Rank-one outer product |u⟩⟨v|.
    pub fn outer(u: &[Cx<T>], v: &[Cx<T>]) -> Self {
        assert_eq!(u.len(), v.len());
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[Cx<T>] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Cx<T>> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[Cx<T>] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| *z * s).collect() }
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| *z * s).collect() }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![Cx::zero(); n * n];
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                let rrow = &rhs.data[k * n..(k + 1) * n];
                for (o, b) in row.iter_mut().zip(rrow) {
                    *o += a * *b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    pub fn mul_vec(&self, v: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(self.dim, v.len(), "matrix-vector dimension mismatch");
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).fold(Cx::zero(), |acc, (a, b)| acc + *a * *b))
            .collect()
    }

    /// ⟨v| A for a row vector: returns (A† v)† as a plain vector of components.
    pub fn vec_mul(&self, v: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(self.dim, v.len());
        (0..self.dim)
            .map(|j| (0..self.dim).fold(Cx::zero(), |acc, i| acc + v[i].conj() * self[(i, j)]))
            .collect()
    }

    pub fn trace(&self) -> Cx<T> {
        (0..self.dim).fold(Cx::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn diagonal(&self) -> Vec<Cx<T>> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// ‖A − A†‖_F.
    pub fn hermiticity_residual(&self) -> T {
        (self - &self.adjoint()).frobenius_norm()
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_residual() <= tol
    }

    /// (A + A†)/2.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(T::half())
    }

    /// Kronecker product A ⊗ B (A indexes the outer block).
    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.dim, rhs.dim);
        Self::from_fn(n * m, |i, j| self[(i / m, j / m)] * rhs[(i % m, j % m)])
    }

    /// Entrywise distance in Frobenius norm.
    pub fn distance(&self, rhs: &Self) -> T {
        (self - rhs).frobenius_norm()
    }
}

impl<T> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Cx<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cx<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Scalar> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<T: Scalar> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

impl<T: Scalar> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        self.matmul(rhs)
    }
}

impl<T: Scalar> Neg for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn neg(self) -> ComplexMatrix<T> {
        ComplexMatrix { dim: self.dim, data: self.data.iter().map(|z| -*z).collect() }
    }
}

/// ⟨u|v⟩ with the conjugate on the left argument.
pub fn inner<T: Scalar>(u: &[Cx<T>], v: &[Cx<T>]) -> Cx<T> {
    assert_eq!(u.len(), v.len(), "inner product dimension mismatch");
    u.iter().zip(v).fold(Cx::zero(), |acc, (a, b)| acc + a.conj() * *b)
}

pub fn vec_norm<T: Scalar>(v: &[Cx<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Returns `v / ‖v‖`, or `None` for the zero vector.
pub fn normalized<T: Scalar>(v: &[Cx<T>]) -> Option<Vec<Cx<T>>> {
    let n = vec_norm(v);
    if n == T::zero() || !n.is_finite() {
        return None;
    }
    Some(v.iter().map(|z| *z / n).collect())
}

/// ‖u − e^{iθ} v‖ minimised over the global phase θ.
pub fn phase_aligned_distance<T: Scalar>(u: &[Cx<T>], v: &[Cx<T>]) -> T {
    let ov = inner(v, u);
    let phase = if ov.norm() > T::zero() { ov / ov.norm() } else { Cx::one() };
    u.iter()
        .zip(v)
        .map(|(a, b)| (*a - *b * phase).norm_sqr())
        .sum::<T>()
        .sqrt()
}
