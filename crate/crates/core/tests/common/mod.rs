//! Shared oracles and generators for the integration tests.
#![allow(dead_code)]

use ptflow::linalg::ComplexMatrix;
use ptflow::{DensityMatrix64, Matrix, C64};
use rand::Rng;

/// D(t) for |↑⟩, |↓⟩ under s = 1: [1 + (2a sin²θ/(1 − a²))²]^{−1/2}, θ = √(1 − a²) t.
pub fn two_level_d(a: f64, t: f64) -> f64 {
    let w = (1.0 - a * a).sqrt();
    let x = 2.0 * a * (w * t).sin().powi(2) / (1.0 - a * a);
    1.0 / (1.0 + x * x).sqrt()
}

pub fn random_vector(rng: &mut impl Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

pub fn random_matrix(rng: &mut impl Rng, n: usize) -> Matrix {
    ComplexMatrix::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// AA†/tr(AA†), full rank with probability one.
pub fn random_density(rng: &mut impl Rng, n: usize) -> DensityMatrix64 {
    let a = random_matrix(rng, n);
    let m = a.matmul(&a.adjoint());
    let tr = m.trace().re;
    DensityMatrix64::new(m.scale_real(1.0 / tr)).expect("valid density matrix")
}

/// (M + P M* P)/2 with P the reversal: commutes with PT.
pub fn pt_symmetrize(m: &Matrix) -> Matrix {
    let n = m.dim();
    ComplexMatrix::from_fn(n, |i, j| (m[(i, j)] + m[(n - 1 - i, n - 1 - j)].conj()) * 0.5)
}

/// Greedy matching distance between a spectrum and its complex conjugate.
pub fn conjugate_mismatch(ev: &[C64]) -> f64 {
    let mut pool: Vec<C64> = ev.iter().map(|e| e.conj()).collect();
    let mut worst: f64 = 0.0;
    for e in ev {
        let (k, d) = pool.iter().enumerate().map(|(k, c)| (k, (c - e).norm())).min_by(|x, y| x.1.total_cmp(&y.1)).expect("non-empty pool");
        worst = worst.max(d);
        pool.swap_remove(k);
    }
    worst
}
