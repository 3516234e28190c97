//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (Higham 2005). Works for defective matrices, which the eigenvector route
//! cannot handle.

use super::{ComplexMatrix, Lu};
use crate::error::{Error, Result};
use crate::scalar::{re, Cx, Scalar};

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

fn lincomb<T: Scalar>(terms: &[(f64, &ComplexMatrix<T>)], n: usize) -> ComplexMatrix<T> {
    let mut out = ComplexMatrix::zeros(n);
    for (c, m) in terms {
        let c = re(T::lit(*c));
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += c * m[(i, j)];
            }
        }
    }
    out
}

fn pade_low<T: Scalar>(a: &ComplexMatrix<T>, b: &[f64]) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
    // b has length m+1, m odd
    let n = a.dim();
    let ident = ComplexMatrix::identity(n);
    let a2 = a.matmul(a);
    let mut powers = vec![ident];
    for k in 1..=b.len() / 2 {
        let next = powers[k - 1].matmul(&a2);
        powers.push(next);
    }
    let odd: Vec<(f64, &ComplexMatrix<T>)> =
        (0..powers.len()).filter(|k| 2 * k + 1 < b.len()).map(|k| (b[2 * k + 1], &powers[k])).collect();
    let even: Vec<(f64, &ComplexMatrix<T>)> =
        (0..powers.len()).filter(|k| 2 * k < b.len()).map(|k| (b[2 * k], &powers[k])).collect();
    let u = a.matmul(&lincomb(&odd, n));
    let v = lincomb(&even, n);
    (u, v)
}

fn pade13<T: Scalar>(a: &ComplexMatrix<T>) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
    let n = a.dim();
    let b = &B13;
    let ident = ComplexMatrix::identity(n);
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let inner_u = lincomb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n);
    let u_rest = lincomb(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &ident)], n);
    let u = a.matmul(&(&a6.matmul(&inner_u) + &u_rest));
    let inner_v = lincomb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n);
    let v_rest = lincomb(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &ident)], n);
    let v = &a6.matmul(&inner_v) + &v_rest;
    (u, v)
}

/// exp(A) for a dense complex matrix.
pub fn expm<T: Scalar>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    if !a.is_finite() {
        return Err(Error::NonFinite("expm argument".into()));
    }
    let norm = a.norm_one().as_f64();
    if norm == 0.0 {
        return Ok(ComplexMatrix::identity(a.dim()));
    }
    for (m, theta) in THETA {
        if norm <= theta {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(a, b);
            return solve_pade(&u, &v);
        }
    }
    let s = ((norm / THETA_13).log2().ceil()).max(0.0) as i32;
    let scaled = a.scale(re(T::lit(2f64.powi(-s))));
    let (u, v) = pade13(&scaled);
    let mut r = solve_pade(&u, &v)?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    if !r.is_finite() {
        return Err(Error::Overflow("matrix exponential".into()));
    }
    Ok(r)
}

fn solve_pade<T: Scalar>(u: &ComplexMatrix<T>, v: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let p = v + u;
    let q = v - u;
    Ok(Lu::factor(&q)?.solve(&p))
}

/// exp(−i H t).
pub fn propagator<T: Scalar>(h: &ComplexMatrix<T>, t: T) -> Result<ComplexMatrix<T>> {
    let minus_i_t = Cx::new(T::zero(), -t);
    if t == T::zero() {
        return Ok(ComplexMatrix::identity(h.dim()));
    }
    expm(&h.scale(minus_i_t))
}
