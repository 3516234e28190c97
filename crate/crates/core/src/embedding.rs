//! Hermitian dilation of unbroken PT dynamics: the entangled state
//! |↑⟩⊗ψ + |↓⟩⊗ζ^{1/2}ψ evolving under H_tot = I₂⊗H_S + σ_y⊗V, whose
//! ↑ branch reproduces e^{−iHt}ψ.
//!
//! Packed 2N-vectors are ancilla-major: the ↑ block comes first.

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{pure_state_distance, time_grid};
use crate::error::{Error, Result};
use crate::io::csv_columns;
use crate::linalg::{eigh, entropy_of, eigvalsh, inner, inverse, propagator, unitary_propagator, vec_norm, ComplexMatrix, HermitianEigen};
use crate::metric::MetricPair;
use crate::scalar::{cx, imag_unit, Cx, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    Up,
    Down,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtendedState<T> {
    pub up: Vec<Cx<T>>,
    pub down: Vec<Cx<T>>,
}

impl<T: Scalar> ExtendedState<T> {
    pub fn packed(&self) -> Vec<Cx<T>> {
        self.up.iter().chain(&self.down).copied().collect()
    }

    pub fn from_packed(v: &[Cx<T>]) -> Result<Self> {
        if v.is_empty() || v.len() % 2 != 0 {
            return Err(Error::BadDimension(format!("packed extended state has odd length {}", v.len())));
        }
        let n = v.len() / 2;
        Ok(Self { up: v[..n].to_vec(), down: v[n..].to_vec() })
    }

    pub fn norm_sqr(&self) -> T {
        self.up.iter().chain(&self.down).map(|z| z.norm_sqr()).sum()
    }

    pub fn dim(&self) -> usize {
        self.up.len()
    }
}

/// |↑⟩⊗ψ + |↓⟩⊗ζ^{1/2}ψ; its squared norm is c⟨ψ|η|ψ⟩.
pub fn extend_state<T: Scalar>(psi: &[Cx<T>], mp: &MetricPair<T>) -> Result<ExtendedState<T>> {
    if psi.len() != mp.eta.dim() {
        return Err(Error::DimensionMismatch(psi.len(), mp.eta.dim()));
    }
    if !(vec_norm(psi) > T::zero()) {
        return Err(Error::InvalidInput("cannot extend the zero vector".into()));
    }
    Ok(ExtendedState { up: psi.to_vec(), down: mp.zeta_sqrt.mul_vec(psi) })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtendedHamiltonian<T> {
    pub h_s: ComplexMatrix<T>,
    pub v: ComplexMatrix<T>,
    pub h_tot: ComplexMatrix<T>,
    /// max(‖H_S − H_S†‖, ‖V − V†‖) before the blocks were symmetrised.
    pub hermiticity_residual: T,
    #[serde(skip)]
    eig: HermitianEigen<T>,
}

impl<T: Scalar> ExtendedHamiltonian<T> {
    /// e^{−iH_tot t}, exactly unitary up to rounding.
    pub fn propagator(&self, t: T) -> ComplexMatrix<T> {
        unitary_propagator(&self.eig, t)
    }
}

fn sigma_y<T: Scalar>() -> ComplexMatrix<T> {
    ComplexMatrix::from_rows(&[vec![Cx::zero(), -imag_unit()], vec![imag_unit(), Cx::zero()]])
}

/// H_S = (Hζ^{−1/2} + ζ^{1/2}H)(ζ^{1/2} + ζ^{−1/2})^{−1},
/// V = i(H − ζ^{1/2}Hζ^{−1/2})(ζ^{1/2} + ζ^{−1/2})^{−1}.
pub fn extended_hamiltonian<T: Scalar>(h: &ComplexMatrix<T>, mp: &MetricPair<T>) -> Result<ExtendedHamiltonian<T>> {
    if h.dim() != mp.eta.dim() {
        return Err(Error::DimensionMismatch(h.dim(), mp.eta.dim()));
    }
    let s = &mp.zeta_sqrt;
    let si = &mp.zeta_inv_sqrt;
    let w = inverse(&(s + si))?;
    let h_s = (&h.matmul(si) + &s.matmul(h)).matmul(&w);
    let v = (h - &s.matmul(h).matmul(si)).matmul(&w).scale(imag_unit());
    let hermiticity_residual = h_s.hermiticity_residual().max(v.hermiticity_residual());
    let h_s = h_s.hermitian_part();
    let v = v.hermitian_part();
    let h_tot = &ComplexMatrix::identity(2).kron(&h_s) + &sigma_y().kron(&v);
    let eig = eigh(&h_tot)?;
    Ok(ExtendedHamiltonian { h_s, v, h_tot, hermiticity_residual, eig })
}

/// Ψ(t) = e^{−iH_tot t}Ψ0.
pub fn evolve_extended<T: Scalar>(eh: &ExtendedHamiltonian<T>, psi0: &ExtendedState<T>, t: T) -> Result<ExtendedState<T>> {
    if !t.is_finite() || t < T::zero() {
        return Err(Error::InvalidInput(format!("evolution time must be finite and non-negative, got {t}")));
    }
    if 2 * psi0.dim() != eh.h_tot.dim() {
        return Err(Error::DimensionMismatch(2 * psi0.dim(), eh.h_tot.dim()));
    }
    if t == T::zero() {
        return Ok(psi0.clone());
    }
    let out = eh.propagator(t).mul_vec(&psi0.packed());
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Overflow("extended evolution".into()));
    }
    ExtendedState::from_packed(&out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Postselection<T> {
    /// Normalised branch state.
    pub state: Vec<Cx<T>>,
    pub success_probability: T,
}

/// Projects the ancilla onto `branch`.
pub fn postselect<T: Scalar>(psi: &ExtendedState<T>, branch: Branch) -> Result<Postselection<T>> {
    let part = match branch {
        Branch::Up => &psi.up,
        Branch::Down => &psi.down,
    };
    let nb: T = part.iter().map(|z| z.norm_sqr()).sum();
    let total = psi.norm_sqr();
    if !(nb > T::zero()) || !(total > T::zero()) {
        return Err(Error::ZeroBranch);
    }
    let inv = T::one() / nb.sqrt();
    Ok(Postselection { state: part.iter().map(|z| *z * inv).collect(), success_probability: nb / total })
}

/// Von Neumann entropy (nats) of the ancilla's reduced state; zero for the
/// zero vector.
pub fn entanglement_entropy<T: Scalar>(psi: &ExtendedState<T>) -> T {
    let total = psi.norm_sqr();
    if !(total > T::zero()) {
        return T::zero();
    }
    let b = [&psi.up, &psi.down];
    let rho = ComplexMatrix::from_fn(2, |i, j| inner(b[j], b[i]) / total);
    match eigvalsh(&rho) {
        Ok(p) => entropy_of(&p).max(T::zero()).min(T::LN_2()),
        Err(_) => T::zero(),
    }
}

/// S(t) of the dilated state built from ψ1, with D(t) between ψ1 and ψ2
/// under the PT dynamics for overlay plots.
#[derive(Clone, Debug, Serialize)]
pub struct EntanglementSeries<T> {
    pub times: Vec<T>,
    pub entropy: Vec<T>,
    pub distinguishability: Vec<T>,
}

impl<T: Scalar> EntanglementSeries<T> {
    /// CSV with columns t, S, D.
    pub fn to_csv(&self) -> String {
        let f = |v: &[T]| v.iter().map(|x| x.as_f64()).collect::<Vec<f64>>();
        csv_columns(&["t", "S", "D"], &[&f(&self.times), &f(&self.entropy), &f(&self.distinguishability)])
    }
}

pub fn entanglement_series<T: Scalar>(
    h: &ComplexMatrix<T>,
    mp: &MetricPair<T>,
    psi1: &[Cx<T>],
    psi2: &[Cx<T>],
    t_max: T,
    points: usize,
) -> Result<EntanglementSeries<T>> {
    let eh = extended_hamiltonian(h, mp)?;
    let ext0 = extend_state(psi1, mp)?;
    let times = time_grid(t_max, points)?;
    let rows = times
        .par_iter()
        .map(|&t| {
            let s = entanglement_entropy(&evolve_extended(&eh, &ext0, t)?);
            let u = propagator(h, t)?;
            let d = pure_state_distance(&u.mul_vec(psi1), &u.mul_vec(psi2))?;
            Ok((s, d))
        })
        .collect::<Result<Vec<(T, T)>>>()?;
    let (entropy, distinguishability) = rows.into_iter().unzip();
    Ok(EntanglementSeries { times, entropy, distinguishability })
}

/// ζ^{1/2}Hζ^{−1/2}, the generator of the ↓ branch.
pub fn down_branch_generator<T: Scalar>(h: &ComplexMatrix<T>, mp: &MetricPair<T>) -> ComplexMatrix<T> {
    mp.zeta_sqrt.matmul(h).matmul(&mp.zeta_inv_sqrt)
}

/// V for two levels in closed form, i c^{−1}(H − H†).
pub fn two_level_coupling<T: Scalar>(h: &ComplexMatrix<T>, c: T) -> ComplexMatrix<T> {
    (h - &h.adjoint()).scale(cx(T::zero(), T::one() / c))
}
