//! Dense complex linear algebra used by the physics modules. Sized for the
//! small operators (N up to a few hundred) that appear here, not for speed.

mod expm;
mod hermitian;
mod lu;
mod matrix;
mod schur;

pub use expm::{expm, propagator};
pub use hermitian::{
    eigh, eigvalsh, entropy_of, herm_inv_sqrt, herm_sqrt, spectral_norm, unitary_propagator, HermitianEigen,
};
pub use lu::{condition_number, inverse, Lu};
pub use matrix::{inner, normalized, phase_aligned_distance, vec_norm, ComplexMatrix};
pub use schur::{eigenvalues, schur, Schur};
