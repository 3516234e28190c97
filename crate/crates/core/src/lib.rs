//! Information flow in PT-symmetric quantum dynamics: biorthogonal spectra,
//! normalised non-unitary evolution and trace-distance distinguishability,
//! critical scaling at exceptional points, the Hermitian dilation of the
//! unbroken phase, and a split-step solver for the optical analogue.
//!
//! Every routine is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix the double-precision types most callers want.

pub mod criticality;
pub mod dynamics;
pub mod embedding;
pub mod error;
pub mod fit;
pub mod io;
pub mod linalg;
pub mod metric;
pub mod optics;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex<f64>;
pub type C32 = num_complex::Complex<f32>;
pub type Matrix = linalg::ComplexMatrix<f64>;
pub type Matrix32 = linalg::ComplexMatrix<f32>;
pub type Eigensystem64 = spectral::Eigensystem<f64>;
pub type DensityMatrix64 = dynamics::DensityMatrix<f64>;
pub type Series64 = dynamics::DistinguishabilitySeries<f64>;
pub type MetricPair64 = metric::MetricPair<f64>;
pub type ExtendedState64 = embedding::ExtendedState<f64>;
pub type ExtendedHamiltonian64 = embedding::ExtendedHamiltonian<f64>;
pub type BeamState64 = optics::BeamState<f64>;
