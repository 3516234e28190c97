use thiserror::Error;

/// Failure modes of the numerical routines.
///
/// Numeric quantities are carried as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bad dimension: {0}")]
    BadDimension(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("non-finite values in {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("eigenvector matrix is numerically singular (condition number {cond:.3e}); exceptional point nearby")]
    DefectiveMatrix { cond: f64 },

    #[error("eigenvalue iteration did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("matrix is not positive definite (minimum eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),

    #[error("normalization trace underflowed ({trace:.3e})")]
    NormalizationUnderflow { trace: f64 },

    #[error("evolution overflowed: {0}")]
    Overflow(String),

    #[error("series never returns to its initial value")]
    NoRecurrence,

    #[error("tail is not exponential (R^2 = {r_squared:.5})")]
    NonExponentialTail { r_squared: f64 },

    #[error("fit unstable (stderr = {stderr:.3e}): {reason}")]
    FitUnstable { stderr: f64, reason: String },

    #[error("minimum gap does not shrink toward the probed exceptional point")]
    NoCoalescence,

    #[error("spectrum is not real: PT symmetry is broken (max |Im E| = {max_gamma:.3e})")]
    BrokenPhase { max_gamma: f64 },

    #[error("metric is too ill-conditioned near the exceptional point (cond = {cond:.3e})")]
    NearEP { cond: f64 },

    #[error("operator expected positive has eigenvalue {0:.3e}")]
    NotPositive(f64),

    #[error("selected ancilla branch has zero norm")]
    ZeroBranch,

    #[error("parameter grid is empty")]
    EmptyGrid,

    #[error("fit needs at least {needed} points spanning one decade (have {points} over {decades:.2} decades)")]
    InsufficientDecades { needed: usize, points: usize, decades: f64 },

    #[error("overlap trend toward the exceptional point is not monotone")]
    AmbiguousLimit,

    #[error("family has no exceptional point at the requested parameter")]
    NoExceptionalPoint,

    #[error("Gaussian width {width} is below four grid spacings ({spacing})")]
    GridTooCoarse { width: f64, spacing: f64 },

    #[error("beam states live on different grids")]
    GridMismatch,
}

pub type Result<T> = std::result::Result<T, Error>;
