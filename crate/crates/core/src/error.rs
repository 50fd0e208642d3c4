//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by construction, validation, and numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),

    #[error("entries must be finite (found NaN or Inf)")]
    NonFinite,

    #[error("matrix is not Hermitian: max entry deviation {0:.3e}")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite: min eigenvalue {0:.3e}")]
    NotPsd(f64),

    #[error("trace must be 1: got {0}")]
    InvalidTrace(f64),

    #[error("vector is not normalizable: norm {0:.3e}")]
    ZeroNorm(f64),

    #[error("eigendecomposition did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("probabilities must be nonnegative and sum to 1: sum {0}")]
    InvalidProbabilities(f64),

    #[error("ensemble size {size} is smaller than the state rank {rank}")]
    EnsembleTooSmall { size: usize, rank: usize },

    #[error("generator set is linearly dependent: Gram min eigenvalue {0:.3e}")]
    LinearlyDependent(f64),

    #[error("operator function axiom violated: {0}")]
    InvalidOperatorFunction(String),

    #[error(
        "unbounded Fisher information: f(0) = 0 while a generator couples the \
         support of the state to its kernel"
    )]
    UnboundedFisher,

    #[error("Kraus completeness violated: {0}")]
    IncompleteKraus(String),

    #[error("channel branch fires with negligible weight {0:.3e}")]
    BranchNeverFires(f64),

    #[error("spectrum is incommensurate: {0}; supply an explicit period")]
    IncommensurateSpectrum(String),

    #[error("generators do not commute: max commutator norm {0:.3e}")]
    NonCommutingGenerators(f64),

    #[error("operator does not commute with generator {index}: commutator norm {norm:.3e}")]
    NotCovariantGenerator { index: usize, norm: f64 },

    #[error("unitary does not commute with the joint representation at grid point {0:?}: deviation {1:.3e}")]
    DilationNotCovariant(Vec<f64>, f64),

    #[error("state is rank deficient (min eigenvalue {0:.3e}); regularize before calling")]
    RankDeficient(f64),

    #[error("unknown operator function: {0}")]
    UnknownFunction(String),

    #[error("unknown preset: {0}")]
    UnknownPreset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular linear system (pivot {0:.3e})")]
    SingularSystem(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
