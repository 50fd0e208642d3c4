//! Quantum Fisher information as a resource measure for symmetric dynamics.
//!
//! The crate is organized around one pipeline: build states and Hermitian
//! generators ([`states`], [`symmetry`]), evaluate metric-adjusted Fisher
//! information matrices over a family of standard operator functions
//! ([`fisher`]), push states through covariant channels and group twirls
//! ([`channels`]), and run the structural verification battery — positivity,
//! faithfulness, monotonicity, the minimal-covariance characterization, and
//! the mixed-state counterexample — with machine-readable reports
//! ([`theoremlab`]).
//!
//! [`linalg`] carries the dense complex-matrix kernels (Jacobi
//! eigendecomposition, PSD square root, polar decomposition, partial trace,
//! vectorization); [`oracle`] holds an independent Lyapunov-equation route to
//! the symmetric-logarithmic-derivative Fisher information used to
//! cross-check the spectral implementation.

pub mod channels;
pub mod error;
pub mod fisher;
pub mod linalg;
pub mod oracle;
pub mod states;
pub mod symmetry;
pub mod theoremlab;

pub use error::{Error, Result};
