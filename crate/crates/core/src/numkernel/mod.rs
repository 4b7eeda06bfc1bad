//! Dense linear algebra: matrices, symmetric eigendecomposition, spectral and
//! Perron quantities, linear solves and Lyapunov-based stability.
//!
//! Every problem in this crate is desk-sized (a few dozen rows), so the
//! kernels favour simple, robust algorithms: cyclic Jacobi for symmetric
//! spectra, partial-pivot LU, and Kronecker-vectorized Lyapunov solves.

mod eig;
mod factor;
mod lyapunov;
mod matrix;

pub use eig::{max_eigenvalue, min_eigenvalue, perron_vector, spectral_norm, sym_eig, PerronVector, SymEigen};
pub use factor::{Cholesky, Lu};
pub use lyapunov::{is_schur_stable, solve_discrete_lyapunov, SchurCheck};
pub use matrix::{Matrix, SymMatrix};

pub(crate) use matrix::norm2;
