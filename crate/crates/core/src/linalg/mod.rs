//! Dense complex linear algebra used by the matrix-function layer.

mod expm;
mod hermitian;
mod matrix;
mod schur;

pub use expm::expm;
pub use hermitian::{hermitian_eigen, max_hermitian_eigenvalue, min_hermitian_eigenvalue, norm2, HermitianEigen};
pub use matrix::{basis, inner, vec_norm, CVector, ComplexMatrix, Lu};
pub use schur::{schur, triangular_eigenvectors, Schur};
