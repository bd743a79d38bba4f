//! Finite elements for the scattered-field Morse-Ingard thermoacoustic
//! system on a bounded annular region, truncated with an exact nonlocal
//! boundary condition built from Helmholtz layer potentials.

pub mod error;
pub mod fem;
pub mod geometry;
pub mod layerpot;
pub mod linalg;
pub mod manufactured;
pub mod params;
pub mod point;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};
pub use point::Vec2;

/// Complex scalar used throughout the discretisation.
pub type Complex = num_complex::Complex64;

pub type ComplexVector = Vec<Complex>;
pub type SparseComplexMatrix = linalg::CsrMatrix<Complex>;
pub type DenseComplexMatrix = linalg::DenseMatrix<Complex>;
pub type SparseRealMatrix = linalg::CsrMatrix<f64>;
