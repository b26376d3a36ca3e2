//! Dense linear algebra, matrix exponential, spectra and quadrature.

mod eigen;
mod expm;
mod linear;
mod matrix;
mod quadrature;

pub(crate) use eigen::complex_solve;
pub use eigen::{balance, eigendecompose, eigenvalues, pairing_residual, ComplexSpectrum};
pub use expm::mat_exp;
pub use linear::{cholesky, inverse, minimize_quadratic, solve_linear, BandedMatrix, Lu, PIVOT_TOLERANCE};
pub use matrix::Matrix;
pub use quadrature::{exponential_integral, gauss_legendre, graded_breaks, integrate, integrate_panels, DEFAULT_NODES};
