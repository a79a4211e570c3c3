//! Dense complex linear algebra for the small matrices of this crate.

mod cubic;
mod eig;
mod expm;
mod lu;
mod matrix;

pub use cubic::{cardano, relative_residual, CubicRoots};
pub use eig::{eig, eigenvalues, sort_order, sort_values, Spectrum, MAX_DIM, NEAR_DEFECTIVE};
pub use expm::{expm_taylor, expm_times, Propagator};
pub use lu::{inverse, solve, Lu, PIVOT_TOL};
pub use matrix::{bilinear, inner, vec_norm, CMatrix};
