//! Non-Hermitian waveguide cavity QED built from anti-Bragg atom-dimer mirrors.
//!
//! All quantities use internal units: the waveguide decay rate of a mirror
//! atom is 1, positions are measured in resonant wavelengths and times in
//! inverse mirror decay rates.
//!
//! * [`numerics`]: dense complex linear algebra (eigensystems with left and
//!   right vectors, Cardano roots, LU solves, propagators).
//! * [`model`]: atoms on a waveguide and the effective Hamiltonians built from them.
//! * [`scattering`]: single-photon reflection and transmission.
//! * [`nonhermitian`]: anti-PT analysis of the four-atom cavity.
//! * [`polaritons`]: probe-cavity polaritons and spectral feature extraction.
//! * [`dynamics`]: single-excitation and Lindblad time evolution.
//! * [`cli`]: figure recipes and CSV output for the `antipt-cavity` binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod nonhermitian;
pub mod numerics;
pub mod polaritons;
pub mod scattering;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
