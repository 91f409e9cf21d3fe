//! Numerical laboratory for complexified Laplace eigenfunctions restricted to
//! geodesics of model surfaces: strip continuation, complex zeros, growth
//! exponents, orbital Fourier mass and Wigner statistics.

// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fourier;
pub mod geodesic;
pub mod growth;
pub mod numeric;
pub mod spectrum;
pub mod surface;
pub mod wigner;
pub mod zeros;

pub use error::{Error, Result};
pub use numeric::C64;
pub use spectrum::{Continuation, ConvergenceFactor, ExponentialSum, OrbitalSpectrum, PeriodicSpectrum, WindowedSpectrum};
