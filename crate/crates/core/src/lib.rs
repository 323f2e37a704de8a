//! Discretized one-dimensional weighted spaces, their spectra, Cheeger
//! constants and heat flows, with numerical checks of the sharp Buser,
//! Cheeger and isoperimetric inequalities.

pub mod cli;
pub mod error;
pub mod kernels;
pub mod mmspace;
pub mod spectral;
pub mod plaplacian;
pub mod quadrature;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
