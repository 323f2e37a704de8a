//! Discrete weighted Laplacian, its spectrum and the heat semigroup.

mod heat;
mod operator;
mod smoothing;
pub mod tridiag;

pub use heat::{heat_apply, HeatOperator, MODE_CUTOFF};
pub use operator::{assemble_operator, count_below, solve_spectrum, DiscreteOperator, SpectralDecomposition};
pub use smoothing::{
    discrete_curvature, lipschitz_smoothing_constant, smoothing_report, trial_function, DISCRETIZATION_TOLERANCE,
    TV_TOLERANCE,
};
