//! Verification reports for the functional inequalities on catalog grids.
//!
//! Every check returns a [`VerificationReport`] whose verdict follows its
//! main gap: PASS iff `gap ≥ −tolerance`. Composite checks fold their
//! sub-checks into that gap; informative sub-checks are reported only.

mod buser;
mod cheeger;
mod heat_chain;
mod isoperimetry;
mod monotonicity;
mod revolution;
mod rigidity;
mod smoothing;

pub use buser::{equality_tolerance, verify_buser, BUSER_TOL};
pub use cheeger::{verify_cheeger, CHEEGER_TOL, STRICT_MARGIN, TRUNCATION_REL_TOL};
pub use heat_chain::{verify_heat_chain, HEAT_CHAIN_TOL};
pub use isoperimetry::{verify_isoperimetry, BALL_RADII, ISOPERIMETRY_TOL};
pub use monotonicity::{verify_p_monotonicity, MONOTONICITY_TOL};
pub use revolution::{revolution_diagnostics, tail_volume, MU_RADII};
pub use rigidity::{rigidity_scan, rigidity_summary};
pub use smoothing::{verify_smoothing, HALVING_RATIO};

pub use crate::report::{overall_verdict, SubCheck, Verdict, VerificationReport};

use crate::error::Result;
use crate::mmspace::{BoundaryCondition, WeightedGrid};
use crate::spectral::{assemble_operator, solve_spectrum};

/// The eigenvalue a grid's inequalities are stated for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGap {
    pub value: f64,
    pub residual: f64,
    /// `λ₀` (bottom of a Dirichlet spectrum) rather than `λ₁`.
    pub bottom: bool,
}

impl SpectralGap {
    pub fn label(&self) -> &'static str {
        if self.bottom {
            "lambda0"
        } else {
            "lambda1"
        }
    }
}

/// `λ₁` on pure Neumann grids, `λ₀` when a Dirichlet end is present.
pub fn spectral_gap(grid: &WeightedGrid) -> Result<SpectralGap> {
    let op = assemble_operator(grid)?;
    let bottom = grid.bc() != BoundaryCondition::Neumann;
    let index = if bottom { 0 } else { 1 };
    let dec = solve_spectrum(&op, (index + 1).min(op.dim()))?;
    Ok(SpectralGap {
        value: dec.eigenvalues[index],
        residual: dec.residuals[index],
        bottom,
    })
}

/// Smallest value of a slice, `+∞` when empty.
pub(crate) fn min_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::INFINITY, f64::min)
}

/// Smallest step `v[i+1] − v[i]`, `+∞` for fewer than two values.
pub(crate) fn min_increment(values: &[f64]) -> f64 {
    min_of(values.windows(2).map(|w| w[1] - w[0]))
}
