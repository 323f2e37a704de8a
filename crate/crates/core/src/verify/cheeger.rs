use super::{spectral_gap, SubCheck, VerificationReport};
use crate::error::Result;
use crate::mmspace::{cheeger_search, CheegerOptions, MeasureMode, SpaceDescriptor, WeightedGrid};

pub const CHEEGER_TOL: f64 = 1e-3;
/// Margin the gap must clear on grids whose model makes the inequality strict.
pub const STRICT_MARGIN: f64 = 1e-2;
/// Largest relative change of the gap between radius `R` and `2R` for a
/// truncated infinite-measure grid to count as converged.
pub const TRUNCATION_REL_TOL: f64 = 5e-3;

/// Why the model forces `λ > h²/4`, if it does.
fn strictness_reason(desc: &SpaceDescriptor) -> Option<&'static str> {
    match desc {
        SpaceDescriptor::Uniform { .. } => Some("finite diameter"),
        SpaceDescriptor::Gaussian { .. } | SpaceDescriptor::PerturbedGaussian { .. } => Some("K > 0"),
        SpaceDescriptor::Expx2 { .. } => Some("discrete spectrum"),
        SpaceDescriptor::Revolution { .. } | SpaceDescriptor::HyperbolicRadial { .. } => None,
    }
}

fn cheeger_gap(grid: &WeightedGrid) -> Result<(f64, f64, f64)> {
    let lambda = spectral_gap(grid)?.value;
    let h = cheeger_search(grid, &CheegerOptions::default())?.h;
    Ok((lambda, h, lambda - 0.25 * h * h))
}

/// `λ − h²/4 ≥ −tol`, with `λ = λ₁` on Neumann grids and `λ₀` otherwise.
///
/// Truncated infinite-measure model grids are re-solved at twice the radius
/// (and twice the node count); a relative gap change above
/// [`TRUNCATION_REL_TOL`] downgrades a PASS to INCONCLUSIVE.
pub fn verify_cheeger(grid: &WeightedGrid, tol: f64) -> Result<VerificationReport> {
    let gap_info = spectral_gap(grid)?;
    let result = cheeger_search(grid, &CheegerOptions::default())?;
    let (lambda, h) = (gap_info.value, result.h);
    let gap = lambda - 0.25 * h * h;

    let mut report = VerificationReport::for_grid("cheeger", grid);
    report
        .input("n", grid.len())
        .record(gap_info.label(), lambda)
        .record("eigen_residual", gap_info.residual)
        .record("h", h)
        .record("h_sq_over_4", 0.25 * h * h)
        .record("gap", gap)
        .record("optimizer_measure", result.optimizer.measure())
        .record("candidates_examined", result.candidates_examined);
    report.conclude(gap, tol);

    if let Some(reason) = grid.model().and_then(strictness_reason) {
        report.sub_check(SubCheck::info("strict", gap - STRICT_MARGIN, 0.0));
        report.note(format!("strictness expected: {reason}"));
    }

    if grid.measure_mode() == MeasureMode::InfiniteTruncated {
        if let Some(desc) = grid.model() {
            let wide = desc.with_extent(2.0 * desc.extent()).with_n(2 * desc.n() - 1);
            let (lambda_wide, h_wide, gap_wide) = cheeger_gap(&WeightedGrid::build(&wide)?)?;
            let rel = (gap_wide - gap).abs() / gap_wide.abs().max(f64::MIN_POSITIVE);
            report
                .record("lambda_2R", lambda_wide)
                .record("h_2R", h_wide)
                .record("gap_2R", gap_wide)
                .record("truncation_rel_change", rel)
                .sub_check(SubCheck::info("truncation_converged", TRUNCATION_REL_TOL - rel, 0.0));
            if rel > TRUNCATION_REL_TOL {
                report.mark_inconclusive(format!(
                    "truncated spectrum not converged: gap moves by {rel:.3e} relative from R to 2R"
                ));
            }
        } else {
            report.mark_inconclusive("truncated infinite-measure grid without a model; convergence unknown");
        }
    }
    Ok(report)
}
