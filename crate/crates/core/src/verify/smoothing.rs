use super::{SubCheck, VerificationReport};
use crate::error::Result;
use crate::mmspace::WeightedGrid;
use crate::spectral::{smoothing_report, HeatOperator};

/// Pointwise defect on the refined grid may be at most this fraction of
/// the defect on the original grid.
pub const HALVING_RATIO: f64 = 0.6;
const HALVING_TOL: f64 = 1e-12;

/// Heat-smoothing estimates at time `t` over `trials` test functions, plus
/// (for model grids) the same estimates on the grid with `2n − 1` nodes:
/// the pointwise Bakry–Émery defect must shrink by [`HALVING_RATIO`].
pub fn verify_smoothing(grid: &WeightedGrid, t: f64, trials: usize) -> Result<VerificationReport> {
    let heat = HeatOperator::new(grid, t)?;
    let mut report = smoothing_report(grid, &heat, t, trials)?;
    let Some(desc) = grid.model() else {
        report.note("no model descriptor: refinement check skipped");
        return Ok(report);
    };
    let fine = WeightedGrid::build(&desc.with_n(2 * desc.n() - 1))?;
    let fine_heat = HeatOperator::new(&fine, t)?;
    let refined = smoothing_report(&fine, &fine_heat, t, trials)?;
    let coarse_defect = report.value("pointwise_defect").unwrap_or(f64::NAN);
    let fine_defect = refined.value("pointwise_defect").unwrap_or(f64::NAN);
    report
        .record("refined_n", fine.len())
        .record("refined_pointwise_defect", fine_defect)
        .record("refined_gap", refined.gap)
        .sub_check(SubCheck::new(
            "defect_halving",
            HALVING_RATIO * coarse_defect - fine_defect,
            HALVING_TOL,
        ))
        .sub_check(SubCheck::new("refined_grid", refined.gap, refined.tolerance));
    report.conclude_normalized();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::SpaceDescriptor;
    use crate::report::Verdict;

    #[test]
    fn gaussian_defect_shrinks() {
        let grid = WeightedGrid::build(&SpaceDescriptor::Gaussian { k: 1.0, r: 8.0, n: 801 }).unwrap();
        let r = verify_smoothing(&grid, 1.0, 8).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_json_line());
        assert!(r.value("refined_pointwise_defect").unwrap() < r.value("pointwise_defect").unwrap());
    }
}
