use serde_json::json;

use super::{min_increment, spectral_gap, SubCheck, VerificationReport};
use crate::error::Result;
use crate::plaplacian::{monotonicity_sweep, SweepRow};

use crate::mmspace::WeightedGrid;

pub const MONOTONICITY_TOL: f64 = 1e-3;
/// Margin of the strict increase recorded for information.
const STRICT_MARGIN: f64 = 1e-3;

/// `p ↦ p λ_{1,p}^{1/p}` is nondecreasing along `ps`, with cross-checks
/// against the spectral gap at `p = 2` and the Cheeger pair at `p ∈ {1, 2}`.
pub fn verify_p_monotonicity(grid: &WeightedGrid, ps: &[f64], tol: f64) -> Result<(VerificationReport, Vec<SweepRow>)> {
    let rows = monotonicity_sweep(grid, ps)?;
    let scaled: Vec<f64> = rows.iter().map(|r| r.scaled).collect();
    let increment = min_increment(&scaled);

    let mut report = VerificationReport::for_grid("p_monotonicity", grid);
    report
        .input("n", grid.len())
        .input("ps", json!(ps))
        .record("lambda_1p", json!(rows.iter().map(|r| r.lambda_1p).collect::<Vec<_>>()))
        .record("scaled", json!(scaled))
        .record(
            "restarts_agreeing",
            json!(rows.iter().map(|r| r.restarts_agreeing).collect::<Vec<_>>()),
        )
        .record("min_increment", if increment.is_finite() { json!(increment) } else { json!(null) });
    if increment.is_finite() {
        report
            .sub_check(SubCheck::new("nondecreasing", increment, tol))
            .sub_check(SubCheck::info("strict_margin", increment - STRICT_MARGIN, 0.0));
    }

    let at = |p: f64| rows.iter().find(|r| r.p == p);
    if let Some(two) = at(2.0) {
        let lambda1 = spectral_gap(grid)?.value;
        report
            .record("spectral_lambda1", lambda1)
            .sub_check(SubCheck::new("p2_matches_spectrum", -(two.lambda_1p - lambda1).abs(), tol));
        if let Some(one) = at(1.0) {
            let spectral_pair = 2.0 * lambda1.sqrt();
            report
                .record("cheeger_pair", json!([one.scaled, spectral_pair]))
                .sub_check(SubCheck::new("cheeger_inequality", spectral_pair - one.scaled, tol))
                .sub_check(SubCheck::info(
                    "consistency_triangle",
                    -(two.scaled - spectral_pair).abs(),
                    1e-6,
                ));
        }
    }
    if report.sub_checks.is_empty() {
        report.note("single p: nothing to compare");
        report.conclude(0.0, tol);
    } else {
        report.conclude_all();
    }
    Ok((report, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::SpaceDescriptor;
    use crate::report::Verdict;
    use std::f64::consts::PI;

    #[test]
    fn interval_sweep_increases() {
        let grid = WeightedGrid::build(&SpaceDescriptor::Uniform { l: PI, n: 201 }).unwrap();
        let (report, rows) = verify_p_monotonicity(&grid, &[1.0, 2.0, 3.0], MONOTONICITY_TOL).unwrap();
        assert_eq!(report.verdict, Verdict::Pass, "{}", report.to_json_line());
        assert_eq!(rows.len(), 3);
        assert!((rows[0].scaled - 2.0 / PI).abs() < 1e-2);
        assert!(report.sub("cheeger_inequality").unwrap().gap > 1.0);
    }
}
