use super::{spectral_gap, SubCheck, VerificationReport};
use crate::error::{Error, Result};
use crate::kernels::buser_sharp_bound;
use crate::mmspace::{cheeger_search, CheegerOptions, SpaceDescriptor, WeightedGrid};

pub const BUSER_TOL: f64 = 1e-3;

/// Width within which `h = B(λ₁, K)` counts as equality: `4e−3` at 4001
/// nodes, proportional to the spacing.
pub fn equality_tolerance(n: usize) -> f64 {
    4e-3 * 4000.0 / (n.max(2) - 1) as f64
}

/// `h − sup_t (1 − e^{−λ t})/J_K(t) ≥ −tol` with `K` from the grid tag.
pub fn verify_buser(grid: &WeightedGrid, tol: f64) -> Result<VerificationReport> {
    let k = grid.k_tag().ok_or(Error::MissingCurvature("Buser check"))?;
    let gap_info = spectral_gap(grid)?;
    let h = cheeger_search(grid, &CheegerOptions::default())?.h;
    let bound = buser_sharp_bound(gap_info.value, k)?;
    let gap = h - bound.sup_value;

    let mut report = VerificationReport::for_grid("buser", grid);
    report
        .input("n", grid.len())
        .input("K", k)
        .record(gap_info.label(), gap_info.value)
        .record("h", h)
        .record("B", bound.sup_value)
        .record("gap", gap)
        .record("argmax_t", if bound.at_infinity { f64::INFINITY } else { bound.argmax_t })
        .record("at_infinity", bound.at_infinity);
    if let Some(SpaceDescriptor::Gaussian { .. }) = grid.model() {
        let eq_tol = equality_tolerance(grid.len());
        report
            .record("equality_tolerance", eq_tol)
            .sub_check(SubCheck::info("gaussian_equality", eq_tol - gap.abs(), 0.0));
    }
    if bound.at_infinity {
        report.note("supremum approached as t → ∞");
    }
    report.conclude(gap, tol);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Verdict;
    use std::f64::consts::PI;

    #[test]
    fn uniform_interval_has_room() {
        let grid = WeightedGrid::build(&SpaceDescriptor::Uniform { l: PI, n: 801 }).unwrap();
        let r = verify_buser(&grid, BUSER_TOL).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.gap > 0.05, "gap {}", r.gap);
    }

    #[test]
    fn untagged_grid_is_rejected() {
        let grid = WeightedGrid::build(&SpaceDescriptor::Uniform { l: PI, n: 51 })
            .unwrap()
            .with_k_tag(None);
        assert!(matches!(verify_buser(&grid, BUSER_TOL), Err(Error::MissingCurvature(_))));
    }

    #[test]
    fn equality_tolerance_scales_with_spacing() {
        assert!((equality_tolerance(4001) - 4e-3).abs() < 1e-15);
        assert!((equality_tolerance(8001) - 2e-3).abs() < 1e-15);
    }
}
