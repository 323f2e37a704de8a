use rayon::prelude::*;
use serde_json::json;

use super::{equality_tolerance, min_increment, verify_buser, SubCheck, VerificationReport};
use crate::error::{ensure_finite, Error, Result};
use crate::mmspace::{SpaceDescriptor, WeightedGrid};

/// Buser check on the perturbed Gaussians `e^{−(x²/2 + εx⁴)}` for each `ε`,
/// in input order.
pub fn rigidity_scan(epsilons: &[f64], r: f64, n: usize, tol: f64) -> Result<Vec<VerificationReport>> {
    if epsilons.is_empty() {
        return Err(Error::InvalidArgument("rigidity scan needs at least one ε".into()));
    }
    for &eps in epsilons {
        ensure_finite(eps, "ε")?;
        if eps < 0.0 {
            return Err(Error::InvalidArgument(format!("ε must be nonnegative, got {eps}")));
        }
    }
    if epsilons[0] != 0.0 {
        return Err(Error::InvalidArgument("rigidity scan must start at ε = 0".into()));
    }
    if epsilons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("ε values must be strictly ascending".into()));
    }
    epsilons
        .par_iter()
        .map(|&eps| {
            let desc = SpaceDescriptor::PerturbedGaussian { eps, r, n };
            desc.validate()?;
            let mut report = verify_buser(&WeightedGrid::build(&desc)?, tol)?;
            report.input("eps", eps);
            Ok(report)
        })
        .collect()
}

/// Folds a scan into one report: the `ε = 0` gap must sit within the
/// equality width and the gaps must increase strictly with `ε`.
pub fn rigidity_summary(scan: &[VerificationReport], n: usize) -> Result<VerificationReport> {
    let first = scan
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty rigidity scan".into()))?;
    let eps: Vec<f64> = scan
        .iter()
        .map(|r| r.inputs.get("eps").and_then(|v| v.as_f64()).unwrap_or(f64::NAN))
        .collect();
    let gaps: Vec<f64> = scan.iter().map(|r| r.gap).collect();
    let eq_tol = equality_tolerance(n);
    let mut report = VerificationReport::new("rigidity", first.space.clone());
    report
        .input("n", n)
        .input("eps", json!(eps))
        .record("gaps", json!(gaps))
        .record("equality_tolerance", eq_tol)
        .sub_check(SubCheck::new("gaussian_equality", eq_tol - gaps[0].abs(), 0.0))
        .sub_check(SubCheck::new("strictly_increasing", min_increment(&gaps), 0.0));
    report.sub_check(SubCheck::new(
        "buser_bound",
        scan.iter().map(|r| r.gap + r.tolerance).fold(f64::INFINITY, f64::min),
        0.0,
    ));
    report.conclude_all();
    Ok(report)
}
