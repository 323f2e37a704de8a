use rayon::prelude::*;
use serde_json::json;

use super::{min_of, spectral_gap, SubCheck, VerificationReport};
use crate::error::{ensure_finite, Error, Result};
use crate::mmspace::models::{revolution_area_density, revolution_curvature_fd, revolution_profile};
use crate::mmspace::{SpaceDescriptor, WeightedGrid};
use crate::quadrature::integrate;

/// Radii at which the volume-growth exponent is estimated.
pub const MU_RADII: [f64; 3] = [1e2, 1e3, 1e4];
const CURVATURE_FLOOR: f64 = -0.5;
const VOLUME_DIGITS_TOL: f64 = 1e-6;
const MU_CEILING: f64 = 0.05;
const LAMBDA_CEILING: f64 = 0.05;
/// Past `√t = √t₀ + TAIL_SQRT_SPAN` the remaining area is below `e^{−60}` of the tail.
const TAIL_SQRT_SPAN: f64 = 60.0;

/// Curvature formula `−F''/(F√(1+F'²))` from the analytic profile derivatives.
fn curvature(t: f64) -> f64 {
    let (f, d1, d2) = revolution_profile(t);
    -d2 / (f * (1.0 + d1 * d1).sqrt())
}

/// Intrinsic Gaussian curvature `−F''/(F(1+F'²)²)` of the same surface.
fn gauss_curvature(t: f64) -> f64 {
    let (f, d1, d2) = revolution_profile(t);
    let g = 1.0 + d1 * d1;
    -d2 / (f * g * g)
}

/// `∫_{a}^{∞}` of the area density in the variable `v = √t`, one unit of
/// `v` per quadrature call.
fn area_beyond(a: f64, rel_tol: f64) -> Result<f64> {
    let v0 = a.sqrt();
    let mut total = 0.0;
    for k in 0..TAIL_SQRT_SPAN as usize {
        let lo = v0 + k as f64;
        total += integrate(|v| 2.0 * v * revolution_area_density(v * v), lo, lo + 1.0, 0.0, rel_tol)?.value;
    }
    Ok(total)
}

/// Total area of the surface: both halves, the cap `|t| ≤ 1` plus the tail.
fn total_volume(rel_tol: f64) -> Result<f64> {
    let cap = integrate(revolution_area_density, 0.0, 1.0, 0.0, rel_tol)?.value;
    Ok(2.0 * (cap + area_beyond(1.0, rel_tol)?))
}

/// Meridian arclength from `t = 0`.
fn arclength(t: f64) -> Result<f64> {
    let speed = |s: f64| {
        let d1 = revolution_profile(s).1;
        (1.0 + d1 * d1).sqrt()
    };
    Ok(integrate(speed, 0.0, t, 0.0, 1e-14)?.value)
}

/// Parameter `t` at arclength `r` from the waist, by Newton steps.
fn parameter_at_arclength(r: f64) -> Result<f64> {
    let mut t = r;
    for _ in 0..20 {
        let d1 = revolution_profile(t).1;
        let step = (arclength(t)? - r) / (1.0 + d1 * d1).sqrt();
        t -= step;
        if step.abs() <= 1e-13 * r.max(1.0) {
            return Ok(t);
        }
    }
    Err(Error::NoConvergence {
        iterations: 20,
        residual: (arclength(t)? - r).abs(),
    })
}

/// `vol(S) − vol(B_r)` for the geodesic ball of radius `r` centred on the waist circle.
pub fn tail_volume(r: f64) -> Result<f64> {
    ensure_finite(r, "radius")?;
    if r <= 0.0 {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    Ok(2.0 * area_beyond(parameter_at_arclength(r)?, 1e-12)?)
}

/// Geometry and spectrum of the surface of revolution with profile
/// `F(t) = e^{−√|t|}`: finite area, curvature above `−1/2` off the waist,
/// vanishing volume-growth exponent and `λ₁` of the truncated meridian
/// decreasing in `T`.
pub fn revolution_diagnostics(t_list: &[f64], n: usize) -> Result<VerificationReport> {
    if t_list.is_empty() {
        return Err(Error::InvalidArgument("revolution diagnostics need at least one T".into()));
    }
    for &t in t_list {
        ensure_finite(t, "T")?;
        if t <= 1.0 {
            return Err(Error::InvalidArgument(format!("T must exceed 1, got {t}")));
        }
    }
    if t_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("T values must be strictly ascending".into()));
    }

    let coarse = total_volume(1e-8)?;
    let fine = total_volume(1e-12)?;
    let volume_change = (coarse - fine).abs() / fine;
    if volume_change > VOLUME_DIGITS_TOL {
        return Err(Error::NoConvergence {
            iterations: 2,
            residual: volume_change,
        });
    }

    // |t| > 1: geometric offsets from the waist edge; the formula is even in t.
    let t_max = t_list[t_list.len() - 1].max(1e4);
    let outer: Vec<f64> = (0..=4000)
        .map(|i| 1.0 + 10f64.powf(-12.0 + i as f64 / 4000.0 * (12.0 + (t_max - 1.0).log10())))
        .collect();
    let inner: Vec<f64> = (0..=2000).map(|i| i as f64 / 2000.0).collect();
    let inf_outer = min_of(outer.iter().map(|&t| curvature(t)));
    let inf_inner = min_of(inner.iter().map(|&t| curvature(t)));
    let gauss_inf_outer = min_of(outer.iter().map(|&t| gauss_curvature(t)));
    let fd_deviation = outer
        .iter()
        .filter(|&&t| t > 1.001)
        .map(|&t| (revolution_curvature_fd(t, 1e-4 * t) - curvature(t)).abs())
        .fold(0.0, f64::max);

    let mu: Vec<f64> = MU_RADII
        .iter()
        .map(|&r| Ok(tail_volume(r)?.ln() / r))
        .collect::<Result<_>>()?;
    let mu_drop = min_of(mu.windows(2).map(|w| w[0].abs() - w[1].abs()));
    let mu_at_1e3 = mu[1];

    let lambdas: Vec<f64> = t_list
        .par_iter()
        .map(|&t| {
            let desc = SpaceDescriptor::Revolution { t, n };
            desc.validate()?;
            Ok(spectral_gap(&WeightedGrid::build(&desc)?)?.value)
        })
        .collect::<Result<_>>()?;
    let lambda_drop = min_of(lambdas.windows(2).map(|w| w[0] - w[1]));
    let lambda_last = lambdas[lambdas.len() - 1];

    let t_last = t_list[t_list.len() - 1];
    let window = 2.0 * integrate(revolution_area_density, 0.0, t_last, 0.0, 1e-12)?.value;
    let grid_mass = WeightedGrid::build(&SpaceDescriptor::Revolution { t: t_last, n })?.total_mass();

    let mut report = VerificationReport::new("revolution", format!("revolution:T={t_last},n={n}"));
    report
        .input("T", json!(t_list))
        .input("n", n)
        .input("mu_radii", json!(MU_RADII))
        .record("volume", fine)
        .record("volume_coarse", coarse)
        .record("volume_rel_change", volume_change)
        .record("volume_window", window)
        .record("grid_mass_window", grid_mass)
        .record("inf_curvature_outer", inf_outer)
        .record("inf_curvature_inner", inf_inner)
        .record("inf_gauss_curvature_outer", gauss_inf_outer)
        .record("curvature_fd_deviation", fd_deviation)
        .record("mu", json!(mu))
        .record("lambda1", json!(lambdas))
        .sub_check(SubCheck::new("volume_converged", VOLUME_DIGITS_TOL - volume_change, 0.0))
        .sub_check(SubCheck::new("curvature_above_floor", inf_outer - CURVATURE_FLOOR, 0.0))
        .sub_check(SubCheck::new("mu_shrinking", mu_drop, 0.0))
        .sub_check(SubCheck::new("mu_small", MU_CEILING - mu_at_1e3.abs(), 0.0))
        .sub_check(SubCheck::new("lambda_decreasing", lambda_drop, 0.0))
        .sub_check(SubCheck::new("lambda_small", LAMBDA_CEILING - lambda_last, 0.0))
        .note("curvature floor is checked on |t| > 1 only; the waist |t| ≤ 1 is a quartic extension")
        .note("mu estimates are (1/r) log of the tail area, judged by magnitude");
    report.conclude_all();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn tail_matches_closed_form_far_out() {
        // F' is negligible at r = 400, so the tail is 4π ∫ e^{−√t} = 8π(√t + 1)e^{−√t}.
        let r = 400.0;
        let t = parameter_at_arclength(r).unwrap();
        let exact = 8.0 * PI * (t.sqrt() + 1.0) * (-t.sqrt()).exp();
        assert!((tail_volume(r).unwrap() / exact - 1.0).abs() < 1e-6);
        assert!(t < r && t > r - 0.1);
    }

    #[test]
    fn curvature_close_to_floor_at_waist_edge() {
        let k = curvature(1.0 + 1e-12);
        assert!(k > CURVATURE_FLOOR && k < -0.49);
        assert!(curvature(100.0) > k);
    }

    #[test]
    fn rejects_unsorted_lengths() {
        assert!(revolution_diagnostics(&[20.0, 10.0], 201).is_err());
        assert!(revolution_diagnostics(&[0.5], 201).is_err());
    }
}
