use std::f64::consts::PI;

use serde_json::json;

use super::{min_of, SubCheck, VerificationReport};
use crate::error::{Error, Result};
use crate::kernels::isoperimetric_profile;
use crate::mmspace::models::hyperbolic_density;
use crate::mmspace::{
    cheeger_search, fold_candidates, measure_and_perimeter, Candidate, CheegerOptions, SpaceDescriptor, WeightedGrid,
};
use crate::quadrature::integrate;

pub const ISOPERIMETRY_TOL: f64 = 1e-3;
/// Geodesic ball radii probed on the hyperbolic plane.
pub const BALL_RADII: [f64; 4] = [1.0, 2.0, 5.0, 10.0];
/// Relative width of the ball equality check.
const BALL_EQUALITY_TOL: f64 = 1e-6;

/// Perimeter lower bound `Per(A) ≥ I_K(m(A))` on Gaussian-type grids, or the
/// geodesic-ball equality `Per² = 4π vol + vol²` on the hyperbolic plane.
pub fn verify_isoperimetry(grid: &WeightedGrid, tol: f64) -> Result<VerificationReport> {
    match grid.model() {
        Some(SpaceDescriptor::Gaussian { .. }) | Some(SpaceDescriptor::PerturbedGaussian { .. }) => {
            gaussian_profile(grid, tol)
        }
        Some(SpaceDescriptor::HyperbolicRadial { .. }) => hyperbolic_balls(grid),
        _ => Err(Error::UnsupportedModel {
            check: "isoperimetry",
            model: grid.label(),
        }),
    }
}

/// Monotone upper bound for `I_K` on `(0, 1/2]`, tabulated on a geometric
/// measure grid: `I_K(m) ≤ I_K(m_k)` for the first table point `m_k ≥ m`.
struct ProfileTable {
    measures: Vec<f64>,
    values: Vec<f64>,
}

impl ProfileTable {
    const SMALLEST: f64 = 1e-30;
    const POINTS: usize = 2048;

    fn new(k: f64) -> Result<Self> {
        let ratio = (0.5 / Self::SMALLEST).ln() / (Self::POINTS - 1) as f64;
        let mut measures: Vec<f64> = (0..Self::POINTS)
            .map(|i| Self::SMALLEST * (ratio * i as f64).exp())
            .collect();
        *measures.last_mut().expect("table is non-empty") = 0.5;
        let values = measures
            .iter()
            .map(|&m| isoperimetric_profile(k, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { measures, values })
    }

    fn upper(&self, m: f64) -> f64 {
        let i = self.measures.partition_point(|&x| x < m);
        self.values[i.min(self.values.len() - 1)]
    }
}

fn profile_at(k: f64, m: f64) -> f64 {
    isoperimetric_profile(k, m.clamp(0.0, 1.0)).expect("measure lies in [0, 1]")
}

fn gaussian_profile(grid: &WeightedGrid, tol: f64) -> Result<VerificationReport> {
    let k = grid.k_tag().ok_or(Error::MissingCurvature("isoperimetry"))?;
    let table = ProfileTable::new(k)?;
    let total = grid.total_mass();

    struct Acc {
        slack: f64,
        best: Option<Candidate>,
        exact: u64,
    }
    let best = fold_candidates(
        grid,
        || Acc { slack: f64::INFINITY, best: None, exact: 0 },
        |acc, c| {
            let m = c.measure / total;
            let per = c.perimeter / total;
            if per - table.upper(m.min(1.0 - m)) >= acc.slack {
                return;
            }
            acc.exact += 1;
            let slack = per - profile_at(k, m);
            if slack < acc.slack {
                acc.slack = slack;
                acc.best = Some(*c);
            }
        },
        |a, b| {
            let exact = a.exact + b.exact;
            let (slack, best) = if b.slack < a.slack || (b.slack == a.slack && tie_first(&b.best, &a.best)) {
                (b.slack, b.best)
            } else {
                (a.slack, a.best)
            };
            Acc { slack, best, exact }
        },
    );

    // Half-line ending nearest the median.
    let mut acc = 0.0;
    let mut split = 0;
    for (i, m) in grid.masses().iter().enumerate() {
        if (acc + m - 0.5 * total).abs() < (acc - 0.5 * total).abs() || i == 0 {
            split = i;
        }
        acc += m;
    }
    let split = split.min(grid.len() - 2);
    let (hm, hp) = measure_and_perimeter(grid, &[(0, split)])?;
    let half_slack = hp / total - profile_at(k, hm / total);

    let mut report = VerificationReport::for_grid("isoperimetry", grid);
    report.input("n", grid.len()).input("K", k).record("min_slack", best.slack);
    if let Some(c) = best.best {
        report.record(
            "argmin_set",
            json!({"start": c.start, "end": c.end, "complement": c.complement, "measure": c.measure / total}),
        );
    }
    report
        .record("exact_profile_evaluations", best.exact)
        .record("half_line_end", split)
        .record("half_line_measure", hm / total)
        .record("half_line_slack", half_slack)
        .sub_check(SubCheck::new("profile_lower_bound", best.slack, tol))
        .sub_check(SubCheck::new("half_line_equality", -half_slack.abs(), tol))
        .note("perimeter and measure normalized by the grid mass");
    report.conclude_all();
    Ok(report)
}

fn tie_first(a: &Option<Candidate>, b: &Option<Candidate>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => (a.start, a.end, a.complement) < (b.start, b.end, b.complement),
        (Some(_), None) => true,
        _ => false,
    }
}

/// `vol(B_r) = ∫₀^r 2π sinh s ds` by quadrature.
fn ball_volume(r: f64) -> Result<f64> {
    Ok(integrate(hyperbolic_density, 0.0, r, 0.0, 1e-14)?.value)
}

fn hyperbolic_balls(grid: &WeightedGrid) -> Result<VerificationReport> {
    let extent = grid.nodes()[grid.len() - 1];
    let mut ratios = Vec::new();
    let mut defects = Vec::new();
    let mut slacks = Vec::new();
    let mut grid_ratios = Vec::new();
    for &r in &BALL_RADII {
        let vol = ball_volume(r)?;
        let per = hyperbolic_density(r);
        let rel = (per * per - 4.0 * PI * vol - vol * vol) / (per * per);
        slacks.push(rel);
        defects.push(rel.abs());
        ratios.push(per / vol);
        if r <= extent {
            let j = grid.nodes().partition_point(|&x| x <= r).saturating_sub(1);
            let (gm, gp) = measure_and_perimeter(grid, &[(0, j)])?;
            grid_ratios.push(gp / gm);
        } else {
            grid_ratios.push(f64::NAN);
        }
    }
    let ratio_drop = min_of(ratios.windows(2).map(|w| w[0] - w[1]));
    let last = BALL_RADII.len() - 1;
    let h = cheeger_search(grid, &CheegerOptions::default())?.h;

    let mut report = VerificationReport::for_grid("isoperimetry", grid);
    report
        .input("n", grid.len())
        .input("radii", json!(BALL_RADII))
        .record("relative_slack", json!(slacks))
        .record("ratio", json!(ratios))
        .record("grid_ratio", json!(grid_ratios.iter().map(|v| v.is_finite().then_some(*v)).collect::<Vec<_>>()))
        .record("h_truncated", h)
        .sub_check(SubCheck::new("ball_inequality", min_of(slacks.iter().copied()), BALL_EQUALITY_TOL))
        .sub_check(SubCheck::new(
            "ball_equality",
            -defects.iter().copied().fold(0.0, f64::max),
            BALL_EQUALITY_TOL,
        ))
        .sub_check(SubCheck::new(
            format!("ratio_near_one@r={}", BALL_RADII[last]),
            -(ratios[last] - 1.0).abs(),
            ISOPERIMETRY_TOL,
        ))
        .sub_check(SubCheck::new("ratio_decreasing", ratio_drop, 0.0))
        .note("balls use the closed-form circumference and a quadrature volume");
    report.conclude_all();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Verdict;

    #[test]
    fn table_bounds_profile_from_above() {
        let table = ProfileTable::new(1.0).unwrap();
        for &m in &[1e-40, 1e-20, 1e-9, 0.01, 0.2, 0.4999, 0.5] {
            assert!(table.upper(m) >= profile_at(1.0, m), "m = {m}");
        }
    }

    #[test]
    fn gaussian_half_line_is_extremal() {
        let grid = WeightedGrid::build(&SpaceDescriptor::Gaussian { k: 1.0, r: 8.0, n: 801 }).unwrap();
        let r = verify_isoperimetry(&grid, ISOPERIMETRY_TOL).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_json_line());
        assert!(r.value("half_line_slack").unwrap().abs() < 1e-3);
    }

    #[test]
    fn hyperbolic_balls_attain_equality() {
        let grid = WeightedGrid::build(&SpaceDescriptor::HyperbolicRadial { r: 12.0, n: 601 }).unwrap();
        let r = verify_isoperimetry(&grid, ISOPERIMETRY_TOL).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_json_line());
        assert!(r.sub("ball_equality").unwrap().gap > -1e-9);
    }

    #[test]
    fn other_models_are_rejected() {
        let grid = WeightedGrid::build(&SpaceDescriptor::Uniform { l: 1.0, n: 11 }).unwrap();
        assert!(matches!(
            verify_isoperimetry(&grid, ISOPERIMETRY_TOL),
            Err(Error::UnsupportedModel { .. })
        ));
    }
}
