//! Heat-flow smoothing estimates: TV contraction, pointwise Bakry–Émery,
//! Lipschitz regularization and ultracontractivity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use super::heat::HeatOperator;
use crate::error::{ensure_finite, Error, Result};
use crate::mmspace::{total_variation, BoundaryCondition, DiscreteFunction, WeightedGrid};
use crate::report::{SubCheck, VerificationReport};

/// Tolerance of the integrated contraction, which holds exactly on the grid.
pub const TV_TOLERANCE: f64 = 1e-10;
/// Tolerance of the estimates that only hold in the continuum limit.
pub const DISCRETIZATION_TOLERANCE: f64 = 1e-3;

/// Pointwise quantities are read only where the interface weight is at
/// least this fraction of its peak. Farther out, mass-normalized eigenvector
/// entries carry rounding noise of order `ε/√m_i`, amplified by `1/Δx` in
/// slopes.
pub const RESOLVED_WEIGHT_RATIO: f64 = 1e-8;

const TRIAL_SEED: u64 = 0x5eed_cafe;

/// Exact curvature of the discrete chain in the L¹-gradient sense.
///
/// The weighted differences `u_j = w_j (f_{j+1} − f_j)` of a heat solution
/// solve `u' = B u` with `B` off-diagonally nonnegative; minus its column
/// sums are `κ_j = ((w_j − w_{j−1})/m_j + (w_j − w_{j+1})/m_{j+1}) / Δx_j`,
/// so `TV(H_t f) ≤ e^{−κ t} TV(f)` with `κ = min_j κ_j`.
pub fn discrete_curvature(grid: &WeightedGrid) -> f64 {
    let w = grid.iface_weights();
    let m = grid.masses();
    let last = w.len().saturating_sub(1);
    (0..w.len())
        .map(|j| {
            let left = if j > 0 { w[j - 1] } else { 0.0 };
            let right = if j < last { w[j + 1] } else { 0.0 };
            ((w[j] - left) / m[j] + (w[j] - right) / m[j + 1]) / grid.spacing(j)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `√(2K / (π(e^{2Kt} − 1)))`, and `1/√(πt)` at `K = 0`.
pub fn lipschitz_smoothing_constant(k: f64, t: f64) -> f64 {
    let kt = k * t;
    if kt.abs() < 1e-8 {
        // (e^{2x} − 1)/(2x) = 1 + x + O(x²)
        (1.0 / (PI * t * (1.0 + kt))).sqrt()
    } else {
        (2.0 * k / (PI * (2.0 * kt).exp_m1())).sqrt()
    }
}

/// Deterministic bounded test function number `index` on `grid`.
///
/// Index 0 is the coordinate itself, index 1 the odd sign function about the
/// midpoint; further indices alternate random step functions and random
/// trigonometric polynomials. Functions are defined on the coordinate, so
/// refined grids see the same trials.
pub fn trial_function(grid: &WeightedGrid, index: usize) -> DiscreteFunction {
    let nodes = grid.nodes();
    let lo = nodes[0];
    let hi = nodes[nodes.len() - 1];
    let mid = 0.5 * (lo + hi);
    let span = hi - lo;
    let mut rng = ChaCha8Rng::seed_from_u64(TRIAL_SEED ^ index as u64);
    let f: Box<dyn Fn(f64) -> f64> = match index {
        0 => Box::new(|x| x),
        1 => Box::new(move |x: f64| {
            if x == mid {
                0.0
            } else {
                (x - mid).signum()
            }
        }),
        i if i % 2 == 0 => {
            let jumps = rng.gen_range(1..=6);
            let mut cuts: Vec<f64> = (0..jumps)
                .map(|_| mid + span * rng.gen_range(-0.125..0.125))
                .collect();
            cuts.sort_by(f64::total_cmp);
            let levels: Vec<f64> = (0..=jumps).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Box::new(move |x| levels[cuts.partition_point(|&c| c <= x)])
        }
        _ => {
            let coeffs: Vec<(f64, f64)> = (1..=6)
                .map(|j| {
                    let j = j as f64;
                    (rng.gen_range(-1.0..1.0) / j, rng.gen_range(-1.0..1.0) / j)
                })
                .collect();
            Box::new(move |x| {
                let s = 2.0 * PI * (x - lo) / span;
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, (a, b))| {
                        let arg = (j + 1) as f64 * s;
                        a * arg.cos() + b * arg.sin()
                    })
                    .sum()
            })
        }
    };
    DiscreteFunction::sample(grid, f).expect("trial functions are finite")
}

/// Interfaces `lo..hi` whose weight is at least [`RESOLVED_WEIGHT_RATIO`]
/// of the peak; nodes `lo..=hi` are the ones they touch.
pub fn resolved_interfaces(grid: &WeightedGrid) -> std::ops::Range<usize> {
    let w = grid.iface_weights();
    let floor = RESOLVED_WEIGHT_RATIO * w.iter().fold(0.0, |a: f64, v| a.max(*v));
    let lo = w.iter().position(|&v| v >= floor).unwrap_or(0);
    let hi = w.iter().rposition(|&v| v >= floor).map_or(0, |i| i + 1);
    lo..hi
}

fn max_slope(grid: &WeightedGrid, f: &DiscreteFunction, ifaces: std::ops::Range<usize>) -> f64 {
    f.interface_gradient(grid)[ifaces].iter().fold(0.0, |a, s| a.max(s.abs()))
}

fn sup_on(values: &[f64], ifaces: &std::ops::Range<usize>) -> f64 {
    values[ifaces.start..=ifaces.end].iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Runs the four smoothing estimates at time `t` over `trials` test functions.
///
/// The TV contraction is asserted at rate `min(K, κ)` with `κ` from
/// [`discrete_curvature`]; the slack at the nominal rate `K` is reported as
/// a separate discretization sub-check.
pub fn smoothing_report(
    grid: &WeightedGrid,
    heat: &HeatOperator,
    t: f64,
    trials: usize,
) -> Result<VerificationReport> {
    ensure_finite(t, "time t")?;
    if t <= 0.0 {
        return Err(Error::InvalidArgument(format!("smoothing time must be positive, got {t}")));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial function is required".into()));
    }
    if grid.bc() != BoundaryCondition::Neumann || heat.bc() != BoundaryCondition::Neumann {
        return Err(Error::UnsupportedModel {
            check: "smoothing",
            model: grid.label(),
        });
    }
    let k = grid.k_tag().ok_or(Error::MissingCurvature("smoothing report"))?;
    if heat.decomposition().eigenvectors.first().map(Vec::len) != Some(grid.len()) {
        return Err(Error::InvalidArgument("heat operator was built for another grid".into()));
    }

    let kappa = discrete_curvature(grid);
    let k_eff = k.min(kappa);
    let decay = (-k * t).exp();
    let decay_eff = (-k_eff * t).exp();
    let lip_constant = lipschitz_smoothing_constant(k, t);
    let ifaces = resolved_interfaces(grid);
    let theta = heat.kernel_diagonal(2.0 * t)?[ifaces.start..=ifaces.end]
        .iter()
        .fold(0.0, |a: f64, v| a.max(*v))
        .sqrt();

    let mut tv_slack = f64::INFINITY;
    let mut tv_nominal_slack = f64::INFINITY;
    let mut pointwise_defect: f64 = 0.0;
    let mut lip_slack = f64::INFINITY;
    let mut lip_ratio = f64::INFINITY;
    let mut ultra_slack = f64::INFINITY;

    for index in 0..trials {
        let f = trial_function(grid, index);
        let hf = heat.apply(&f, t)?;

        let tv0 = total_variation(grid, &f)?;
        let tv1 = total_variation(grid, &hf)?;
        // relative to TV(f), absolute below 1
        let scale = tv0.max(1.0);
        tv_slack = tv_slack.min((decay_eff * tv0 - tv1) / scale);
        tv_nominal_slack = tv_nominal_slack.min((decay * tv0 - tv1) / scale);

        let lip = DiscreteFunction::new(f.node_gradient(grid))?;
        let hlip = heat.apply(&lip, t)?;
        let hv = hlip.values();
        let rhs: Vec<f64> = hv[ifaces.start..=ifaces.end]
            .windows(2)
            .map(|p| decay * 0.5 * (p[0] + p[1]))
            .collect();
        let rhs_scale = rhs.iter().fold(0.0, |a: f64, v| a.max(*v));
        if rhs_scale > 0.0 {
            for (s, r) in hf.interface_gradient(grid)[ifaces.clone()].iter().zip(&rhs) {
                pointwise_defect = pointwise_defect.max((s.abs() - r) / rhs_scale);
            }
        }

        let sup = f.sup_norm();
        if sup > 0.0 {
            let bound = lip_constant * sup;
            let actual = max_slope(grid, &hf, ifaces.clone());
            lip_slack = lip_slack.min((bound - actual) / bound);
            if actual > 0.0 {
                lip_ratio = lip_ratio.min(bound / actual);
            }
        }

        let l2 = f.norm_p(grid, 2.0);
        if l2 > 0.0 {
            let bound = theta * l2;
            ultra_slack = ultra_slack.min((bound - sup_on(hf.values(), &ifaces)) / bound);
        }
    }

    let finite_or_zero = |v: f64| if v.is_finite() { v } else { 0.0 };
    let tv_slack = finite_or_zero(tv_slack);
    let tv_nominal_slack = finite_or_zero(tv_nominal_slack);
    let lip_slack = finite_or_zero(lip_slack);
    let ultra_slack = finite_or_zero(ultra_slack);

    let mut report = VerificationReport::for_grid("smoothing", grid);
    report.input("t", t).input("trials", trials).input("K", k);
    report
        .record("resolved_lo", grid.nodes()[ifaces.start])
        .record("resolved_hi", grid.nodes()[ifaces.end])
        .record("discrete_curvature", kappa)
        .record("effective_K", k_eff)
        .record("tv_min_slack", tv_slack)
        .record("tv_nominal_K_min_slack", tv_nominal_slack)
        .record("pointwise_defect", pointwise_defect)
        .record("lipschitz_constant", lip_constant)
        .record("lipschitz_min_slack", lip_slack)
        .record("theta", theta)
        .record("ultracontractive_min_slack", ultra_slack);
    if lip_ratio.is_finite() {
        report.record("lipschitz_min_ratio", lip_ratio);
    }
    report
        .sub_check(SubCheck::new("tv_contraction", tv_slack, TV_TOLERANCE))
        .sub_check(SubCheck::new(
            "pointwise_bakry_emery",
            0.0 - pointwise_defect,
            DISCRETIZATION_TOLERANCE,
        ))
        .sub_check(SubCheck::new("lipschitz_smoothing", lip_slack, DISCRETIZATION_TOLERANCE))
        .sub_check(SubCheck::new("ultracontractivity", ultra_slack, DISCRETIZATION_TOLERANCE))
        .sub_check(SubCheck::info(
            "tv_contraction_nominal_K",
            tv_nominal_slack,
            DISCRETIZATION_TOLERANCE,
        ));
    report.note("pointwise estimates read on [resolved_lo, resolved_hi]");
    report.note("gap is the smallest slack/tolerance over the four estimates");
    report.conclude_normalized();
    Ok(report)
}
