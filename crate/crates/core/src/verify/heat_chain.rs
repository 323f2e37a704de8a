use serde_json::json;

use super::{min_of, SubCheck, VerificationReport};
use crate::error::{ensure_finite, Error, Result};
use crate::kernels::j_k;
use crate::mmspace::{measure_and_perimeter, DiscreteFunction, DiscreteSet, MeasureMode, WeightedGrid};
use crate::spectral::HeatOperator;

pub const HEAT_CHAIN_TOL: f64 = 1e-3;

/// The three terms of the heat-flow lower bound for the perimeter of `set`:
///
/// `L(t) = J_K(t) Per(A) ≥ M(t) = 2(m − m² − ‖H_{t/2}(χ_A − m)‖²) ≥ R(t) = 2m(1−m)(1 − e^{−λ₁t})`,
///
/// checked at every `t` in `ts` with slack `≥ −tol`.
pub fn verify_heat_chain(grid: &WeightedGrid, set: &DiscreteSet, ts: &[f64], tol: f64) -> Result<VerificationReport> {
    if grid.measure_mode() != MeasureMode::Probability {
        return Err(Error::UnsupportedModel {
            check: "heat chain",
            model: grid.label(),
        });
    }
    let k = grid.k_tag().ok_or(Error::MissingCurvature("heat chain"))?;
    if ts.is_empty() {
        return Err(Error::InvalidArgument("heat chain needs at least one time".into()));
    }
    for &t in ts {
        ensure_finite(t, "heat chain time")?;
        if t <= 0.0 {
            return Err(Error::InvalidArgument(format!("heat chain times must be positive, got {t}")));
        }
    }
    let (m, per) = measure_and_perimeter(grid, set.intervals())?;
    if set.is_empty() || set.node_count() == grid.len() {
        return Err(Error::InvalidArgument("heat chain set must be neither empty nor full".into()));
    }

    let t_min = min_of(ts.iter().copied());
    let heat = HeatOperator::new(grid, t_min)?;
    let lambda1 = heat.gap();
    let centred = DiscreteFunction::new(set.indicator(grid).values().iter().map(|v| v - m).collect())?;

    let (mut ls, mut ms, mut rs) = (Vec::new(), Vec::new(), Vec::new());
    let mut report = VerificationReport::for_grid("heat_chain", grid);
    for &t in ts {
        let l = j_k(k, t)? * per;
        let middle = 2.0 * (m - m * m - heat.norm_sq(&centred, 0.5 * t)?);
        let r = 2.0 * m * (1.0 - m) * -(-lambda1 * t).exp_m1();
        report
            .sub_check(SubCheck::new(format!("L>=M@t={t}"), l - middle, tol))
            .sub_check(SubCheck::new(format!("M>=R@t={t}"), middle - r, tol));
        ls.push(l);
        ms.push(middle);
        rs.push(r);
    }
    let gap = min_of(ls.iter().zip(&ms).zip(&rs).flat_map(|((l, mm), r)| [l - mm, mm - r]));

    report
        .input("n", grid.len())
        .input("K", k)
        .input("t", json!(ts))
        .input("set", json!(set.intervals()))
        .record("measure", m)
        .record("perimeter", per)
        .record("lambda1", lambda1)
        .record("L", json!(ls))
        .record("M", json!(ms))
        .record("R", json!(rs))
        .record("gap", gap);
    report.conclude(gap, tol);
    Ok(report)
}
