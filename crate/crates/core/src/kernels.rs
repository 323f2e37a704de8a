//! Closed-form scalar kernels.
//!
//! * [`j_k`]: the heat-smoothing function `J_K(t)` controlling the sharp
//!   Buser bound, with a series branch near `K = 0`.
//! * [`gaussian_cdf`], [`gaussian_density`], [`gaussian_quantile`] and the
//!   isoperimetric profile [`isoperimetric_profile`] `I_K = φ_K ∘ Φ_K⁻¹`.
//! * [`buser_sharp_bound`]: `sup_{t>0} (1 − e^{−λ₁ t}) / J_K(t)` by a log grid
//!   followed by golden-section refinement.
//! * [`reference_bounds`]: the classical Buser, Ledoux and Cheng values.

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::{FRAC_2_SQRT_PI, PI, SQRT_2};

use crate::error::{ensure_finite, Error, Result};

/// Below this value of `|K t|` the closed forms are replaced by their series.
pub const SERIES_SWITCH: f64 = 1e-8;

/// Sampling window and resolution used by [`buser_sharp_bound`].
pub const BUSER_T_MIN: f64 = 1e-6;
pub const BUSER_T_MAX: f64 = 1e6;
pub const BUSER_SAMPLES: usize = 512;
const GOLDEN_REL_WIDTH: f64 = 1e-10;

/// Curvature lower bound `K` (units 1/length²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureParam(f64);

impl CurvatureParam {
    pub fn new(k: f64) -> Result<Self> {
        ensure_finite(k, "curvature K").map(Self)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `J_K(t)` for `t > 0`.
///
/// For `|K t| < SERIES_SWITCH` the second-order expansion
/// `2√(t/π) (1 − Kt/6 + (Kt)²/120)` is used; it is the common Taylor series
/// of both curved branches, so the function is continuous across `K = 0`.
pub fn j_k(k: f64, t: f64) -> Result<f64> {
    ensure_finite(k, "curvature K")?;
    ensure_finite(t, "time t")?;
    if t <= 0.0 {
        return Err(Error::InvalidArgument(format!("J_K needs t > 0, got {t}")));
    }
    let s = k * t;
    if s.abs() < SERIES_SWITCH {
        return Ok(FRAC_2_SQRT_PI * t.sqrt() * (1.0 - s / 6.0 + s * s / 120.0));
    }
    if k > 0.0 {
        // e^{2Kt} − 1 overflows to +inf for large Kt; atan(inf) = π/2.
        let y = (2.0 * s).exp_m1().sqrt();
        Ok((2.0 / (PI * k)).sqrt() * y.atan())
    } else {
        // atanh(y) with y = √(1 − e^{2Kt}) equals ln(1 + y) − Kt, which stays
        // finite when y rounds to 1.
        let y = (-(2.0 * s).exp_m1()).sqrt();
        Ok((-2.0 / (PI * k)).sqrt() * (y.ln_1p() - s))
    }
}

/// `lim_{t→∞} J_K(t)`: `√(π/(2K))` for `K > 0`, infinite otherwise.
pub fn j_k_limit(k: f64) -> f64 {
    if k > 0.0 {
        (PI / (2.0 * k)).sqrt()
    } else {
        f64::INFINITY
    }
}

fn check_positive_k(k: f64) -> Result<f64> {
    ensure_finite(k, "curvature K")?;
    if k <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "Gaussian model needs K > 0, got {k}"
        )));
    }
    Ok(k)
}

/// Standard normal CDF, accurate in both tails.
fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `Φ_K(x) = √(K/2π) ∫_{−∞}^x e^{−K s²/2} ds`.
pub fn gaussian_cdf(k: f64, x: f64) -> Result<f64> {
    let k = check_positive_k(k)?;
    ensure_finite(x, "x")?;
    Ok(std_normal_cdf(k.sqrt() * x))
}

/// `φ_K(x) = Φ_K'(x)`.
pub fn gaussian_density(k: f64, x: f64) -> Result<f64> {
    let k = check_positive_k(k)?;
    ensure_finite(x, "x")?;
    Ok(k.sqrt() * std_normal_pdf(k.sqrt() * x))
}

/// Standard normal quantile for `p ∈ (0, 1/2]` (returns `z ≤ 0`).
///
/// Newton on `Φ(z) − p` inside a maintained bracket, falling back to bisection
/// when a Newton step leaves the bracket.
fn lower_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p <= 0.5);
    if p == 0.5 {
        return 0.0;
    }
    let mut lo = -40.0_f64;
    let mut hi = 0.0_f64;
    let mut z = (-SQRT_2 * erfc_inv(2.0 * p)).clamp(lo, hi);
    for _ in 0..200 {
        let g = std_normal_cdf(z) - p;
        if g > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        let d = std_normal_pdf(z);
        let mut next = if d > 0.0 { z - g / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - z).abs() <= 1e-13 * z.abs().max(1.0) || hi - lo <= 1e-15 {
            return next;
        }
        z = next;
    }
    z
}

/// `Φ_K⁻¹(p)` for `p ∈ (0, 1)`.
pub fn gaussian_quantile(k: f64, p: f64) -> Result<f64> {
    let k = check_positive_k(k)?;
    ensure_finite(p, "probability")?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile needs p in (0, 1), got {p}"
        )));
    }
    let z = if p <= 0.5 {
        lower_quantile(p)
    } else {
        -lower_quantile(1.0 - p)
    };
    Ok(z / k.sqrt())
}

/// Gaussian isoperimetric profile `I_K(x) = φ_K(Φ_K⁻¹(x))`, `x ∈ [0, 1]`.
///
/// Evaluated on `min(x, 1 − x)` so the profile is symmetric about 1/2.
pub fn isoperimetric_profile(k: f64, x: f64) -> Result<f64> {
    let k = check_positive_k(k)?;
    ensure_finite(x, "measure x")?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!(
            "profile needs x in [0, 1], got {x}"
        )));
    }
    let u = if x > 0.5 { 1.0 - x } else { x };
    if u == 0.0 {
        return Ok(0.0);
    }
    Ok(k.sqrt() * std_normal_pdf(lower_quantile(u)))
}

/// Result of maximizing `(1 − e^{−λ₁ t}) / J_K(t)` over `t > 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuserEvaluation {
    pub lambda1: f64,
    pub k: f64,
    pub sup_value: f64,
    /// Maximizer on the sampling window; meaningless when `at_infinity`.
    pub argmax_t: f64,
    /// The maximizer sits at the upper end of the sampling window, i.e. the
    /// supremum is (numerically) approached as `t → ∞`.
    pub at_infinity: bool,
    pub samples: Vec<(f64, f64)>,
}

fn buser_ratio(lambda1: f64, k: f64, t: f64) -> f64 {
    let num = -(-lambda1 * t).exp_m1();
    match j_k(k, t) {
        Ok(j) if j.is_finite() => num / j,
        _ => 0.0,
    }
}

/// Golden-section maximization of `f` on `[a, b]` until `b − a ≤ width`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, width: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a) > width && iter < 500 {
        iter += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `sup_{t>0} (1 − e^{−λ₁ t}) / J_K(t)`.
///
/// The ratio is sampled on `BUSER_SAMPLES` log-spaced points of
/// `[BUSER_T_MIN, BUSER_T_MAX]`; the best sample (rightmost among numerical
/// ties) is refined by golden section in `log t`. A maximizer beyond
/// `0.99 · BUSER_T_MAX` is reported as `at_infinity`, in which case the
/// `t → ∞` limit `√(2K/π)` (for `K > 0`) is folded into the supremum.
pub fn buser_sharp_bound(lambda1: f64, k: f64) -> Result<BuserEvaluation> {
    ensure_finite(lambda1, "lambda1")?;
    ensure_finite(k, "curvature K")?;
    if lambda1 < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda1 must be nonnegative, got {lambda1}"
        )));
    }
    let (lmin, lmax) = (BUSER_T_MIN.ln(), BUSER_T_MAX.ln());
    let samples: Vec<(f64, f64)> = (0..BUSER_SAMPLES)
        .map(|i| {
            let t = (lmin + (lmax - lmin) * i as f64 / (BUSER_SAMPLES - 1) as f64).exp();
            (t, buser_ratio(lambda1, k, t))
        })
        .collect();

    if lambda1 == 0.0 {
        return Ok(BuserEvaluation {
            lambda1,
            k,
            sup_value: 0.0,
            argmax_t: samples[0].0,
            at_infinity: false,
            samples,
        });
    }

    let best = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let idx = samples
        .iter()
        .rposition(|s| s.1 >= best * (1.0 - 1e-14))
        .expect("at least one sample attains the max");

    let lo = samples[idx.saturating_sub(1)].0.ln();
    let hi = samples[(idx + 1).min(BUSER_SAMPLES - 1)].0.ln();
    let (log_t, refined) = golden_section_max(
        |s| buser_ratio(lambda1, k, s.exp()),
        lo,
        hi,
        GOLDEN_REL_WIDTH,
    );
    let (mut argmax_t, mut sup_value) = if refined >= best {
        (log_t.exp(), refined)
    } else {
        (samples[idx].0, best)
    };
    if samples[idx].1 >= sup_value * (1.0 - 1e-14) && samples[idx].0 > argmax_t {
        argmax_t = samples[idx].0;
    }
    let at_infinity = argmax_t > 0.99 * BUSER_T_MAX;
    if at_infinity {
        sup_value = sup_value.max(1.0 / j_k_limit(k));
    }
    Ok(BuserEvaluation {
        lambda1,
        k,
        sup_value,
        argmax_t,
        at_infinity,
        samples,
    })
}

/// Classical comparison values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBounds {
    /// `2√(−(n−1)K) h + 10 h²`.
    pub buser_classical: f64,
    /// `max{6√(−K) h, 36 h²}`.
    pub ledoux: f64,
    /// `1/4 + (2π/r)²`.
    pub cheng: f64,
}

/// Cheng's upper bound for the first Dirichlet eigenvalue of a hyperbolic
/// ball of radius `r`.
pub fn cheng_bound(r: f64) -> Result<f64> {
    ensure_finite(r, "radius")?;
    if r <= 0.0 {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    Ok(0.25 + (2.0 * PI / r).powi(2))
}

pub fn reference_bounds(h: f64, k: f64, n: u32, r: f64) -> Result<ReferenceBounds> {
    ensure_finite(h, "Cheeger constant")?;
    ensure_finite(k, "curvature K")?;
    if h < 0.0 {
        return Err(Error::InvalidArgument(format!("h must be nonnegative, got {h}")));
    }
    if n < 1 {
        return Err(Error::InvalidArgument("dimension n must be at least 1".into()));
    }
    if k > 0.0 {
        return Err(Error::InvalidArgument(format!(
            "classical Buser/Ledoux bounds need K <= 0, got {k}"
        )));
    }
    Ok(ReferenceBounds {
        buser_classical: 2.0 * (-(f64::from(n) - 1.0) * k).sqrt() * h + 10.0 * h * h,
        ledoux: (6.0 * (-k).sqrt() * h).max(36.0 * h * h),
        cheng: cheng_bound(r)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn j_flat_value() {
        assert!((j_k(0.0, 1.0).unwrap() - 2.0 / PI.sqrt()).abs() < 1e-15);
        assert!((j_k(0.0, 1.0).unwrap() - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-6);
    }

    #[test]
    fn j_vanishes_at_zero_and_saturates() {
        for k in [-1.0, 0.0, 1.0] {
            assert!(j_k(k, 1e-14).unwrap() < 1e-6);
        }
        let lim = (PI / 2.0).sqrt();
        assert!((j_k(1.0, 1e3).unwrap() - lim).abs() < 1e-9);
        assert!((j_k(1.0, 1e3).unwrap() - 1.253_314).abs() < 1e-6);
    }

    #[test]
    fn j_rejects_bad_inputs() {
        assert!(j_k(f64::NAN, 1.0).is_err());
        assert!(j_k(1.0, f64::INFINITY).is_err());
        assert!(j_k(1.0, 0.0).is_err());
        assert!(j_k(1.0, -1.0).is_err());
    }

    #[test]
    fn j_series_matches_closed_forms_near_flat() {
        // Just above the switch the closed forms are still well conditioned;
        // the series must agree to third order in Kt.
        for &k in &[1e-3, -1e-3, 1e-5, -1e-5] {
            let t = 1.0;
            let closed = j_k(k, t).unwrap();
            let s = k * t;
            let series = FRAC_2_SQRT_PI * t.sqrt() * (1.0 - s / 6.0 + s * s / 120.0);
            assert!(rel(closed, series) < 1e-9, "k={k}: {closed} vs {series}");
        }
    }

    #[test]
    fn j_continuous_across_flat() {
        // J_K(t) / J_0(t) = 1 − Kt/6 + O((Kt)²), so at |K| = 1e-6 the
        // deviation from the flat value is Kt/6 to within 1e-8.
        for t in [0.1, 1.0, 10.0] {
            let flat = j_k(0.0, t).unwrap();
            for k in [1e-6, -1e-6] {
                let ratio = j_k(k, t).unwrap() / flat;
                assert!((ratio - (1.0 - k * t / 6.0)).abs() <= 1e-8, "k={k} t={t}");
            }
            // inside the series window the values agree to 1e-8 outright
            let k = 0.5e-8 / t;
            assert!(rel(j_k(k, t).unwrap(), flat) <= 1e-8);
        }
    }

    #[test]
    fn j_negative_large_time_is_finite() {
        let v = j_k(-1.0, 1e4).unwrap();
        assert!(v.is_finite());
        // ln(1+y) − Kt ≈ ln 2 + 1e4
        let expected = (2.0 / PI).sqrt() * (2f64.ln() + 1e4);
        assert!(rel(v, expected) < 1e-12);
    }

    #[test]
    fn profile_values() {
        let half = isoperimetric_profile(1.0, 0.5).unwrap();
        assert!((half - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((half - 0.398_942).abs() < 1e-6);
        assert_eq!(isoperimetric_profile(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(isoperimetric_profile(1.0, 1.0).unwrap(), 0.0);
        let i1 = isoperimetric_profile(1.0, 0.3).unwrap();
        let i4 = isoperimetric_profile(4.0, 0.3).unwrap();
        assert!((i4 - 2.0 * i1).abs() < 1e-14);
        assert!(isoperimetric_profile(1.0, -0.1).is_err());
        assert!(isoperimetric_profile(1.0, 1.1).is_err());
        assert!(isoperimetric_profile(-1.0, 0.3).is_err());
    }

    #[test]
    fn profile_at_point_three_against_bisection_oracle() {
        // Independent oracle: plain bisection on Φ.
        let (mut lo, mut hi) = (-10.0_f64, 0.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if std_normal_cdf(mid) < 0.3 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let expected = std_normal_pdf(0.5 * (lo + hi));
        assert!((isoperimetric_profile(1.0, 0.3).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn profile_small_measure_asymptotics() {
        let ratio = |x: f64| {
            isoperimetric_profile(1.0, x).unwrap() / (x * (2.0 * (1.0 / x).ln()).sqrt())
        };
        let r: Vec<f64> = [1e-3, 1e-5, 1e-7].iter().map(|&x| ratio(x)).collect();
        assert!((r[1] - 1.0).abs() < (r[0] - 1.0).abs());
        assert!((r[2] - 1.0).abs() < (r[1] - 1.0).abs());
    }

    #[test]
    fn quantile_round_trip() {
        for &x in &[1e-10, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-10] {
            let z = gaussian_quantile(1.0, x).unwrap();
            let back = gaussian_cdf(1.0, z).unwrap();
            assert!((back - x).abs() <= 1e-12 * x.max(1e-3), "x={x}: {back}");
        }
        assert!(gaussian_quantile(1.0, 0.0).is_err());
        assert!(gaussian_quantile(1.0, 1.0).is_err());
    }

    #[test]
    fn buser_zero_lambda() {
        let b = buser_sharp_bound(0.0, 1.0).unwrap();
        assert_eq!(b.sup_value, 0.0);
        assert!(buser_sharp_bound(-1.0, 1.0).is_err());
        assert!(buser_sharp_bound(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn buser_gaussian_equality_case_at_infinity() {
        let b = buser_sharp_bound(1.0, 1.0).unwrap();
        assert!((b.sup_value - (2.0 / PI).sqrt()).abs() < 1e-9, "{}", b.sup_value);
        assert!(b.at_infinity);
        assert_eq!(b.samples.len(), BUSER_SAMPLES);
        for &(_, r) in &b.samples {
            assert!(b.sup_value >= r);
        }
    }

    #[test]
    fn buser_monotone_in_lambda() {
        let one = buser_sharp_bound(1.0, 1.0).unwrap().sup_value;
        let two = buser_sharp_bound(2.0, 1.0).unwrap().sup_value;
        assert!(two >= one);
        let b = buser_sharp_bound(2.0, 1.0).unwrap();
        assert!(!b.at_infinity, "lambda1 > K has an interior maximizer");
    }

    #[test]
    fn buser_flat_interval_value() {
        // Dense-grid oracle for (1 − e^{−t}) / (2√(t/π)).
        let mut best = 0.0_f64;
        for i in 1..200_000 {
            let t = i as f64 * 1e-4;
            best = best.max(-(-t).exp_m1() / (2.0 * (t / PI).sqrt()));
        }
        let b = buser_sharp_bound(1.0, 0.0).unwrap();
        assert!((b.sup_value - best).abs() < 1e-8);
        assert!(!b.at_infinity);
    }

    #[test]
    fn reference_values() {
        let r = reference_bounds(1.0, -1.0, 2, 10.0).unwrap();
        assert!((r.buser_classical - 12.0).abs() < 1e-14);
        assert!((r.ledoux - 36.0).abs() < 1e-14);
        assert!(reference_bounds(1.0, 1.0, 2, 10.0).is_err());
        assert!((cheng_bound(1e12).unwrap() - 0.25).abs() < 1e-20);
        assert!(cheng_bound(0.0).is_err());
    }
}
