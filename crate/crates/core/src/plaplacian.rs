//! First nontrivial p-Laplacian eigenvalues on weighted grids.
//!
//! `λ_{1,p} = min E_p(f)` over `f` with `Σ m|f|^p = 1` and
//! `Σ m|f|^{p−2} f = 0`, where `E_p(f) = Σ w_j |f_{j+1} − f_j|^p / Δx_j^{p−1}`.
//! Equivalently `λ_{1,p} = min E_p(f) / min_c Σ m|f − c|^p`, a ratio of
//! convex p-homogeneous functionals, which the nonlinear inverse power
//! method decreases monotonically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use crate::error::{ensure_finite, Error, Result};
use crate::mmspace::{cheeger_search, BoundaryCondition, CheegerOptions, DiscreteFunction, MeasureMode, WeightedGrid};
use crate::spectral::{assemble_operator, solve_spectrum};

pub const P_MIN: f64 = 1.0;
pub const P_MAX: f64 = 8.0;
pub const RESTARTS: usize = 16;
/// Restarts whose value lies within this distance of the best one agree.
pub const AGREEMENT_TOL: f64 = 1e-6;
/// Cap on Newton steps summed over all outer iterations of one restart.
pub const ITERATION_CAP: usize = 100_000;

const OUTER_TOL: f64 = 1e-12;
/// Bound on the extrapolated remaining decrease of a linearly converging run.
const TAIL_TOL: f64 = 1e-10;
const MAX_OUTER: usize = 20_000;
const MAX_NEWTON: usize = 50;

#[derive(Debug, Clone, Serialize)]
pub struct PEigenResult {
    pub p: f64,
    pub value: f64,
    pub minimizer: DiscreteFunction,
    /// `|Σ m |f|^{p−2} f|` at the minimizer.
    pub constraint_residual: f64,
    pub restarts_agreeing: usize,
    pub iterations: usize,
}

/// `E_p(f) = Σ w_j |f_{j+1} − f_j|^p / Δx_j^{p−1}`.
pub fn p_energy(grid: &WeightedGrid, f: &DiscreteFunction, p: f64) -> Result<f64> {
    f.check_len(grid)?;
    Ok(edge_coefficients(grid, p)
        .iter()
        .zip(f.values().windows(2))
        .map(|(a, v)| a * (v[1] - v[0]).abs().powf(p))
        .sum())
}

fn edge_coefficients(grid: &WeightedGrid, p: f64) -> Vec<f64> {
    grid.iface_weights()
        .iter()
        .enumerate()
        .map(|(j, w)| w / grid.spacing(j).powf(p - 1.0))
        .collect()
}

/// `|s|^{r} sign(s)`, finite at `s = 0` for every `r ≥ 0`.
#[inline]
fn signed_pow(s: f64, r: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.abs().powf(r).copysign(s)
    }
}

/// Root of the increasing map `s ↦ Σ m |f + s|^{r} sign(f + s)`, bisected to
/// full precision.
fn centering_shift(masses: &[f64], f: &[f64], r: f64) -> f64 {
    let moment = |s: f64| -> f64 { masses.iter().zip(f).map(|(m, v)| m * signed_pow(v + s, r)).sum() };
    let (min, max) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let (mut lo, mut hi) = (-max, -min);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if moment(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn constraint_residual(masses: &[f64], f: &[f64], p: f64) -> f64 {
    masses.iter().zip(f).map(|(m, v)| m * signed_pow(*v, p - 1.0)).sum::<f64>().abs()
}

fn p_norm(masses: &[f64], f: &[f64], p: f64) -> f64 {
    masses.iter().zip(f).map(|(m, v)| m * v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Shifts into the constraint set and rescales to unit p-norm.
fn project(masses: &[f64], f: &mut [f64], p: f64) {
    let s = centering_shift(masses, f, p - 1.0);
    for v in f.iter_mut() {
        *v += s;
    }
    let norm = p_norm(masses, f, p);
    for v in f.iter_mut() {
        *v /= norm;
    }
}

/// Solves the symmetric tridiagonal system `(diag, −off)` in place.
fn solve_spd_tridiagonal(diag: &[f64], off: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut denom = diag[0];
    rhs[0] /= denom;
    for i in 1..n {
        c[i - 1] = -off[i - 1] / denom;
        denom = diag[i] + off[i - 1] * c[i - 1];
        rhs[i] = (rhs[i] + off[i - 1] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

struct Problem<'a> {
    a: Vec<f64>,
    masses: &'a [f64],
    p: f64,
}

impl Problem<'_> {
    fn energy(&self, u: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(u.windows(2))
            .map(|(a, v)| a * (v[1] - v[0]).abs().powf(self.p))
            .sum()
    }

    /// `min_u E_p(u)/p − Σ g u` by damped, regularized Newton from `u`.
    /// Returns the number of Newton steps taken.
    fn inner_solve(&self, g: &[f64], u: &mut [f64]) -> usize {
        let n = u.len();
        let p = self.p;
        let objective = |u: &[f64]| self.energy(u) / p - g.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
        let g_scale = g.iter().fold(0.0, |a: f64, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut phi = objective(u);
        let mut grad = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        let mut trial = vec![0.0; n];
        let mut steps = 0;
        while steps < MAX_NEWTON {
            steps += 1;
            let d_max = u.windows(2).fold(0.0, |a: f64, v| a.max((v[1] - v[0]).abs()));
            let delta2 = (1e-6 * d_max).powi(2).max(f64::MIN_POSITIVE);
            grad.iter_mut().zip(g).for_each(|(x, gi)| *x = -gi);
            diag.iter_mut().for_each(|x| *x = 0.0);
            for j in 0..n - 1 {
                let d = u[j + 1] - u[j];
                let flux = self.a[j] * signed_pow(d, p - 1.0);
                grad[j] -= flux;
                grad[j + 1] += flux;
                let b = (p - 1.0) * self.a[j] * (d * d + delta2).powf(0.5 * (p - 2.0));
                diag[j] += b;
                diag[j + 1] += b;
                off[j] = b;
            }
            if grad.iter().fold(0.0, |a: f64, v| a.max(v.abs())) <= 1e-13 * g_scale {
                break;
            }
            // the Hessian annihilates constants; a tiny mass term fixes the level
            let reg = 1e-12 * diag.iter().fold(0.0, |a: f64, v| a.max(*v));
            let max_mass = self.masses.iter().fold(0.0, |a: f64, v| a.max(*v));
            for (x, m) in diag.iter_mut().zip(self.masses) {
                *x += reg * m / max_mass;
            }
            let mut step: Vec<f64> = grad.iter().map(|x| -x).collect();
            solve_spd_tridiagonal(&diag, &off, &mut step);
            let slope: f64 = grad.iter().zip(&step).map(|(a, b)| a * b).sum();
            if slope >= 0.0 {
                break;
            }
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                for ((t, x), s) in trial.iter_mut().zip(u.iter()).zip(&step) {
                    *t = x + alpha * s;
                }
                let value = objective(&trial);
                if value <= phi + 1e-4 * alpha * slope {
                    accepted = Some(value);
                    break;
                }
                alpha *= 0.5;
            }
            let Some(value) = accepted else { break };
            u.copy_from_slice(&trial);
            let decrease = phi - value;
            phi = value;
            if decrease <= 1e-14 * phi.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        steps
    }

    /// Inverse power iteration from `f`, returning `(value, f, newton_steps)`.
    fn minimize(&self, mut f: Vec<f64>) -> Result<(f64, Vec<f64>, usize)> {
        let p = self.p;
        project(self.masses, &mut f, p);
        let mut value = self.energy(&f);
        let mut steps = 0;
        let mut last_change = f64::INFINITY;
        let mut last_ratio = f64::NAN;
        for outer in 0..MAX_OUTER {
            let g: Vec<f64> = self.masses.iter().zip(&f).map(|(m, v)| m * signed_pow(*v, p - 1.0)).collect();
            // at an eigenfunction the inner minimizer is λ^{−1/(p−1)} f
            let mut u: Vec<f64> = f.iter().map(|v| v * value.powf(-1.0 / (p - 1.0))).collect();
            steps += self.inner_solve(&g, &mut u);
            project(self.masses, &mut u, p);
            let next = self.energy(&u);
            if !next.is_finite() {
                return Err(Error::NonFinite("p-energy iterate"));
            }
            if steps > ITERATION_CAP {
                return Err(Error::NoConvergence {
                    iterations: steps,
                    residual: (value - next).abs() / next,
                });
            }
            if next > value {
                // inexact inner solve; keep the better iterate
                return Ok((value, f, steps));
            }
            let change = value - next;
            f = u;
            value = next;
            // geometric tail once the contraction ratio has settled:
            // remaining ≈ change · r/(1 − r)
            let r = change / last_change;
            let settled = outer >= 10 && r < 1.0 && (r - last_ratio).abs() <= 0.05 * r;
            last_change = change;
            last_ratio = r;
            if change <= OUTER_TOL * value || (settled && change * r / (1.0 - r) <= TAIL_TOL * value) {
                return Ok((value, f, steps));
            }
        }
        Err(Error::NoConvergence {
            iterations: steps,
            residual: f64::NAN,
        })
    }
}

fn check_p(p: f64) -> Result<()> {
    ensure_finite(p, "p")?;
    if !(P_MIN..=P_MAX).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must lie in [{P_MIN}, {P_MAX}], got {p}")));
    }
    Ok(())
}

fn check_grid(grid: &WeightedGrid) -> Result<()> {
    if grid.measure_mode() == MeasureMode::InfiniteTruncated || grid.bc() != BoundaryCondition::Neumann {
        return Err(Error::UnsupportedModel {
            check: "p-eigenvalue",
            model: grid.label(),
        });
    }
    if grid.len() < 3 {
        return Err(Error::DegenerateGrid("p-eigenvalues need at least 3 nodes".into()));
    }
    Ok(())
}

/// `λ_{1,p}` of a finite-measure Neumann grid.
///
/// `p = 1` is the Cheeger constant, with minimizer `χ_E / m(E)` for the
/// optimal set `E`. For `p > 1`, [`RESTARTS`] deterministic starts (the
/// first eigenfunction, then increasingly perturbed copies) are each driven
/// to convergence and the smallest value is returned.
pub fn lambda_1p(grid: &WeightedGrid, p: f64) -> Result<PEigenResult> {
    check_p(p)?;
    check_grid(grid)?;
    if p == 1.0 {
        let res = cheeger_search(grid, &CheegerOptions::default())?;
        let e = &res.optimizer;
        let minimizer = e.indicator(grid).map(|v| v / e.measure())?;
        return Ok(PEigenResult {
            p,
            value: res.h,
            minimizer,
            constraint_residual: 0.0,
            restarts_agreeing: 1,
            iterations: 0,
        });
    }

    let op = assemble_operator(grid)?;
    let spectrum = solve_spectrum(&op, 2)?;
    let v1 = spectrum.eigenvectors[1].clone();
    let amplitude = v1.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    let problem = Problem {
        a: edge_coefficients(grid, p),
        masses: grid.masses(),
        p,
    };

    let runs: Vec<Result<(f64, Vec<f64>, usize)>> = (0..RESTARTS)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9 ^ r as u64);
            let weight = r as f64 / RESTARTS as f64;
            let start: Vec<f64> = v1
                .iter()
                .map(|v| v + weight * amplitude * rng.gen_range(-1.0..1.0))
                .collect();
            problem.minimize(start)
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut values = Vec::with_capacity(RESTARTS);
    let mut iterations = 0;
    for run in runs {
        let (value, f, steps) = run?;
        iterations += steps;
        values.push(value);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, f));
        }
    }
    let (value, f) = best.expect("at least one restart");
    let restarts_agreeing = values.iter().filter(|v| (*v - value).abs() <= AGREEMENT_TOL).count();
    Ok(PEigenResult {
        p,
        value,
        constraint_residual: constraint_residual(grid.masses(), &f, p),
        minimizer: DiscreteFunction::new(f)?,
        restarts_agreeing,
        iterations,
    })
}

/// The shift `t̃` making `γ = |γ_q|^{q/p−1} γ_q`, `γ_q = (f + t̃)/‖f + t̃‖_q`,
/// satisfy `Σ m|γ|^{p−2}γ = 0`; returns `(t̃, γ)`.
///
/// Since `|γ|^{p−2}γ = |γ_q|^{q(p−1)/p} sign γ_q`, the shift is the root of
/// the increasing map `s ↦ Σ m|f + s|^{q(p−1)/p} sign(f + s)`.
pub fn recentering_shift(
    grid: &WeightedGrid,
    f: &DiscreteFunction,
    p: f64,
    q: f64,
) -> Result<(f64, DiscreteFunction)> {
    ensure_finite(p, "p")?;
    ensure_finite(q, "q")?;
    if !(p > 1.0 && q > p) {
        return Err(Error::InvalidArgument(format!("recentering needs 1 < p < q, got p={p}, q={q}")));
    }
    f.check_len(grid)?;
    let v = f.values();
    let (min, max) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    if max - min <= f64::EPSILON * max.abs().max(min.abs()) {
        return Err(Error::InvalidArgument("recentering needs a non-constant function".into()));
    }
    let m = grid.masses();
    let shift = centering_shift(m, v, q * (p - 1.0) / p);
    let shifted: Vec<f64> = v.iter().map(|x| x + shift).collect();
    let norm_q = p_norm(m, &shifted, q);
    let gamma: Vec<f64> = shifted.iter().map(|x| signed_pow(x / norm_q, q / p)).collect();
    Ok((shift, DiscreteFunction::new(gamma)?))
}

/// The three terms of `(q/p)^p (E_q(γ_q))^{p/q} ≥ E_p(γ) ≥ λ_{1,p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderChain {
    pub left: f64,
    pub middle: f64,
    pub lambda_p: f64,
}

/// Evaluates the Hölder chain for the recentered `f` at exponents `p < q`.
pub fn holder_chain(grid: &WeightedGrid, f: &DiscreteFunction, p: f64, q: f64, lambda_p: f64) -> Result<HolderChain> {
    let (shift, gamma) = recentering_shift(grid, f, p, q)?;
    let m = grid.masses();
    let shifted: Vec<f64> = f.values().iter().map(|x| x + shift).collect();
    let norm_q = p_norm(m, &shifted, q);
    let gamma_q = DiscreteFunction::new(shifted.iter().map(|x| x / norm_q).collect())?;
    Ok(HolderChain {
        left: (q / p).powf(p) * p_energy(grid, &gamma_q, q)?.powf(p / q),
        middle: p_energy(grid, &gamma, p)?,
        lambda_p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub lambda_1p: f64,
    /// `p λ_{1,p}^{1/p}`.
    pub scaled: f64,
    pub restarts_agreeing: usize,
}

/// `p ↦ p λ_{1,p}^{1/p}` over ascending `ps`.
pub fn monotonicity_sweep(grid: &WeightedGrid, ps: &[f64]) -> Result<Vec<SweepRow>> {
    if ps.is_empty() {
        return Err(Error::InvalidArgument("no exponents given".into()));
    }
    for &p in ps {
        check_p(p)?;
    }
    if ps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("exponents must be strictly ascending".into()));
    }
    check_grid(grid)?;
    ps.iter()
        .map(|&p| {
            let r = lambda_1p(grid, p)?;
            Ok(SweepRow {
                p,
                lambda_1p: r.value,
                scaled: p * r.value.powf(1.0 / p),
                restarts_agreeing: r.restarts_agreeing,
            })
        })
        .collect()
}

/// Writes `p,lambda_1p,p_lambda_pow,restarts_agreeing`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "lambda_1p", "p_lambda_pow", "restarts_agreeing"])?;
    for r in rows {
        w.write_record([
            r.p.to_string(),
            format!("{:e}", r.lambda_1p),
            format!("{:e}", r.scaled),
            r.restarts_agreeing.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `(p − 1)(π_p / L)^p` with `π_p = 2π / (p sin(π/p))`: the first
/// p-eigenvalue of the interval `[0, L]` with uniform probability measure.
pub fn interval_p_eigenvalue(p: f64, length: f64) -> f64 {
    use std::f64::consts::PI;
    let pi_p = 2.0 * PI / (p * (PI / p).sin());
    (p - 1.0) * (pi_p / length).powf(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::SpaceDescriptor;
    use std::f64::consts::PI;

    fn interval(n: usize) -> WeightedGrid {
        WeightedGrid::build(&SpaceDescriptor::Uniform { l: PI, n }).unwrap()
    }

    #[test]
    fn closed_form_oracle_values() {
        assert!((interval_p_eigenvalue(2.0, PI) - 1.0).abs() < 1e-14);
        assert!((interval_p_eigenvalue(3.0, PI) - 0.912_36).abs() < 1e-4);
    }

    #[test]
    fn p_two_matches_spectral_gap() {
        let g = interval(401);
        let r = lambda_1p(&g, 2.0).unwrap();
        let op = assemble_operator(&g).unwrap();
        let l1 = solve_spectrum(&op, 2).unwrap().eigenvalues[1];
        assert!((r.value - l1).abs() < 1e-9, "{} vs {l1}", r.value);
        assert!(r.constraint_residual < 1e-10);
        assert_eq!(r.restarts_agreeing, RESTARTS);
    }

    #[test]
    fn p_one_is_cheeger_constant() {
        let g = interval(301);
        let r = lambda_1p(&g, 1.0).unwrap();
        assert!((r.value - 2.0 / PI).abs() < 1e-2);
        assert!((r.minimizer.integral(&g) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p_three_on_interval() {
        let g = interval(801);
        let r = lambda_1p(&g, 3.0).unwrap();
        assert!((r.value - interval_p_eigenvalue(3.0, PI)).abs() < 5e-3, "{}", r.value);
        assert!(r.constraint_residual < 1e-10);
        let v = r.minimizer.values();
        assert!(v.iter().any(|x| *x > 0.0) && v.iter().any(|x| *x < 0.0));
    }

    #[test]
    fn rejects_bad_exponents_and_infinite_measure() {
        let g = interval(51);
        assert!(lambda_1p(&g, 0.5).is_err());
        assert!(lambda_1p(&g, 9.0).is_err());
        assert!(monotonicity_sweep(&g, &[2.0, 1.5]).is_err());
        let e = WeightedGrid::build(&SpaceDescriptor::Expx2 { r: 2.0, n: 51 }).unwrap();
        assert!(matches!(lambda_1p(&e, 2.0), Err(Error::UnsupportedModel { .. })));
    }

    #[test]
    fn recentering_symmetry_and_translation() {
        let g = interval(201);
        let mid = PI / 2.0;
        let f = DiscreteFunction::sample(&g, |x| (x - mid).powi(3)).unwrap();
        let (t, gamma) = recentering_shift(&g, &f, 2.0, 3.0).unwrap();
        assert!(t.abs() < 1e-12);
        assert!((gamma.norm_p(&g, 2.0) - 1.0).abs() < 1e-12);
        assert!(constraint_residual(g.masses(), gamma.values(), 2.0) < 1e-10);
        let moved = f.map(|v| v + 0.3).unwrap();
        let (t2, _) = recentering_shift(&g, &moved, 2.0, 3.0).unwrap();
        assert!((t2 - (t - 0.3)).abs() < 1e-12);
        assert!(recentering_shift(&g, &DiscreteFunction::constant(201, 1.0), 2.0, 3.0).is_err());
    }

    #[test]
    fn holder_chain_from_q_minimizer() {
        let g = interval(401);
        let q = lambda_1p(&g, 3.0).unwrap();
        let lp = lambda_1p(&g, 2.0).unwrap().value;
        let chain = holder_chain(&g, &q.minimizer, 2.0, 3.0, lp).unwrap();
        assert!(chain.left >= chain.middle - 1e-8, "{chain:?}");
        assert!(chain.middle >= chain.lambda_p - 1e-8, "{chain:?}");
    }

    #[test]
    fn sweep_csv_has_header() {
        let rows = [SweepRow {
            p: 2.0,
            lambda_1p: 1.0,
            scaled: 2.0,
            restarts_agreeing: 16,
        }];
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("p,lambda_1p,p_lambda_pow,restarts_agreeing\n2,"));
    }
}
