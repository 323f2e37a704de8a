//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for the
//! eigenvalues, inverse iteration for the vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Relative (to `‖T‖`) bisection tolerance.
pub const BISECTION_TOL: f64 = 1e-13;
/// Maximum inverse-iteration sweeps per eigenvector.
pub const MAX_INVERSE_ITERATIONS: usize = 50;
/// Eigenvalues closer than this fraction of `‖T‖` are re-orthogonalized
/// against each other.
pub const CLUSTER_TOL: f64 = 1e-3;
/// Accepted residual `‖T u − λ u‖`, relative to `‖T‖`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`.
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    d: Vec<f64>,
    e: Vec<f64>,
    norm: f64,
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `‖T u − λ u‖ / ‖T‖` for the unit vector `u`.
    pub residual: f64,
}

impl SymTridiagonal {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Result<Self> {
        if d.is_empty() || e.len() + 1 != d.len() {
            return Err(Error::DegenerateGrid(format!(
                "tridiagonal of size {} needs {} off-diagonal entries, got {}",
                d.len(),
                d.len().saturating_sub(1),
                e.len()
            )));
        }
        if d.iter().chain(&e).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        let n = d.len();
        let norm = (0..n)
            .map(|i| {
                let left = if i > 0 { e[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { e[i].abs() } else { 0.0 };
                d[i].abs() + left + right
            })
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        Ok(Self { d, e, norm })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Infinity norm (an upper bound on the spectral radius).
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn diag(&self) -> &[f64] {
        &self.d
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.e
    }

    /// `T x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut y = self.d[i] * x[i];
                if i > 0 {
                    y += self.e[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.e[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE / f64::EPSILON * self.norm.max(1.0);
        let mut count = 0;
        let mut q = self.d[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let tol = BISECTION_TOL * self.norm;
        lo -= tol;
        hi += tol;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(T − σ I) x = b` by Gaussian elimination with partial pivoting.
    fn shifted_solve(&self, sigma: f64, b: &mut [f64]) {
        let n = self.dim();
        if n == 1 {
            let p = self.d[0] - sigma;
            b[0] /= if p.abs() < f64::EPSILON * self.norm { f64::EPSILON * self.norm } else { p };
            return;
        }
        // Row i of U holds (u0, u1, u2) at columns (i, i+1, i+2).
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let tiny = f64::EPSILON * self.norm;
        let mut a = self.d[0] - sigma;
        let mut c = self.e[0];
        for i in 0..n - 1 {
            let sub = self.e[i];
            let next_d = self.d[i + 1] - sigma;
            let next_c = if i + 2 < n { self.e[i + 1] } else { 0.0 };
            if a.abs() >= sub.abs() {
                let piv = if a.abs() < tiny { tiny } else { a };
                let l = sub / piv;
                u0[i] = piv;
                u1[i] = c;
                u2[i] = 0.0;
                b[i + 1] -= l * b[i];
                a = next_d - l * c;
                c = next_c;
            } else {
                // swap rows i and i+1
                let l = a / sub;
                u0[i] = sub;
                u1[i] = next_d;
                u2[i] = next_c;
                b.swap(i, i + 1);
                let bi = b[i];
                b[i + 1] -= l * bi;
                a = c - l * next_d;
                c = -l * next_c;
            }
        }
        u0[n - 1] = if a.abs() < tiny { tiny } else { a };
        // back substitution
        b[n - 1] /= u0[n - 1];
        b[n - 2] = (b[n - 2] - u1[n - 2] * b[n - 1]) / u0[n - 2];
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - u1[i] * b[i + 1] - u2[i] * b[i + 2]) / u0[i];
        }
    }

    fn residual(&self, u: &[f64], lambda: f64) -> f64 {
        let tu = self.apply(u);
        tu.iter()
            .zip(u)
            .map(|(t, x)| (t - lambda * x).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Inverse iteration for the eigenvalue near `sigma`, orthogonal to `against`.
    fn inverse_iteration(&self, index: usize, sigma: f64, against: &[Vec<f64>]) -> Result<EigenPair> {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + index as u64);
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        orthogonalize(&mut x, against);
        normalize(&mut x);
        // a shift exactly at an eigenvalue is harmless, but keep it off zero pivots
        let shift = sigma + f64::EPSILON * self.norm * if index.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut stagnant = 0;
        // residual reachable in floating point
        let floor = 8.0 * f64::EPSILON * (n as f64).sqrt();
        for _ in 0..MAX_INVERSE_ITERATIONS {
            self.shifted_solve(shift, &mut x);
            orthogonalize(&mut x, against);
            if normalize(&mut x) == 0.0 {
                return Err(Error::NoConvergence {
                    iterations: 0,
                    residual: f64::INFINITY,
                });
            }
            let r = self.residual(&x, rayleigh(self, &x)) / self.norm;
            match &best {
                Some((b, _)) if r >= 0.5 * *b => stagnant += 1,
                _ => stagnant = 0,
            }
            if best.as_ref().is_none_or(|(b, _)| r < *b) {
                best = Some((r, x.clone()));
            }
            if r <= floor || (stagnant >= 2 && r <= RESIDUAL_TOL) {
                break;
            }
        }
        let (residual, mut vector) = best.expect("at least one iteration");
        if residual > RESIDUAL_TOL {
            return Err(Error::NoConvergence {
                iterations: MAX_INVERSE_ITERATIONS,
                residual,
            });
        }
        fix_sign(&mut vector);
        Ok(EigenPair {
            value: rayleigh(self, &vector),
            vector,
            residual,
        })
    }

    /// The lowest `count` eigenpairs, ascending.
    pub fn lowest(&self, count: usize) -> Result<Vec<EigenPair>> {
        if count > self.dim() {
            return Err(Error::InvalidArgument(format!(
                "requested {count} eigenpairs of a {}-dimensional operator",
                self.dim()
            )));
        }
        let values: Vec<f64> = (0..count).into_par_iter().map(|k| self.eigenvalue(k)).collect();
        // split into clusters that need mutual re-orthogonalization
        let gap = CLUSTER_TOL * self.norm;
        let mut clusters: Vec<std::ops::Range<usize>> = Vec::new();
        let mut start = 0;
        for k in 1..=count {
            if k == count || values[k] - values[k - 1] > gap {
                clusters.push(start..k);
                start = k;
            }
        }
        let solved: Vec<Result<Vec<EigenPair>>> = clusters
            .into_par_iter()
            .map(|range| {
                let mut pairs: Vec<EigenPair> = Vec::with_capacity(range.len());
                let mut basis: Vec<Vec<f64>> = Vec::with_capacity(range.len());
                for k in range {
                    let pair = self.inverse_iteration(k, values[k], &basis)?;
                    basis.push(pair.vector.clone());
                    pairs.push(pair);
                }
                Ok(pairs)
            })
            .collect();
        let mut out = Vec::with_capacity(count);
        for block in solved {
            out.extend(block?);
        }
        out.sort_by(|a, b| a.value.total_cmp(&b.value));
        Ok(out)
    }
}

fn rayleigh(t: &SymTridiagonal, u: &[f64]) -> f64 {
    let tu = t.apply(u);
    let num: f64 = tu.iter().zip(u).map(|(a, b)| a * b).sum();
    let den: f64 = u.iter().map(|v| v * v).sum();
    num / den
}

fn orthogonalize(x: &mut [f64], against: &[Vec<f64>]) {
    // twice is enough (Kahan)
    for _ in 0..2 {
        for q in against {
            let c: f64 = x.iter().zip(q).map(|(a, b)| a * b).sum();
            for (xi, qi) in x.iter_mut().zip(q) {
                *xi -= c * qi;
            }
        }
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let scale = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return 0.0;
    }
    for v in x.iter_mut() {
        *v /= scale;
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in x.iter_mut() {
        *v /= norm;
    }
    norm * scale
}

/// Makes the first component above `1e-8 · max|u|` positive.
fn fix_sign(u: &mut [f64]) {
    let big = u.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if let Some(first) = u.iter().find(|v| v.abs() > 1e-8 * big) {
        if *first < 0.0 {
            for v in u.iter_mut() {
                *v = -*v;
            }
        }
    }
}
