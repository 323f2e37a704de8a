use std::io::Write;

use super::operator::{assemble_operator, count_below, solve_spectrum, SpectralDecomposition};
use crate::error::{ensure_finite, Error, Result};
use crate::mmspace::{BoundaryCondition, DiscreteFunction, WeightedGrid};

/// Modes with `λ t_min` above this are dropped: their weight `e^{−λ t}` is
/// below `1e−16` for every admissible `t`.
pub const MODE_CUTOFF: f64 = 37.0;

/// The heat semigroup `H_t f = Σ_k e^{−λ_k t} ⟨f, v_k⟩_m v_k` on a grid.
#[derive(Debug, Clone)]
pub struct HeatOperator {
    decomposition: SpectralDecomposition,
    masses: Vec<f64>,
    bc: BoundaryCondition,
    t_min: f64,
}

impl HeatOperator {
    /// Keeps every mode with `λ ≤ MODE_CUTOFF / t_min`; evaluations are
    /// then accurate for `t ≥ t_min`.
    pub fn new(grid: &WeightedGrid, t_min: f64) -> Result<Self> {
        ensure_finite(t_min, "t_min")?;
        if t_min <= 0.0 {
            return Err(Error::InvalidArgument(format!("t_min must be positive, got {t_min}")));
        }
        let op = assemble_operator(grid)?;
        let count = count_below(&op, MODE_CUTOFF / t_min)?.clamp(2.min(op.dim()), op.dim());
        let decomposition = solve_spectrum(&op, count)?;
        Ok(Self {
            decomposition,
            masses: grid.masses().to_vec(),
            bc: grid.bc(),
            t_min,
        })
    }

    /// Uses all modes of the operator; exact (to rounding) for every `t ≥ 0`.
    pub fn complete(grid: &WeightedGrid) -> Result<Self> {
        let op = assemble_operator(grid)?;
        let decomposition = solve_spectrum(&op, op.dim())?;
        Ok(Self {
            decomposition,
            masses: grid.masses().to_vec(),
            bc: grid.bc(),
            t_min: 0.0,
        })
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    /// Spectral gap: `λ₁` under Neumann conditions, the bottom `λ₀` otherwise.
    pub fn gap(&self) -> f64 {
        let e = &self.decomposition.eigenvalues;
        if self.bc == BoundaryCondition::Neumann {
            e[1]
        } else {
            e[0]
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        ensure_finite(t, "time t")?;
        if t < 0.0 {
            return Err(Error::InvalidArgument(format!("heat flow needs t >= 0, got {t}")));
        }
        if t > 0.0 && t < self.t_min {
            return Err(Error::InvalidArgument(format!(
                "t = {t} is below the resolved minimum time {}",
                self.t_min
            )));
        }
        Ok(())
    }

    /// Mass-weighted coefficients `⟨f, v_k⟩_m`.
    pub fn coefficients(&self, f: &[f64]) -> Vec<f64> {
        self.decomposition
            .eigenvectors
            .iter()
            .map(|v| v.iter().zip(f).zip(&self.masses).map(|((a, b), m)| a * b * m).sum())
            .collect()
    }

    /// `H_t f`.
    pub fn apply(&self, f: &DiscreteFunction, t: f64) -> Result<DiscreteFunction> {
        self.check_time(t)?;
        if f.len() != self.masses.len() {
            return Err(Error::InvalidArgument("function length differs from grid".into()));
        }
        if t == 0.0 {
            return Ok(f.clone());
        }
        let coeffs = self.coefficients(f.values());
        let mut out = vec![0.0; f.len()];
        for ((c, l), v) in coeffs
            .iter()
            .zip(&self.decomposition.eigenvalues)
            .zip(&self.decomposition.eigenvectors)
        {
            let a = c * (-l * t).exp();
            for (o, x) in out.iter_mut().zip(v) {
                *o += a * x;
            }
        }
        DiscreteFunction::new(out)
    }

    /// `‖H_t f‖²₂ = Σ e^{−2λt} ⟨f, v_k⟩²`, valid for `2t ≥ t_min`.
    pub fn norm_sq(&self, f: &DiscreteFunction, t: f64) -> Result<f64> {
        self.check_time(2.0 * t)?;
        if t == 0.0 {
            return Ok(f.values().iter().zip(&self.masses).map(|(v, m)| m * v * v).sum());
        }
        let coeffs = self.coefficients(f.values());
        Ok(coeffs
            .iter()
            .zip(&self.decomposition.eigenvalues)
            .map(|(c, l)| c * c * (-2.0 * l * t).exp())
            .sum())
    }

    /// Heat kernel density `ρ_t(x_i, x_j)` with respect to `m`.
    pub fn kernel(&self, i: usize, j: usize, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let n = self.masses.len();
        for idx in [i, j] {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, len: n });
            }
        }
        if t == 0.0 {
            return Ok(if i == j { 1.0 / self.masses[i] } else { 0.0 });
        }
        Ok(self
            .decomposition
            .eigenvalues
            .iter()
            .zip(&self.decomposition.eigenvectors)
            .map(|(l, v)| (-l * t).exp() * v[i] * v[j])
            .sum())
    }

    /// `ρ_t(x_i, ·)`.
    pub fn kernel_row(&self, i: usize, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let n = self.masses.len();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        if t == 0.0 {
            let mut row = vec![0.0; n];
            row[i] = 1.0 / self.masses[i];
            return Ok(row);
        }
        let mut row = vec![0.0; n];
        for (l, v) in self.decomposition.eigenvalues.iter().zip(&self.decomposition.eigenvectors) {
            let a = (-l * t).exp() * v[i];
            for (r, x) in row.iter_mut().zip(v) {
                *r += a * x;
            }
        }
        Ok(row)
    }

    /// `ρ_t(x_i, x_i)` for every node.
    pub fn kernel_diagonal(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let n = self.masses.len();
        if t == 0.0 {
            return Ok(self.masses.iter().map(|m| 1.0 / m).collect());
        }
        let mut diag = vec![0.0; n];
        for (l, v) in self.decomposition.eigenvalues.iter().zip(&self.decomposition.eigenvectors) {
            let a = (-l * t).exp();
            for (d, x) in diag.iter_mut().zip(v) {
                *d += a * x * x;
            }
        }
        Ok(diag)
    }

    /// Writes `x,rho` for the kernel slice `ρ_t(x_i, ·)`.
    pub fn write_kernel_csv<W: Write>(&self, grid: &WeightedGrid, i: usize, t: f64, out: W) -> Result<()> {
        let row = self.kernel_row(i, t)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "rho"])?;
        for (x, r) in grid.nodes().iter().zip(row) {
            w.write_record([format!("{x:e}"), format!("{r:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `H_t f`; see [`HeatOperator::apply`].
pub fn heat_apply(heat: &HeatOperator, f: &DiscreteFunction, t: f64) -> Result<DiscreteFunction> {
    heat.apply(f, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::{DiscreteSet, SpaceDescriptor};
    use std::f64::consts::PI;

    #[test]
    fn identity_at_zero_and_rejects_negative_time() {
        let g = WeightedGrid::build(&SpaceDescriptor::Uniform { l: PI, n: 201 }).unwrap();
        let h = HeatOperator::new(&g, 0.1).unwrap();
        let f = DiscreteFunction::sample(&g, |x| x * x).unwrap();
        assert_eq!(h.apply(&f, 0.0).unwrap(), f);
        assert!(h.apply(&f, -1.0).is_err());
        assert!(h.apply(&f, 0.01).is_err());
        assert_eq!(h.kernel(3, 4, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn constants_are_preserved() {
        let g = WeightedGrid::build(&SpaceDescriptor::Gaussian { k: 1.0, r: 8.0, n: 801 }).unwrap();
        let h = HeatOperator::new(&g, 0.5).unwrap();
        let f = DiscreteFunction::constant(g.len(), 2.5);
        for t in [0.5, 1.0, 10.0] {
            let out = h.apply(&f, t).unwrap();
            assert!(out.values().iter().all(|v| (v - 2.5).abs() < 1e-10));
        }
    }

    #[test]
    fn semigroup_mean_and_maximum_principle() {
        let g = WeightedGrid::build(&SpaceDescriptor::Uniform { l: PI, n: 301 }).unwrap();
        let h = HeatOperator::new(&g, 0.05).unwrap();
        let f = DiscreteFunction::sample(&g, |x| if x < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let one = h.apply(&h.apply(&f, 0.2).unwrap(), 0.3).unwrap();
        let both = h.apply(&f, 0.5).unwrap();
        for (a, b) in one.values().iter().zip(both.values()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((both.integral(&g) - f.integral(&g)).abs() < 1e-12);
        assert!(both.values().iter().all(|v| *v >= -1e-10 && *v <= 1.0 + 1e-10));
    }

    #[test]
    fn kernel_reversibility() {
        let g = WeightedGrid::build(&SpaceDescriptor::Gaussian { k: 1.0, r: 6.0, n: 401 }).unwrap();
        let h = HeatOperator::new(&g, 0.1).unwrap();
        let m = g.masses();
        for &(i, j) in &[(10, 200), (50, 380), (199, 201)] {
            // transition probabilities P_ij = ρ_ij m_j satisfy detailed balance
            let scale = h.kernel(i, i, 0.3).unwrap().max(h.kernel(j, j, 0.3).unwrap()) * m[i] * m[j];
            let pij = h.kernel(i, j, 0.3).unwrap() * m[j];
            let pji = h.kernel(j, i, 0.3).unwrap() * m[i];
            assert!((pij * m[i] - pji * m[j]).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn gaussian_half_line_decay() {
        let g = WeightedGrid::build(&SpaceDescriptor::Gaussian { k: 1.0, r: 8.0, n: 4001 }).unwrap();
        let h = HeatOperator::new(&g, 1.0).unwrap();
        let a = DiscreteSet::below(&g, 0.0).unwrap();
        let f = a.indicator(&g).map(|v| v - a.measure()).unwrap();
        let before = f.norm_p(&g, 2.0);
        let after = h.apply(&f, 1.0).unwrap().norm_p(&g, 2.0);
        assert!(after <= (-h.gap()).exp() * before + 1e-12);
        assert!((h.norm_sq(&f, 1.0).unwrap().sqrt() - after).abs() < 1e-10);
    }

    #[test]
    fn complete_basis_reproduces_identity_at_small_time() {
        let g = WeightedGrid::build(&SpaceDescriptor::Uniform { l: 1.0, n: 40 }).unwrap();
        let h = HeatOperator::complete(&g).unwrap();
        let f = DiscreteFunction::sample(&g, |x| (7.0 * x).cos()).unwrap();
        let out = h.apply(&f, 1e-14).unwrap();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
