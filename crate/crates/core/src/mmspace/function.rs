use serde::{Deserialize, Serialize};

use super::grid::WeightedGrid;
use crate::error::{Error, Result};

/// Node-indexed real values on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteFunction {
    values: Vec<f64>,
}

impl DiscreteFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("function values"));
        }
        Ok(Self { values })
    }

    pub fn constant(len: usize, c: f64) -> Self {
        Self { values: vec![c; len] }
    }

    /// Samples `f` at the grid nodes.
    pub fn sample<F: Fn(f64) -> f64>(grid: &WeightedGrid, f: F) -> Result<Self> {
        Self::new(grid.nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn check_len(&self, grid: &WeightedGrid) -> Result<()> {
        if self.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "function has {} values but grid has {} nodes",
                self.len(),
                grid.len()
            )));
        }
        Ok(())
    }

    /// `∫ f dm`.
    pub fn integral(&self, grid: &WeightedGrid) -> f64 {
        self.values.iter().zip(grid.masses()).map(|(v, m)| v * m).sum()
    }

    /// `(∫ |f|^p dm)^{1/p}`.
    pub fn norm_p(&self, grid: &WeightedGrid, p: f64) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(grid.masses())
            .map(|(v, m)| m * v.abs().powf(p))
            .sum();
        s.powf(1.0 / p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Interface slopes `(f_{i+1} − f_i) / (x_{i+1} − x_i)`.
    pub fn interface_gradient(&self, grid: &WeightedGrid) -> Vec<f64> {
        self.values
            .windows(2)
            .enumerate()
            .map(|(i, w)| (w[1] - w[0]) / grid.spacing(i))
            .collect()
    }

    /// Node gradient magnitude: the larger adjacent interface slope.
    pub fn node_gradient(&self, grid: &WeightedGrid) -> Vec<f64> {
        let slopes = self.interface_gradient(grid);
        let n = self.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { slopes[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { slopes[i].abs() } else { 0.0 };
                left.max(right)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::SpaceDescriptor;

    #[test]
    fn norms_on_uniform_grid() {
        let g = WeightedGrid::build(&SpaceDescriptor::Uniform { l: 2.0, n: 11 }).unwrap();
        let one = DiscreteFunction::constant(11, 1.0);
        assert!((one.integral(&g) - 1.0).abs() < 1e-15);
        assert!((one.norm_p(&g, 3.0) - 1.0).abs() < 1e-15);
        let f = DiscreteFunction::sample(&g, |x| 2.0 * x).unwrap();
        assert!(f.interface_gradient(&g).iter().all(|s| (s - 2.0).abs() < 1e-12));
        assert!(DiscreteFunction::new(vec![f64::NAN]).is_err());
    }
}
