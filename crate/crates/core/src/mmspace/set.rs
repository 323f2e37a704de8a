use serde::{Deserialize, Serialize};

use super::function::DiscreteFunction;
use super::grid::WeightedGrid;
use crate::error::{Error, Result};

/// A union of disjoint, non-adjacent inclusive index ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSet {
    intervals: Vec<(usize, usize)>,
    measure: f64,
    perimeter: f64,
}

/// Sorts and merges overlapping or touching ranges.
fn normalize(mut intervals: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    intervals.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(intervals.len());
    for (a, b) in intervals {
        match merged.last_mut() {
            Some(last) if a <= last.1 + 1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    merged
}

fn check_ranges(grid: &WeightedGrid, intervals: &[(usize, usize)]) -> Result<()> {
    let n = grid.len();
    for &(a, b) in intervals {
        if a > b {
            return Err(Error::InvalidArgument(format!("empty range {a}..={b}")));
        }
        if b >= n {
            return Err(Error::IndexOutOfRange { index: b, len: n });
        }
    }
    Ok(())
}

/// Measure and perimeter of the union of `intervals` (inclusive ranges).
///
/// The perimeter sums interface weights at every cut; an end of the ambient
/// interval contributes its end density only under a Dirichlet condition.
pub fn measure_and_perimeter(grid: &WeightedGrid, intervals: &[(usize, usize)]) -> Result<(f64, f64)> {
    check_ranges(grid, intervals)?;
    let merged = normalize(intervals.to_vec());
    Ok(measure_perimeter_unchecked(grid, &merged))
}

pub(crate) fn measure_perimeter_unchecked(grid: &WeightedGrid, merged: &[(usize, usize)]) -> (f64, f64) {
    let n = grid.len();
    let m = grid.masses();
    let w = grid.iface_weights();
    let ends = grid.end_weights();
    let mut measure = 0.0;
    let mut perimeter = 0.0;
    for &(a, b) in merged {
        measure += m[a..=b].iter().sum::<f64>();
        perimeter += boundary_weight_left(grid, a, w, ends) + boundary_weight_right(grid, b, n, w, ends);
    }
    (measure, perimeter)
}

#[inline]
pub(crate) fn boundary_weight_left(grid: &WeightedGrid, a: usize, w: &[f64], ends: [f64; 2]) -> f64 {
    if a > 0 {
        w[a - 1]
    } else if grid.bc().dirichlet_left() {
        ends[0]
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn boundary_weight_right(grid: &WeightedGrid, b: usize, n: usize, w: &[f64], ends: [f64; 2]) -> f64 {
    if b + 1 < n {
        w[b]
    } else if grid.bc().dirichlet_right() {
        ends[1]
    } else {
        0.0
    }
}

impl DiscreteSet {
    pub fn new(grid: &WeightedGrid, intervals: Vec<(usize, usize)>) -> Result<Self> {
        check_ranges(grid, &intervals)?;
        let intervals = normalize(intervals);
        let (measure, perimeter) = measure_perimeter_unchecked(grid, &intervals);
        Ok(Self {
            intervals,
            measure,
            perimeter,
        })
    }

    pub fn empty() -> Self {
        Self {
            intervals: Vec::new(),
            measure: 0.0,
            perimeter: 0.0,
        }
    }

    pub fn full(grid: &WeightedGrid) -> Self {
        Self::new(grid, vec![(0, grid.len() - 1)]).expect("full range is valid")
    }

    /// Nodes where `mask` is true.
    pub fn from_mask(grid: &WeightedGrid, mask: &[bool]) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::InvalidArgument("mask length differs from grid".into()));
        }
        let mut intervals = Vec::new();
        let mut start = None;
        for (i, &inside) in mask.iter().enumerate() {
            match (inside, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    intervals.push((s, i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            intervals.push((s, mask.len() - 1));
        }
        Self::new(grid, intervals)
    }

    /// Nodes with coordinate strictly below `x`.
    pub fn below(grid: &WeightedGrid, x: f64) -> Result<Self> {
        let mask: Vec<bool> = grid.nodes().iter().map(|&v| v < x).collect();
        Self::from_mask(grid, &mask)
    }

    pub fn intervals(&self) -> &[(usize, usize)] {
        &self.intervals
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= i && i <= b)
    }

    pub fn node_count(&self) -> usize {
        self.intervals.iter().map(|(a, b)| b - a + 1).sum()
    }

    pub fn complement(&self, grid: &WeightedGrid) -> Result<Self> {
        let mask: Vec<bool> = (0..grid.len()).map(|i| !self.contains(i)).collect();
        Self::from_mask(grid, &mask)
    }

    /// `χ_A` as a node function.
    pub fn indicator(&self, grid: &WeightedGrid) -> DiscreteFunction {
        let mut v = vec![0.0; grid.len()];
        for &(a, b) in &self.intervals {
            for x in &mut v[a..=b] {
                *x = 1.0;
            }
        }
        DiscreteFunction::new(v).expect("indicator values are finite")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::SpaceDescriptor;
    use std::f64::consts::PI;

    #[test]
    fn uniform_left_half() {
        let g = WeightedGrid::build(&SpaceDescriptor::Uniform { l: PI, n: 2000 }).unwrap();
        let (m, p) = measure_and_perimeter(&g, &[(0, 999)]).unwrap();
        assert!((m - 0.5).abs() < 1e-12);
        assert!((p - 1.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn gaussian_negative_half_line() {
        // even node count: no node sits at the median
        let g = WeightedGrid::build(&SpaceDescriptor::Gaussian { k: 1.0, r: 8.0, n: 4000 }).unwrap();
        let a = DiscreteSet::below(&g, 0.0).unwrap();
        assert!((a.measure() - 0.5).abs() < 1e-12);
        assert!((a.perimeter() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn full_and_empty_sets() {
        let g = WeightedGrid::build(&SpaceDescriptor::Gaussian { k: 1.0, r: 8.0, n: 101 }).unwrap();
        let full = DiscreteSet::full(&g);
        assert_eq!(full.perimeter(), 0.0);
        assert_eq!(measure_and_perimeter(&g, &[]).unwrap(), (0.0, 0.0));
        assert!(matches!(
            measure_and_perimeter(&g, &[(3, 101)]),
            Err(Error::IndexOutOfRange { index: 101, len: 101 })
        ));
    }

    #[test]
    fn dirichlet_end_counts_in_perimeter() {
        let g = WeightedGrid::build(&SpaceDescriptor::Expx2 { r: 2.0, n: 41 }).unwrap();
        let (_, p) = measure_and_perimeter(&g, &[(0, 40)]).unwrap();
        assert!((p - 2.0 * 2f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn merging_and_complement() {
        let g = WeightedGrid::build(&SpaceDescriptor::Uniform { l: 1.0, n: 10 }).unwrap();
        let s = DiscreteSet::new(&g, vec![(5, 6), (2, 4), (8, 8)]).unwrap();
        assert_eq!(s.intervals(), &[(2, 6), (8, 8)]);
        let c = s.complement(&g).unwrap();
        assert_eq!(c.intervals(), &[(0, 1), (7, 7), (9, 9)]);
        assert!((c.perimeter() - s.perimeter()).abs() < 1e-15);
        assert!((c.measure() + s.measure() - 1.0).abs() < 1e-15);
    }
}
