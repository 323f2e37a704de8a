//! Total variation and its exact level-set decomposition.

use serde::{Deserialize, Serialize};

use super::function::DiscreteFunction;
use super::grid::WeightedGrid;
use crate::error::Result;

/// `Σ w_{i+1/2} |f_{i+1} − f_i|`, plus `w_end |f_end|` at Dirichlet ends
/// (where the function jumps to the zero ghost).
pub fn total_variation(grid: &WeightedGrid, f: &DiscreteFunction) -> Result<f64> {
    f.check_len(grid)?;
    let v = f.values();
    let mut tv: f64 = v
        .windows(2)
        .zip(grid.iface_weights())
        .map(|(p, w)| w * (p[1] - p[0]).abs())
        .sum();
    let ends = grid.end_weights();
    if grid.bc().dirichlet_left() {
        tv += ends[0] * v[0].abs();
    }
    if grid.bc().dirichlet_right() {
        tv += ends[1] * v[v.len() - 1].abs();
    }
    Ok(tv)
}

/// The super-level set `{f > threshold}` and the width of the threshold
/// band `[threshold, next value)` over which it is constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    pub threshold: f64,
    pub width: f64,
    pub perimeter: f64,
    pub measure: f64,
}

/// Splits `f` into its super-level sets.
///
/// The thresholds are the sorted distinct values of `f` (together with the
/// ghost value 0 on grids with a Dirichlet end) except the largest, so
/// `Σ perimeter · width` equals [`total_variation`].
pub fn coarea_decompose(grid: &WeightedGrid, f: &DiscreteFunction) -> Result<Vec<LevelSet>> {
    f.check_len(grid)?;
    let v = f.values();
    let n = v.len();
    let bc = grid.bc();
    let has_ghost = bc.dirichlet_left() || bc.dirichlet_right();

    let mut levels: Vec<f64> = v.to_vec();
    if has_ghost {
        levels.push(0.0);
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let k = levels.len();
    if k < 2 {
        return Ok(Vec::new());
    }
    let rank = |x: f64| levels.binary_search_by(|l| l.total_cmp(&x)).expect("value is a level");

    // A jump between values of rank ra < rb is a cut for thresholds ra..rb.
    let mut per_diff = vec![0.0; k + 1];
    let mut add_jump = |a: f64, b: f64, w: f64| {
        let (ra, rb) = (rank(a), rank(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        per_diff[lo] += w;
        per_diff[hi] -= w;
    };
    for (i, w) in grid.iface_weights().iter().enumerate() {
        add_jump(v[i], v[i + 1], *w);
    }
    let ends = grid.end_weights();
    if bc.dirichlet_left() {
        add_jump(v[0], 0.0, ends[0]);
    }
    if bc.dirichlet_right() {
        add_jump(v[n - 1], 0.0, ends[1]);
    }

    // Node i lies in {f > levels[j]} for j < rank(f_i).
    let mut mass_diff = vec![0.0; k + 1];
    for (x, m) in v.iter().zip(grid.masses()) {
        mass_diff[0] += m;
        mass_diff[rank(*x)] -= m;
    }

    let mut out = Vec::with_capacity(k - 1);
    let (mut per, mut mass) = (0.0, 0.0);
    for j in 0..k - 1 {
        per += per_diff[j];
        mass += mass_diff[j];
        out.push(LevelSet {
            threshold: levels[j],
            width: levels[j + 1] - levels[j],
            perimeter: per.max(0.0),
            measure: mass.max(0.0),
        });
    }
    Ok(out)
}

/// `Σ Per({f > t}) Δt` over a decomposition.
pub fn coarea_integral(levels: &[LevelSet]) -> f64 {
    levels.iter().map(|l| l.perimeter * l.width).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::{DiscreteSet, SpaceDescriptor};
    use std::f64::consts::PI;

    #[test]
    fn constant_has_no_variation() {
        let g = WeightedGrid::build(&SpaceDescriptor::Uniform { l: PI, n: 50 }).unwrap();
        let f = DiscreteFunction::constant(50, 3.0);
        assert_eq!(total_variation(&g, &f).unwrap(), 0.0);
        assert!(coarea_decompose(&g, &f).unwrap().is_empty());
    }

    #[test]
    fn indicator_matches_perimeter() {
        let g = WeightedGrid::build(&SpaceDescriptor::Gaussian { k: 1.0, r: 8.0, n: 201 }).unwrap();
        let a = DiscreteSet::new(&g, vec![(20, 70), (120, 150)]).unwrap();
        let chi = a.indicator(&g);
        assert!((total_variation(&g, &chi).unwrap() - a.perimeter()).abs() < 1e-15);
        let levels = coarea_decompose(&g, &chi).unwrap();
        assert_eq!(levels.len(), 1);
        assert!((levels[0].perimeter - a.perimeter()).abs() < 1e-15);
        assert!((levels[0].measure - a.measure()).abs() < 1e-15);
    }

    #[test]
    fn threshold_count_is_distinct_values_minus_one() {
        let g = WeightedGrid::build(&SpaceDescriptor::Uniform { l: 1.0, n: 8 }).unwrap();
        let f = DiscreteFunction::new(vec![1.0, 2.0, 2.0, 5.0, 1.0, 3.0, 3.0, 5.0]).unwrap();
        assert_eq!(coarea_decompose(&g, &f).unwrap().len(), 3);
    }

    #[test]
    fn hat_function_on_gaussian_grid() {
        let g = WeightedGrid::build(&SpaceDescriptor::Gaussian { k: 1.0, r: 8.0, n: 4001 }).unwrap();
        let f = DiscreteFunction::sample(&g, |x| (1.0 - x.abs()).max(0.0)).unwrap();
        let tv = total_variation(&g, &f).unwrap();
        let integral = coarea_integral(&coarea_decompose(&g, &f).unwrap());
        assert!((integral - tv).abs() <= 1e-12 * tv);
    }

    #[test]
    fn dirichlet_ghost_is_respected() {
        let g = WeightedGrid::build(&SpaceDescriptor::Expx2 { r: 2.0, n: 21 }).unwrap();
        let f = DiscreteFunction::sample(&g, |x| x.sin() - 0.3).unwrap();
        let tv = total_variation(&g, &f).unwrap();
        let integral = coarea_integral(&coarea_decompose(&g, &f).unwrap());
        assert!((integral - tv).abs() <= 1e-12 * tv);
    }
}
