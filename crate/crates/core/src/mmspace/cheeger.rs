//! Exhaustive Cheeger-constant search over interval candidates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{MeasureMode, WeightedGrid};
use super::set::{boundary_weight_left, boundary_weight_right, DiscreteSet};
use crate::error::{Error, Result};

/// Relative tolerance under which two ratios (or two measures) count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Largest grid on which two-interval unions may be enumerated.
pub const MAX_UNION_NODES: usize = 160;

/// One candidate set: the interval `start..=end`, or its complement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub start: usize,
    pub end: usize,
    pub complement: bool,
    pub measure: f64,
    pub perimeter: f64,
}

impl Candidate {
    pub fn ratio(&self) -> f64 {
        self.perimeter / self.measure
    }

    /// First node of the set itself.
    pub fn first_node(&self) -> usize {
        if self.complement {
            0
        } else {
            self.start
        }
    }

    pub fn to_set(&self, grid: &WeightedGrid) -> Result<DiscreteSet> {
        let set = DiscreteSet::new(grid, vec![(self.start, self.end)])?;
        if self.complement {
            set.complement(grid)
        } else {
            Ok(set)
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CheegerOptions {
    /// Also enumerate unions of two disjoint intervals (small grids only).
    pub two_interval_unions: bool,
    pub profile_bins: usize,
    /// Smallest profile bin edge, as a fraction of the total mass.
    pub profile_min_fraction: f64,
}

impl Default for CheegerOptions {
    fn default() -> Self {
        Self {
            two_interval_unions: false,
            profile_bins: 24,
            profile_min_fraction: 1e-3,
        }
    }
}

/// Minimal perimeter and ratio among candidates whose measure falls in
/// `[measure_lo, measure_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    pub measure_lo: f64,
    pub measure_hi: f64,
    pub min_perimeter: f64,
    pub min_ratio: f64,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheegerResult {
    pub h: f64,
    pub optimizer: DiscreteSet,
    pub profile: Vec<ProfileBin>,
    pub candidates_examined: u64,
}

/// Shared data for candidate enumeration.
struct Enumerator<'a> {
    grid: &'a WeightedGrid,
    /// `prefix[a]`: mass of nodes `0..a`.
    prefix: Vec<f64>,
    /// `suffix[b]`: mass of nodes `b..n`.
    suffix: Vec<f64>,
    total: f64,
    cap: f64,
    complements: bool,
}

impl<'a> Enumerator<'a> {
    fn new(grid: &'a WeightedGrid) -> Self {
        let mut prefix = Vec::with_capacity(grid.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for m in grid.masses() {
            acc += m;
            prefix.push(acc);
        }
        let mut suffix = vec![0.0; grid.len() + 1];
        for (i, m) in grid.masses().iter().enumerate().rev() {
            suffix[i] = suffix[i + 1] + m;
        }
        let finite = grid.measure_mode() != MeasureMode::InfiniteTruncated;
        Self {
            grid,
            total: acc,
            cap: if finite { 0.5 * acc } else { f64::INFINITY },
            complements: finite,
            prefix,
            suffix,
        }
    }

    fn for_start<F: FnMut(Candidate)>(&self, a: usize, mut visit: F) {
        let g = self.grid;
        let n = g.len();
        let w = g.iface_weights();
        let ends = g.end_weights();
        let left = boundary_weight_left(g, a, w, ends);
        let ghost_ends = if g.bc().dirichlet_left() { ends[0] } else { 0.0 }
            + if g.bc().dirichlet_right() { ends[1] } else { 0.0 };
        let masses = g.masses();
        // sums of positive terms only: differences of prefix sums cancel
        // catastrophically when the masses span many orders of magnitude
        let mut measure = 0.0;
        for b in a..n {
            measure += masses[b];
            if a == 0 && b == n - 1 {
                continue;
            }
            let perimeter = left + boundary_weight_right(g, b, n, w, ends);
            if measure > 0.0 && measure <= self.cap {
                visit(Candidate {
                    start: a,
                    end: b,
                    complement: false,
                    measure,
                    perimeter,
                });
            }
            // complements of intervals touching an end are themselves intervals
            if self.complements && a > 0 && b + 1 < n {
                let measure = self.prefix[a] + self.suffix[b + 1];
                if measure > 0.0 && measure <= self.cap {
                    visit(Candidate {
                        start: a,
                        end: b,
                        complement: true,
                        measure,
                        perimeter: w[a - 1] + w[b] + ghost_ends,
                    });
                }
            }
        }
    }
}

/// Calls `visit` on every single-interval candidate (and complement, in
/// finite-measure modes), in parallel over the interval start index.
pub fn for_each_candidate<F>(grid: &WeightedGrid, visit: F)
where
    F: Fn(&Candidate) + Sync,
{
    let e = Enumerator::new(grid);
    (0..grid.len()).into_par_iter().for_each(|a| e.for_start(a, |c| visit(&c)));
}

type Tie = (f64, usize, Vec<(usize, usize)>, bool);

/// Folds all candidates with a per-worker accumulator, merged by `merge`.
pub fn fold_candidates<T, I, F, M>(grid: &WeightedGrid, init: I, fold: F, merge: M) -> T
where
    T: Send,
    I: Fn() -> T + Sync + Send,
    F: Fn(&mut T, &Candidate) + Sync + Send,
    M: Fn(T, T) -> T + Sync + Send,
{
    let e = Enumerator::new(grid);
    (0..grid.len())
        .into_par_iter()
        .fold(&init, |mut acc, a| {
            e.for_start(a, |c| fold(&mut acc, &c));
            acc
        })
        .reduce(&init, merge)
}

#[derive(Clone)]
struct Union {
    first: (usize, usize),
    second: (usize, usize),
    measure: f64,
    perimeter: f64,
}

fn union_candidates(grid: &WeightedGrid, e: &Enumerator<'_>) -> Vec<Union> {
    let n = grid.len();
    let w = grid.iface_weights();
    let ends = grid.end_weights();
    let intervals: Vec<((usize, usize), f64, f64)> = (0..n)
        .flat_map(|a| (a..n).map(move |b| (a, b)))
        .map(|(a, b)| {
            let m: f64 = grid.masses()[a..=b].iter().sum();
            let p = boundary_weight_left(grid, a, w, ends) + boundary_weight_right(grid, b, n, w, ends);
            ((a, b), m, p)
        })
        .collect();
    intervals
        .par_iter()
        .flat_map_iter(|&(first, m1, p1)| {
            intervals
                .iter()
                .filter(move |(second, _, _)| second.0 > first.1 + 1)
                .filter_map(move |&(second, m2, p2)| {
                    let measure = m1 + m2;
                    (measure <= e.cap).then_some(Union {
                        first,
                        second,
                        measure,
                        perimeter: p1 + p2,
                    })
                })
        })
        .collect()
}

fn profile_edges(total: f64, opts: &CheegerOptions) -> (f64, f64) {
    (opts.profile_min_fraction * total, 0.5 * total)
}

fn bin_of(measure: f64, lo: f64, hi: f64, bins: usize) -> Option<usize> {
    if measure < lo || measure > hi || bins == 0 {
        return None;
    }
    let pos = (measure / lo).ln() / (hi / lo).ln() * bins as f64;
    Some((pos as usize).min(bins - 1))
}

/// `h = min Per(A)/m(A)` over intervals and their complements with
/// `0 < m(A) ≤ m(X)/2` (finite measure) or over all intervals (truncated
/// infinite measure).
///
/// Ties within [`TIE_TOLERANCE`] go to the smaller measure, then to the set
/// starting further left. The result does not depend on how the
/// enumeration is split across workers.
pub fn cheeger_search(grid: &WeightedGrid, opts: &CheegerOptions) -> Result<CheegerResult> {
    if grid.len() < 2 {
        return Err(Error::DegenerateGrid("Cheeger search needs at least 2 nodes".into()));
    }
    if opts.two_interval_unions && grid.len() > MAX_UNION_NODES {
        return Err(Error::InvalidArgument(format!(
            "two-interval unions are limited to {MAX_UNION_NODES} nodes, grid has {}",
            grid.len()
        )));
    }
    let e = Enumerator::new(grid);
    let bins = opts.profile_bins;
    let (lo, hi) = profile_edges(e.total, opts);

    struct Acc {
        best: f64,
        count: u64,
        profile: Vec<(f64, f64, u64)>,
    }
    let fresh = || Acc {
        best: f64::INFINITY,
        count: 0,
        profile: vec![(f64::INFINITY, f64::INFINITY, 0); bins],
    };
    let acc = fold_candidates(
        grid,
        fresh,
        |acc, c| {
            acc.count += 1;
            let r = c.ratio();
            if r < acc.best {
                acc.best = r;
            }
            if let Some(k) = bin_of(c.measure, lo, hi, bins) {
                let slot = &mut acc.profile[k];
                slot.0 = slot.0.min(c.perimeter);
                slot.1 = slot.1.min(r);
                slot.2 += 1;
            }
        },
        |mut a, b| {
            a.best = a.best.min(b.best);
            a.count += b.count;
            for (x, y) in a.profile.iter_mut().zip(b.profile) {
                x.0 = x.0.min(y.0);
                x.1 = x.1.min(y.1);
                x.2 += y.2;
            }
            a
        },
    );
    if !acc.best.is_finite() {
        return Err(Error::DegenerateGrid("no admissible candidate set".into()));
    }

    let mut best = acc.best;
    let unions = if opts.two_interval_unions {
        let u = union_candidates(grid, &e);
        for c in &u {
            best = best.min(c.perimeter / c.measure);
        }
        u
    } else {
        Vec::new()
    };
    let threshold = best * (1.0 + TIE_TOLERANCE);

    // Tied candidates as (measure, first node, set, complement flag).
    let mut ties: Vec<Tie> = fold_candidates(
        grid,
        Vec::new,
        |v, c| {
            if c.ratio() <= threshold {
                v.push((c.measure, c.first_node(), vec![(c.start, c.end)], c.complement));
            }
        },
        |mut a, mut b| {
            a.append(&mut b);
            a
        },
    );
    for u in &unions {
        if u.perimeter / u.measure <= threshold {
            ties.push((u.measure, u.first.0, vec![u.first, u.second], false));
        }
    }
    let min_measure = ties.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
    let chosen = ties
        .into_iter()
        .filter(|t| t.0 <= min_measure * (1.0 + TIE_TOLERANCE))
        .min_by(|x, y| x.1.cmp(&y.1).then(x.2.cmp(&y.2)).then(x.3.cmp(&y.3)))
        .expect("at least one tied candidate");
    let mut optimizer = DiscreteSet::new(grid, chosen.2)?;
    if chosen.3 {
        optimizer = optimizer.complement(grid)?;
    }

    let mut profile_acc = acc.profile;
    for u in &unions {
        if let Some(k) = bin_of(u.measure, lo, hi, bins) {
            let slot = &mut profile_acc[k];
            slot.0 = slot.0.min(u.perimeter);
            slot.1 = slot.1.min(u.perimeter / u.measure);
            slot.2 += 1;
        }
    }
    let profile = profile_acc
        .into_iter()
        .enumerate()
        .map(|(k, (p, r, count))| {
            let edge = |j: usize| lo * (hi / lo).powf(j as f64 / bins as f64);
            ProfileBin {
                measure_lo: edge(k),
                measure_hi: edge(k + 1),
                min_perimeter: p,
                min_ratio: r,
                count,
            }
        })
        .collect();

    Ok(CheegerResult {
        h: best,
        optimizer,
        profile,
        candidates_examined: acc.count + unions.len() as u64,
    })
}
