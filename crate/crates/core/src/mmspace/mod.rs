//! Discrete weighted one-dimensional metric measure spaces.

mod cheeger;
mod coarea;
mod descriptor;
mod function;
mod grid;
pub mod models;
mod set;

pub use cheeger::{
    cheeger_search, fold_candidates, for_each_candidate, Candidate, CheegerOptions, CheegerResult,
    ProfileBin, MAX_UNION_NODES, TIE_TOLERANCE,
};
pub use coarea::{coarea_decompose, coarea_integral, total_variation, LevelSet};
pub use descriptor::{SpaceDescriptor, MODEL_NAMES};
pub use function::DiscreteFunction;
pub use grid::{BoundaryCondition, MeasureMode, WeightedGrid};
pub use set::{measure_and_perimeter, DiscreteSet};
