//! Variational solvers: cost functions, COBYLA driver and the four strategies.

mod cost;
mod optimise;
mod strategy;
mod trace;

pub use cost::{measurement_budget, CostKind, CostOperators};
pub use optimise::{FoldCadence, OptimiserConfig};
pub use strategy::{
    single_state_optimise, solve, subspace_optimise, sum_of_variances_optimise, Solution,
    EIGENSTATE_VARIANCE,
};
pub use trace::{ConvergenceTrace, TraceRecord};
