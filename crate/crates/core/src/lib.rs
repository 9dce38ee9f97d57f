//! Long-run competitive equilibrium (LRCE) of a competitive industry with
//! heterogeneous firms.
//!
//! Firms draw a cost type on entry, their types follow a Markov kernel, and
//! they exit when their type crosses a threshold. The crate computes the
//! stationary price, exit threshold, entrant mass and cross-section, and the
//! representative average weighted cost whose minimum over price and
//! threshold is the long-run supply price.
//!
//! The crate is `no_std` and only needs `alloc`. IO, configuration files and
//! the command-line surface live in the companion `lrce` crate.
//!
//! Module map:
//!
//! * [`primitives`]: cost, demand and kernel families plus assumption checks.
//! * [`grid`]: midpoint-cell discretization of the type space.
//! * [`firm`]: static profit maximization.
//! * [`measure`]: measures over types, the truncated transition operator and
//!   its resolvent, weighted aggregates.
//! * [`value`]: firm value functions under forced and optimal exit.
//! * [`equilibrium`]: entry/exit schedules, the LRCE and long-run supply.
//! * [`planner`]: the steady-state surplus maximizing allocation.
//! * [`twotype`]: closed forms for the two-type permanent-cost example.
//! * [`sim`]: seeded firm-level Monte Carlo of the industry panel.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod equilibrium;
pub mod error;
pub mod firm;
pub mod grid;
pub mod linalg;
pub mod measure;
pub mod numeric;
pub mod planner;
pub mod primitives;
pub mod sim;
pub mod twotype;
pub mod value;

pub use equilibrium::{
    aggregate_supply, entry_price, exit_residual, long_run_supply, schedules, solve_lrce,
    stationary_point, LrceSolution, Model, Schedules, SolverOptions,
};
pub use error::{Error, Result};
pub use grid::{DiscretizedModel, ThresholdBracket};
pub use measure::{AggregateBundle, TypeMeasure};
pub use planner::{compare, solve_planner, ComparisonReport, PlannerSolution};
pub use primitives::{
    validate_primitives, CostSpec, DemandSpec, EntrantSpec, FixedCost, KernelSpec,
    ModelPrimitives, ValidationReport, VariableCost,
};
pub use twotype::{solve_twotype, OracleSolution, TwoTypeModel};
pub use value::ValueTable;
