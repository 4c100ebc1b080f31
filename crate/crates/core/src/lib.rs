//! Minmax `k`-sink placement on dynamic tree networks.
//!
//! Given a tree whose edges have travel times and capacities and whose
//! vertices hold people, place at most `k` evacuation sinks and split the
//! tree into one connected region per sink so that the worst region cost —
//! for the flagship oracle, the time until the last person reaches their
//! sink — is as small as possible.
//!
//! The library is organized around a bounded-cost feasibility test
//! ([`feasibility`]) driven by any cost oracle satisfying four monotone
//! minmax axioms ([`oracle`]), an exact parametric optimizer on top of it
//! ([`optimizer`]), and exhaustive reference solvers for validation
//! ([`brute`]).

pub mod brute;
pub mod error;
pub mod gen;
pub mod feasibility;
pub mod optimizer;
pub mod oracle;
pub mod tree;

pub use error::{Error, Result};
pub use feasibility::{
    bounded_cost_fast, bounded_cost_iterative, fixed_sink_feasible, Configuration, Outcome,
    WorkingState,
};
pub use optimizer::{
    partition_fixed_sinks, solve_parametric_fast, solve_parametric_iterative, SolveReport,
    ThresholdMargin,
};
pub use oracle::{
    evac_time, verify_axioms, Cost, CostOracle, EccentricityOracle, EvacOracle, OracleHandle,
};
pub use tree::{Instance, VertexId, VertexSet};

// Compile and run every code snippet in the user guide as a doc-test so
// the book can never drift from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/feasibility.md")]
    mod feasibility {}
    #[doc = include_str!("../../../book/src/optimization.md")]
    mod optimization {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
