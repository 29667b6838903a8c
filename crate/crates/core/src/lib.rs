//! Information/relevance influence diagrams.
//!
//! Build a model ([`IridModel`]) from name-based specs or a JSON file
//! ([`io::parse_model`]), then [`solve`] it stage by stage with either exact
//! enumeration or Gibbs sampling per stage. The [`oracle`] module brute-forces
//! the same answers for small models.
//!
//! ```
//! use irid::{bundled, solve, SolveOptions};
//!
//! let model = bundled::wildcatter_irid();
//! let solution = solve(&model, &SolveOptions::exact()).unwrap();
//! assert!((solution.expected_value - 334_750.0).abs() < 1e-6);
//! ```

pub mod bundled;
pub mod error;
pub mod factors;
pub mod gibbs;
pub mod graph_ops;
pub mod io;
pub mod model;
pub mod oracle;
pub mod random;
pub mod solver;

pub use error::{IridError, Result};
pub use factors::{full_conditional, Assignment, Config, Factor, VarId};
pub use gibbs::{Estimate, SamplerConfig};
pub use graph_ops::{
    absorb_decision, build_stage_context, compute_partition, moralize, relevance_subgraph,
    remove_barren, MoralGraph, StageContext, StagePartition,
};
pub use model::{
    policy_to_conditional, ArrowKind, ArrowSpec, ConstraintSpec, CptSpec, Frame, IridModel,
    ModelSpecs, NodeKind, NodeSpec, Objective, Policy, ValueSpec,
};
pub use oracle::{
    exact_expectation, exact_stage_expectation, exhaustive_policy_search, EnumerationBudget,
};
pub use solver::{solve, Backend, CellDiagnostic, Solution, SolveOptions};
