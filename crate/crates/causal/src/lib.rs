//! Exact causal inference on discrete structural causal models, at desk
//! scale.
//!
//! The crate provides:
//!
//! - [`graph`]: DAGs over named variables, simple-path machinery,
//!   d-separation by reachability (with a path-enumeration oracle), and the
//!   back-door, front-door, and relaxed front-door criterion checkers;
//! - [`table`]: dense probability tables with marginalization and
//!   conditioning, the currency of every evaluator and oracle comparison;
//! - [`scm`]: discrete SCMs with exact joints, graph-mutilation
//!   interventions, the interventional oracle, and the three
//!   adjustment-formula evaluators;
//! - [`docalc`]: graph surgery, the three do-calculus rules, and numerical
//!   certification of both derivations of the relaxed front-door adjustment;
//! - [`fusion`]: the six-variable bimodal-fusion SCM the relaxed criterion
//!   was designed for, plus seeded generators for property tests;
//! - [`io`]: the JSON wire formats for graphs and SCMs.

pub mod docalc;
pub mod error;
pub mod fusion;
pub mod graph;
pub mod io;
pub mod scm;
pub mod table;

pub use error::{GraphError, ScmError};
pub use graph::{
    backdoor_paths, check_backdoor_criterion, check_beta_frontdoor_criterion,
    check_frontdoor_criterion, d_separated, d_separated_by_enumeration, directed_paths, node,
    path_blocked, paths_between, CriterionReport, Dag, EdgeDir, NodeId, Path,
};
pub use scm::{
    backdoor_adjust, beta_frontdoor_adjust, frontdoor_adjust, random_scm, DiscreteScm,
};
pub use table::ProbTable;
