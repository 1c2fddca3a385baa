//! Error types for graph construction, SCM evaluation, and verification.

use crate::graph::NodeId;
use thiserror::Error;

/// Errors raised by DAG construction and graph queries.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("edge set contains a directed cycle")]
    CycleDetected,
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("duplicate node `{0}`")]
    DuplicateNode(NodeId),
    #[error("node names must be non-empty")]
    EmptyNodeName,
    #[error("node sets must be pairwise disjoint (`{0}` appears twice)")]
    OverlappingSets(NodeId),
    #[error("adjustment variable `{0}` is not flagged observed")]
    UnobservedDa(NodeId),
}

/// Errors raised by probability tables, SCM evaluators, and chain verification.
#[derive(Debug, Error)]
pub enum ScmError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("unknown variable `{0}`")]
    UnknownVariable(NodeId),
    #[error("value `{value}` is not in the domain of `{node}`")]
    ValueOutOfDomain { node: NodeId, value: String },
    #[error("table would hold {cells} cells, above the cap of {cap}")]
    DomainTooLarge { cells: u128, cap: usize },
    #[error("CPT for `{node}` has {got} entries, expected {expected}")]
    CptShape {
        node: NodeId,
        got: usize,
        expected: usize,
    },
    #[error("CPT row {row} for `{node}` sums to {sum}, not 1")]
    CptRowSum { node: NodeId, row: usize, sum: f64 },
    #[error("negative probability {value} at entry {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("table shape mismatch: {0}")]
    TableShape(String),
    #[error("{criterion} criterion violated at condition {condition}")]
    CriterionViolated {
        criterion: &'static str,
        condition: u8,
    },
    #[error("adjustment variable `{0}` is not observed")]
    UnobservedAdjustment(NodeId),
    #[error("node `{0}` has no domain size")]
    MissingDomainSize(NodeId),
    #[error("SCM does not have the bimodal fusion topology")]
    TopologyMismatch,
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
