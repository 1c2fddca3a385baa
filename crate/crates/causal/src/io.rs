//! JSON wire formats for graphs and SCMs.
//!
//! Graph files look like
//! `{"nodes": [...], "edges": [["a","b"], ...], "observed": [...]}`.
//! SCM files extend that with `"domains"` (value-label lists per node) and
//! `"cpts"` (row-major P(node | parents): parents in lexicographic name
//! order, parent assignment row-major, node value fastest).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::ScmError;
use crate::graph::{Dag, NodeId};
use crate::scm::DiscreteScm;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphJson {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
    #[serde(default)]
    pub observed: Vec<String>,
}

impl GraphJson {
    pub fn to_dag(&self) -> Result<Dag, ScmError> {
        let nodes = self.nodes.iter().map(|n| NodeId::new(n)).collect();
        let edges = self
            .edges
            .iter()
            .map(|(a, b)| (NodeId::new(a), NodeId::new(b)))
            .collect();
        let observed: BTreeSet<NodeId> = self.observed.iter().map(NodeId::new).collect();
        Ok(Dag::new(nodes, edges, observed)?)
    }

    pub fn from_dag(dag: &Dag) -> Self {
        GraphJson {
            nodes: dag.nodes().iter().map(|n| n.as_str().to_owned()).collect(),
            edges: dag
                .edges()
                .into_iter()
                .map(|(a, b)| (a.as_str().to_owned(), b.as_str().to_owned()))
                .collect(),
            observed: dag
                .observed_set()
                .into_iter()
                .map(|n| n.as_str().to_owned())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScmJson {
    #[serde(flatten)]
    pub graph: GraphJson,
    pub domains: BTreeMap<String, Vec<String>>,
    pub cpts: BTreeMap<String, Vec<f64>>,
}

impl ScmJson {
    pub fn to_scm(&self) -> Result<DiscreteScm, ScmError> {
        let dag = self.graph.to_dag()?;
        let domains = self
            .domains
            .iter()
            .map(|(n, d)| (NodeId::new(n), d.clone()))
            .collect();
        let cpts = self
            .cpts
            .iter()
            .map(|(n, c)| (NodeId::new(n), c.clone()))
            .collect();
        DiscreteScm::new(dag, domains, cpts)
    }

    pub fn from_scm(scm: &DiscreteScm) -> Self {
        let graph = GraphJson::from_dag(scm.dag());
        let domains = scm
            .domains()
            .into_iter()
            .map(|(n, d)| (n.as_str().to_owned(), d))
            .collect();
        let cpts = scm
            .dag()
            .nodes()
            .iter()
            .map(|n| {
                (
                    n.as_str().to_owned(),
                    scm.cpt(n).expect("node exists").values().to_vec(),
                )
            })
            .collect();
        ScmJson {
            graph,
            domains,
            cpts,
        }
    }
}

pub fn dag_from_json(text: &str) -> Result<Dag, ScmError> {
    serde_json::from_str::<GraphJson>(text)?.to_dag()
}

pub fn dag_to_json(dag: &Dag) -> String {
    serde_json::to_string_pretty(&GraphJson::from_dag(dag)).expect("plain data serializes")
}

pub fn scm_from_json(text: &str) -> Result<DiscreteScm, ScmError> {
    serde_json::from_str::<ScmJson>(text)?.to_scm()
}

pub fn scm_to_json(scm: &DiscreteScm) -> String {
    serde_json::to_string_pretty(&ScmJson::from_scm(scm)).expect("plain data serializes")
}
