//! The bimodal-fusion SCM: the six-variable model of imbalanced multimodal
//! prediction that the relaxed front-door machinery is built for.
//!
//! Each modality's complete knowledge (`K_P`, `K_A`, unobserved) drives both
//! the label directly and a discriminative feature (`D_P`, `D_A`); the
//! features fuse into a representation `Z` that also drives the label `Y`:
//!
//! ```text
//! K_P -> D_P -> Z <- D_A <- K_A
//! K_P -> Y <- Z,      K_A -> Y
//! ```

use std::collections::BTreeMap;

use crate::error::ScmError;
use crate::graph::{node, Dag, NodeId};
use crate::scm::{random_scm, DiscreteScm};

/// Complete knowledge of the predominant modality (unobserved).
pub const K_P: &str = "K_P";
/// Complete knowledge of the auxiliary modality (unobserved).
pub const K_A: &str = "K_A";
/// Discriminative feature of the predominant modality.
pub const D_P: &str = "D_P";
/// Discriminative feature of the auxiliary modality.
pub const D_A: &str = "D_A";
/// Fused multimodal representation.
pub const Z: &str = "Z";
/// Predictive label.
pub const Y: &str = "Y";

/// The bimodal fusion DAG with `K_P` and `K_A` unobserved.
pub fn dag() -> Dag {
    Dag::new(
        [K_P, K_A, D_P, D_A, Z, Y].iter().map(|n| node(n)).collect(),
        vec![
            (node(K_P), node(D_P)),
            (node(K_A), node(D_A)),
            (node(D_P), node(Z)),
            (node(D_A), node(Z)),
            (node(Z), node(Y)),
            (node(K_P), node(Y)),
            (node(K_A), node(Y)),
        ],
        [D_P, D_A, Z, Y].iter().map(|n| node(n)).collect(),
    )
    .expect("the fusion graph is a fixed, valid DAG")
}

/// Whether `candidate` has exactly the fusion topology, including the
/// observability flags.
pub fn matches(candidate: &Dag) -> bool {
    let reference = dag();
    candidate.nodes() == reference.nodes()
        && candidate.edges() == reference.edges()
        && candidate.observed_set() == reference.observed_set()
}

fn require(scm: &DiscreteScm) -> Result<(), ScmError> {
    if matches(scm.dag()) {
        Ok(())
    } else {
        Err(ScmError::TopologyMismatch)
    }
}

/// Fails with [`ScmError::TopologyMismatch`] unless `scm` lives on the fusion
/// graph.
pub fn require_topology(scm: &DiscreteScm) -> Result<(), ScmError> {
    require(scm)
}

/// Random fusion SCM with every domain of size `domain_size`, CPT rows drawn
/// Dirichlet(1). Deterministic in `seed`.
pub fn random_fusion_scm(domain_size: usize, seed: u64) -> DiscreteScm {
    let g = dag();
    let sizes: BTreeMap<NodeId, usize> = g.nodes().iter().map(|n| (n.clone(), domain_size)).collect();
    random_scm(&g, &sizes, seed).expect("fixed graph with positive domain sizes")
}

/// Fusion SCM in which every CPT is uniform.
pub fn uniform_fusion_scm(domain_size: usize) -> DiscreteScm {
    let g = dag();
    let domains: BTreeMap<NodeId, Vec<String>> = g
        .nodes()
        .iter()
        .map(|n| (n.clone(), (0..domain_size).map(|v| v.to_string()).collect()))
        .collect();
    let mut cpts = BTreeMap::new();
    for (i, n) in g.nodes().iter().enumerate() {
        let rows: usize = g
            .parent_idxs(i)
            .iter()
            .map(|&p| domains[&g.nodes()[p]].len())
            .product();
        let card = domains[n].len();
        cpts.insert(n.clone(), vec![1.0 / card as f64; rows * card]);
    }
    DiscreteScm::new(g, domains, cpts).expect("uniform rows are normalized")
}

/// Deterministic copy chain on the fusion graph over binary domains:
/// `D_P = K_P`, `D_A = K_A`, `Z = D_P xor D_A`, `Y = Z`, with uniform priors
/// on the knowledge roots. Useful as an exactly solvable test case.
pub fn copy_chain_scm() -> DiscreteScm {
    let g = dag();
    let domains: BTreeMap<NodeId, Vec<String>> = g
        .nodes()
        .iter()
        .map(|n| (n.clone(), vec!["0".to_string(), "1".to_string()]))
        .collect();
    let copy = vec![1.0, 0.0, 0.0, 1.0];
    let mut cpts: BTreeMap<NodeId, Vec<f64>> = BTreeMap::new();
    cpts.insert(node(K_P), vec![0.5, 0.5]);
    cpts.insert(node(K_A), vec![0.5, 0.5]);
    cpts.insert(node(D_P), copy.clone());
    cpts.insert(node(D_A), copy);
    // Parents of Z in name order: D_A, D_P. Z = xor.
    cpts.insert(
        node(Z),
        vec![
            1.0, 0.0, // D_A=0, D_P=0
            0.0, 1.0, // D_A=0, D_P=1
            0.0, 1.0, // D_A=1, D_P=0
            1.0, 0.0, // D_A=1, D_P=1
        ],
    );
    // Parents of Y in name order: K_A, K_P, Z. Y copies Z.
    let mut y_rows = Vec::new();
    for _ka in 0..2 {
        for _kp in 0..2 {
            for z in 0..2 {
                if z == 0 {
                    y_rows.extend([1.0, 0.0]);
                } else {
                    y_rows.extend([0.0, 1.0]);
                }
            }
        }
    }
    cpts.insert(node(Y), y_rows);
    DiscreteScm::new(g, domains, cpts).expect("hand-built deterministic SCM")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_rejects_modified_graphs() {
        assert!(matches(&dag()));
        let mut edges = dag().edges();
        edges.push((node(K_P), node(Z)));
        let extra = Dag::new(dag().nodes().to_vec(), edges, dag().observed_set()).unwrap();
        assert!(!matches(&extra));
    }

    #[test]
    fn copy_chain_interventional_is_deterministic() {
        let scm = copy_chain_scm();
        // do(D_P = 1) makes Z = 1 xor D_A, and Y copies Z.
        let t = scm.interventional(&node(D_P), "1", &node(Y)).unwrap();
        assert!((t.values()[0] - 0.5).abs() < 1e-15);
        assert!((t.values()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn random_fusion_scm_is_seed_deterministic() {
        let a = random_fusion_scm(2, 9);
        let b = random_fusion_scm(2, 9);
        assert_eq!(a, b);
        let c = random_fusion_scm(2, 10);
        assert_ne!(a, c);
    }

    #[test]
    fn random_rows_are_normalized() {
        let scm = random_fusion_scm(3, 4);
        for n in scm.dag().nodes() {
            let card = scm.domain(n).unwrap().len();
            let values = scm.cpt(n).unwrap().values().to_vec();
            for row in values.chunks(card) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
    }
}
