//! Every adjustment evaluator against the mutilated-graph interventional
//! oracle, on its canonical topology and on the bimodal fusion SCM.

use std::collections::{BTreeMap, BTreeSet};

use causal::fusion;
use causal::graph::Dag;
use causal::scm::{
    backdoor_adjust, backdoor_adjust_unchecked, beta_frontdoor_adjust, frontdoor_adjust,
    random_scm, DiscreteScm,
};
use causal::{node, NodeId, ScmError};

const TOL: f64 = 1e-10;

fn set(names: &[&str]) -> BTreeSet<NodeId> {
    names.iter().map(|n| node(n)).collect()
}

fn sizes(dag: &Dag, k: usize) -> BTreeMap<NodeId, usize> {
    dag.nodes().iter().map(|n| (n.clone(), k)).collect()
}

/// Confounded treatment: Z -> X, Z -> Y, X -> Y, everything observed.
fn fork_graph() -> Dag {
    Dag::new(
        vec![node("X"), node("Y"), node("Z")],
        vec![
            (node("Z"), node("X")),
            (node("Z"), node("Y")),
            (node("X"), node("Y")),
        ],
        set(&["X", "Y", "Z"]),
    )
    .unwrap()
}

/// Hidden confounder with an observed mediator: U -> X -> Z -> Y, U -> Y.
fn frontdoor_graph() -> Dag {
    Dag::new(
        vec![node("U"), node("X"), node("Y"), node("Z")],
        vec![
            (node("U"), node("X")),
            (node("U"), node("Y")),
            (node("X"), node("Z")),
            (node("Z"), node("Y")),
        ],
        set(&["X", "Y", "Z"]),
    )
    .unwrap()
}

#[test]
fn backdoor_matches_oracle_on_fork() {
    let g = fork_graph();
    for seed in 0..120u64 {
        let k = 2 + (seed % 2) as usize;
        let scm = random_scm(&g, &sizes(&g, k), seed).unwrap();
        for x_val in scm.domain(&node("X")).unwrap().to_vec() {
            let adjusted = backdoor_adjust(&scm, &node("X"), &x_val, &node("Y"), &set(&["Z"])).unwrap();
            let oracle = scm.interventional(&node("X"), &x_val, &node("Y")).unwrap();
            assert!(adjusted.max_abs_diff(&oracle).unwrap() <= TOL, "seed {seed}");
            assert!(adjusted.is_normalized(1e-9));
        }
    }
}

#[test]
fn backdoor_with_empty_set_is_plain_conditional() {
    // X -> Y with no back-door path.
    let g = Dag::new(
        vec![node("X"), node("Y")],
        vec![(node("X"), node("Y"))],
        set(&["X", "Y"]),
    )
    .unwrap();
    let scm = random_scm(&g, &sizes(&g, 2), 5).unwrap();
    let joint = scm.joint().unwrap();
    for x_val in scm.domain(&node("X")).unwrap().to_vec() {
        let adjusted = backdoor_adjust(&scm, &node("X"), &x_val, &node("Y"), &set(&[])).unwrap();
        let given = BTreeMap::from([(node("X"), x_val.clone())]);
        let cond = joint.conditional(&BTreeSet::from([node("Y")]), &given).unwrap();
        assert!(adjusted.max_abs_diff(&cond).unwrap() <= TOL);
    }
}

#[test]
fn backdoor_refuses_criterion_violations() {
    let g = fork_graph();
    let scm = random_scm(&g, &sizes(&g, 2), 11).unwrap();
    let err = backdoor_adjust(&scm, &node("X"), "0", &node("Y"), &set(&[])).unwrap_err();
    assert!(matches!(err, ScmError::CriterionViolated { condition: 2, .. }));
    // The raw sum is still available when forced.
    assert!(backdoor_adjust_unchecked(&scm, &node("X"), "0", &node("Y"), &set(&[])).is_ok());
}

#[test]
fn frontdoor_matches_oracle_on_canonical_graph() {
    let g = frontdoor_graph();
    for seed in 0..120u64 {
        let k = 2 + (seed % 2) as usize;
        let scm = random_scm(&g, &sizes(&g, k), 300 + seed).unwrap();
        for x_val in scm.domain(&node("X")).unwrap().to_vec() {
            let adjusted = frontdoor_adjust(&scm, &node("X"), &x_val, &node("Y"), &set(&["Z"])).unwrap();
            let oracle = scm.interventional(&node("X"), &x_val, &node("Y")).unwrap();
            assert!(adjusted.max_abs_diff(&oracle).unwrap() <= TOL, "seed {seed}");
            assert!(adjusted.is_normalized(1e-9));
        }
    }
}

#[test]
fn frontdoor_with_deterministic_mediator_reduces_to_conditioning() {
    // X -> Z -> Y with Z a copy of X and a point-mass prior on X: the
    // adjustment collapses to P(Y | x) at the supported value.
    let g = Dag::new(
        vec![node("X"), node("Y"), node("Z")],
        vec![(node("X"), node("Z")), (node("Z"), node("Y"))],
        set(&["X", "Y", "Z"]),
    )
    .unwrap();
    let domains: BTreeMap<NodeId, Vec<String>> = g
        .nodes()
        .iter()
        .map(|n| (n.clone(), vec!["0".into(), "1".into()]))
        .collect();
    let cpts = BTreeMap::from([
        (node("X"), vec![0.0, 1.0]),
        (node("Z"), vec![1.0, 0.0, 0.0, 1.0]),
        (node("Y"), vec![0.8, 0.2, 0.3, 0.7]),
    ]);
    let scm = DiscreteScm::new(g, domains, cpts).unwrap();
    let adjusted = frontdoor_adjust(&scm, &node("X"), "1", &node("Y"), &set(&["Z"])).unwrap();
    let joint = scm.joint().unwrap();
    let cond = joint
        .conditional(
            &BTreeSet::from([node("Y")]),
            &BTreeMap::from([(node("X"), "1".to_string())]),
        )
        .unwrap();
    assert!(adjusted.max_abs_diff(&cond).unwrap() <= TOL);
    let oracle = scm.interventional(&node("X"), "1", &node("Y")).unwrap();
    assert!(adjusted.max_abs_diff(&oracle).unwrap() <= TOL);
}

#[test]
fn frontdoor_refuses_fusion_graph() {
    let scm = fusion::random_fusion_scm(2, 1);
    let err =
        frontdoor_adjust(&scm, &node(fusion::D_P), "0", &node(fusion::Y), &set(&[fusion::Z]))
            .unwrap_err();
    assert!(matches!(err, ScmError::CriterionViolated { condition: 3, .. }));
}

#[test]
fn beta_adjustment_matches_oracle_on_fusion_scms() {
    for seed in 0..60u64 {
        let k = 2 + (seed % 2) as usize;
        let scm = fusion::random_fusion_scm(k, 500 + seed);
        for dp_val in scm.domain(&node(fusion::D_P)).unwrap().to_vec() {
            let adjusted = beta_frontdoor_adjust(
                &scm,
                &node(fusion::D_P),
                &dp_val,
                &node(fusion::Y),
                &set(&[fusion::Z]),
                &set(&[fusion::D_A]),
            )
            .unwrap();
            let oracle = scm.interventional(&node(fusion::D_P), &dp_val, &node(fusion::Y)).unwrap();
            assert!(
                adjusted.max_abs_diff(&oracle).unwrap() <= TOL,
                "seed {seed}, value {dp_val}"
            );
            assert!(adjusted.is_normalized(1e-9));
        }
    }
}

#[test]
fn beta_adjustment_on_deterministic_copy_chain() {
    // Z copies D_P, Y copies Z, the auxiliary feature is an independent
    // dummy, and the predominant knowledge is pinned so the observational
    // support covers the intervened world.
    let g = fusion::dag();
    let domains: BTreeMap<NodeId, Vec<String>> = g
        .nodes()
        .iter()
        .map(|n| (n.clone(), vec!["0".into(), "1".into()]))
        .collect();
    let copy = vec![1.0, 0.0, 0.0, 1.0];
    let mut z_rows = Vec::new();
    for _da in 0..2 {
        for dp in 0..2 {
            z_rows.extend(if dp == 0 { [1.0, 0.0] } else { [0.0, 1.0] });
        }
    }
    let mut y_rows = Vec::new();
    for _ka in 0..2 {
        for _kp in 0..2 {
            for z in 0..2 {
                y_rows.extend(if z == 0 { [1.0, 0.0] } else { [0.0, 1.0] });
            }
        }
    }
    let cpts = BTreeMap::from([
        (node(fusion::K_P), vec![0.0, 1.0]),
        (node(fusion::K_A), vec![0.4, 0.6]),
        (node(fusion::D_P), copy.clone()),
        (node(fusion::D_A), copy),
        (node(fusion::Z), z_rows),
        (node(fusion::Y), y_rows),
    ]);
    let scm = DiscreteScm::new(g, domains, cpts).unwrap();
    let adjusted = beta_frontdoor_adjust(
        &scm,
        &node(fusion::D_P),
        "1",
        &node(fusion::Y),
        &set(&[fusion::Z]),
        &set(&[fusion::D_A]),
    )
    .unwrap();
    assert!((adjusted.values()[1] - 1.0).abs() <= TOL);
    assert!(adjusted.values()[0].abs() <= TOL);
}

#[test]
fn beta_adjustment_without_aux_label_edge_matches_frontdoor() {
    // Removing the auxiliary knowledge's direct effect on the label turns
    // the fusion graph into a classical front-door instance.
    let mut edges = fusion::dag().edges();
    edges.retain(|(a, b)| !(a == &node(fusion::K_A) && b == &node(fusion::Y)));
    let g = Dag::new(fusion::dag().nodes().to_vec(), edges, fusion::dag().observed_set()).unwrap();
    for seed in 0..40u64 {
        let scm = random_scm(&g, &sizes(&g, 2), 800 + seed).unwrap();
        for dp_val in scm.domain(&node(fusion::D_P)).unwrap().to_vec() {
            let beta = beta_frontdoor_adjust(
                &scm,
                &node(fusion::D_P),
                &dp_val,
                &node(fusion::Y),
                &set(&[fusion::Z]),
                &set(&[fusion::D_A]),
            )
            .unwrap();
            let front = frontdoor_adjust(
                &scm,
                &node(fusion::D_P),
                &dp_val,
                &node(fusion::Y),
                &set(&[fusion::Z]),
            )
            .unwrap();
            assert!(beta.max_abs_diff(&front).unwrap() <= TOL, "seed {seed}");
        }
    }
}

#[test]
fn beta_adjustment_with_constant_aux_recovers_frontdoor() {
    // A singleton-domain observed parent of the mediator carries no
    // information, so the relaxed sum collapses to the classical one.
    let g = Dag::new(
        vec![node("C"), node("U"), node("X"), node("Y"), node("Z")],
        vec![
            (node("U"), node("X")),
            (node("U"), node("Y")),
            (node("X"), node("Z")),
            (node("Z"), node("Y")),
            (node("C"), node("Z")),
        ],
        set(&["C", "X", "Y", "Z"]),
    )
    .unwrap();
    for seed in 0..40u64 {
        let mut k = sizes(&g, 2);
        k.insert(node("C"), 1);
        let scm = random_scm(&g, &k, 900 + seed).unwrap();
        for x_val in scm.domain(&node("X")).unwrap().to_vec() {
            let beta = beta_frontdoor_adjust(
                &scm,
                &node("X"),
                &x_val,
                &node("Y"),
                &set(&["Z"]),
                &set(&["C"]),
            )
            .unwrap();
            let front = frontdoor_adjust(&scm, &node("X"), &x_val, &node("Y"), &set(&["Z"])).unwrap();
            assert!(beta.max_abs_diff(&front).unwrap() <= TOL, "seed {seed}");
            let oracle = scm.interventional(&node("X"), &x_val, &node("Y")).unwrap();
            assert!(beta.max_abs_diff(&oracle).unwrap() <= TOL, "seed {seed}");
        }
    }
}

#[test]
fn intervention_mechanics() {
    let scm = fusion::random_fusion_scm(2, 7);
    // Intervening on a root changes only that node's CPT.
    let cut = scm.intervene(&BTreeMap::from([(node(fusion::K_P), "0".to_string())])).unwrap();
    assert_eq!(cut.dag().edges(), scm.dag().edges());
    assert_eq!(cut.cpt(&node(fusion::K_P)).unwrap().values(), &[1.0, 0.0]);
    assert_eq!(
        cut.cpt(&node(fusion::Z)).unwrap().values(),
        scm.cpt(&node(fusion::Z)).unwrap().values()
    );

    // do(D_P) removes the knowledge-to-feature edge.
    let cut = scm.intervene(&BTreeMap::from([(node(fusion::D_P), "1".to_string())])).unwrap();
    assert!(!cut.dag().has_edge(&node(fusion::K_P), &node(fusion::D_P)).unwrap());

    // Re-intervening overwrites: the last assignment wins.
    let twice = cut.intervene(&BTreeMap::from([(node(fusion::D_P), "0".to_string())])).unwrap();
    let direct = scm.intervene(&BTreeMap::from([(node(fusion::D_P), "0".to_string())])).unwrap();
    assert_eq!(twice, direct);

    // Out-of-domain values are rejected.
    let err = scm.intervene(&BTreeMap::from([(node(fusion::D_P), "9".to_string())])).unwrap_err();
    assert!(matches!(err, ScmError::ValueOutOfDomain { .. }));
}

#[test]
fn interventional_on_non_ancestor_is_the_marginal() {
    let g = Dag::new(
        vec![node("A"), node("B")],
        vec![],
        set(&["A", "B"]),
    )
    .unwrap();
    let scm = random_scm(&g, &sizes(&g, 3), 13).unwrap();
    let oracle = scm.interventional(&node("A"), "0", &node("B")).unwrap();
    let marginal = scm.joint().unwrap().marginal(&BTreeSet::from([node("B")])).unwrap();
    assert!(oracle.max_abs_diff(&marginal).unwrap() <= TOL);
}

#[test]
fn deterministic_chain_interventional_is_point_mass() {
    let g = Dag::new(
        vec![node("D"), node("Y"), node("Z")],
        vec![(node("D"), node("Z")), (node("Z"), node("Y"))],
        set(&["D", "Y", "Z"]),
    )
    .unwrap();
    let domains: BTreeMap<NodeId, Vec<String>> = g
        .nodes()
        .iter()
        .map(|n| (n.clone(), vec!["0".into(), "1".into()]))
        .collect();
    let copy = vec![1.0, 0.0, 0.0, 1.0];
    let cpts = BTreeMap::from([
        (node("D"), vec![0.5, 0.5]),
        (node("Z"), copy.clone()),
        (node("Y"), copy),
    ]);
    let scm = DiscreteScm::new(g, domains, cpts).unwrap();
    let t = scm.interventional(&node("D"), "1", &node("Y")).unwrap();
    assert_eq!(t.values(), &[0.0, 1.0]);
}

#[test]
fn evaluators_reject_unobserved_adjustment_variables() {
    let scm = fusion::random_fusion_scm(2, 21);
    let err = backdoor_adjust(
        &scm,
        &node(fusion::D_P),
        "0",
        &node(fusion::Y),
        &set(&[fusion::K_P]),
    )
    .unwrap_err();
    assert!(matches!(err, ScmError::UnobservedAdjustment(_)));
}
