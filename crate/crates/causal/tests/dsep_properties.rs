//! Soundness of the reachability d-separation implementation: agreement with
//! the path-enumeration oracle on random DAGs, and numerical conditional
//! independence of every d-separation on random SCM parameterizations.

use std::collections::{BTreeMap, BTreeSet};

use causal::graph::{random_dag, Dag};
use causal::{d_separated, d_separated_by_enumeration, node, random_scm, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_disjoint_triple(
    dag: &Dag,
    rng: &mut ChaCha8Rng,
) -> (BTreeSet<NodeId>, BTreeSet<NodeId>, BTreeSet<NodeId>) {
    let names = dag.nodes().to_vec();
    loop {
        let mut x = BTreeSet::new();
        let mut y = BTreeSet::new();
        let mut z = BTreeSet::new();
        for n in &names {
            match rng.random_range(0..4u8) {
                0 => {
                    x.insert(n.clone());
                }
                1 => {
                    y.insert(n.clone());
                }
                2 => {
                    z.insert(n.clone());
                }
                _ => {}
            }
        }
        if !x.is_empty() && !y.is_empty() {
            return (x, y, z);
        }
    }
}

#[test]
fn reachability_agrees_with_enumeration_on_random_dags() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd5e9);
    let mut separated = 0usize;
    for seed in 0..500u64 {
        let n = 2 + (seed % 5) as usize; // 2..=6 nodes
        let dag = random_dag(n, 0.4, seed);
        for _ in 0..4 {
            let (x, y, z) = random_disjoint_triple(&dag, &mut rng);
            let fast = d_separated(&dag, &x, &y, &z).unwrap();
            let slow = d_separated_by_enumeration(&dag, &x, &y, &z).unwrap();
            assert_eq!(fast, slow, "disagreement on seed {seed} with x={x:?} y={y:?} z={z:?}");
            separated += fast as usize;
        }
    }
    // Both outcomes must actually occur for the agreement to mean anything.
    assert!(separated > 100);
    assert!(separated < 1900);
}

/// Total-variation distance between the joint conditional P(x, y | z) and the
/// product of its marginals, maximized over positive-mass z-assignments.
fn max_conditional_dependence(
    scm: &causal::DiscreteScm,
    x: &NodeId,
    y: &NodeId,
    z: &BTreeSet<NodeId>,
) -> f64 {
    let joint = scm.joint().unwrap();
    let z_vars: Vec<NodeId> = z.iter().cloned().collect();
    let cards: Vec<usize> = z_vars
        .iter()
        .map(|n| scm.domain(n).unwrap().len())
        .collect();
    let mut worst: f64 = 0.0;
    for assign in causal::table::index_product(&cards) {
        let given: BTreeMap<NodeId, String> = z_vars
            .iter()
            .zip(&assign)
            .map(|(n, &i)| (n.clone(), scm.domain(n).unwrap()[i].clone()))
            .collect();
        if joint.mass(&given).unwrap() == 0.0 {
            continue;
        }
        let both = joint
            .conditional(&BTreeSet::from([x.clone(), y.clone()]), &given)
            .unwrap();
        let px = both.marginal(&BTreeSet::from([x.clone()])).unwrap();
        let py = both.marginal(&BTreeSet::from([y.clone()])).unwrap();
        let mut tv = 0.0;
        for idxs in both.assignments() {
            // `both` orders variables lexicographically within the joint.
            let (xi, yi) = if both.variables()[0] == *x {
                (idxs[0], idxs[1])
            } else {
                (idxs[1], idxs[0])
            };
            tv += (both.at(&idxs) - px.values()[xi] * py.values()[yi]).abs();
        }
        worst = worst.max(0.5 * tv);
    }
    worst
}

#[test]
fn d_separation_implies_numerical_conditional_independence() {
    let mut checked = 0usize;
    for seed in 0..100u64 {
        let n = 3 + (seed % 3) as usize; // 3..=5 nodes
        let dag = random_dag(n, 0.45, 7_000 + seed);
        let sizes: BTreeMap<NodeId, usize> = dag
            .nodes()
            .iter()
            .map(|nd| (nd.clone(), 2 + (seed as usize % 2)))
            .collect();
        let scm = random_scm(&dag, &sizes, 9_000 + seed).unwrap();
        let names = dag.nodes().to_vec();
        for x in &names {
            for y in &names {
                if x >= y {
                    continue;
                }
                let others: Vec<NodeId> = names
                    .iter()
                    .filter(|n| *n != x && *n != y)
                    .cloned()
                    .collect();
                let mut z_sets: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new()];
                for a in &others {
                    z_sets.push(BTreeSet::from([a.clone()]));
                    for b in &others {
                        if a < b {
                            z_sets.push(BTreeSet::from([a.clone(), b.clone()]));
                        }
                    }
                }
                for z in z_sets {
                    let xs = BTreeSet::from([x.clone()]);
                    let ys = BTreeSet::from([y.clone()]);
                    if d_separated(&dag, &xs, &ys, &z).unwrap() {
                        let dep = max_conditional_dependence(&scm, x, y, &z);
                        assert!(
                            dep <= 1e-9,
                            "seed {seed}: d-separated pair ({x}, {y} | {z:?}) has TV {dep}"
                        );
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked > 200, "only {checked} separations exercised");
}

#[test]
fn fusion_dsep_examples_match_oracle() {
    let dag = causal::fusion::dag();
    let cases: &[(&[&str], &[&str], &[&str])] = &[
        (&["D_P"], &["Y"], &["Z", "K_P"]),
        (&["D_P"], &["Y"], &["K_P", "K_A"]),
        (&["D_A"], &["D_P"], &[]),
        (&["D_A"], &["D_P"], &["Z"]),
        (&["K_P"], &["K_A"], &["Y"]),
    ];
    for (x, y, z) in cases {
        let xs: BTreeSet<NodeId> = x.iter().map(|n| node(n)).collect();
        let ys: BTreeSet<NodeId> = y.iter().map(|n| node(n)).collect();
        let zs: BTreeSet<NodeId> = z.iter().map(|n| node(n)).collect();
        assert_eq!(
            d_separated(&dag, &xs, &ys, &zs).unwrap(),
            d_separated_by_enumeration(&dag, &xs, &ys, &zs).unwrap(),
        );
    }
}
