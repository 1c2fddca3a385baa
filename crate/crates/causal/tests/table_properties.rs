//! Joint construction against independent enumeration, plus property tests
//! for the table algebra.

use std::collections::{BTreeMap, BTreeSet};

use causal::graph::random_dag;
use causal::table::index_product;
use causal::{fusion, node, random_scm, DiscreteScm, NodeId, ProbTable};
use proptest::prelude::*;

#[test]
fn single_binary_node_joint() {
    let g = causal::Dag::new(vec![node("A")], vec![], BTreeSet::from([node("A")])).unwrap();
    let scm = DiscreteScm::new(
        g,
        BTreeMap::from([(node("A"), vec!["0".into(), "1".into()])]),
        BTreeMap::from([(node("A"), vec![0.3, 0.7])]),
    )
    .unwrap();
    assert_eq!(scm.joint().unwrap().values(), &[0.3, 0.7]);
}

#[test]
fn independent_fair_coins_joint() {
    let g = causal::Dag::new(
        vec![node("A"), node("B")],
        vec![],
        BTreeSet::from([node("A"), node("B")]),
    )
    .unwrap();
    let domains: BTreeMap<NodeId, Vec<String>> = [node("A"), node("B")]
        .into_iter()
        .map(|n| (n, vec!["0".into(), "1".into()]))
        .collect();
    let cpts = BTreeMap::from([(node("A"), vec![0.5, 0.5]), (node("B"), vec![0.5, 0.5])]);
    let scm = DiscreteScm::new(g, domains, cpts).unwrap();
    assert_eq!(scm.joint().unwrap().values(), &[0.25; 4]);
}

/// Straight-line enumeration of the fusion joint, independent of the table
/// machinery: walks the six factors by hand for every assignment.
fn enumerate_fusion_joint(scm: &DiscreteScm) -> Vec<f64> {
    let names = [fusion::D_A, fusion::D_P, fusion::K_A, fusion::K_P, fusion::Y, fusion::Z];
    let cards: Vec<usize> = names
        .iter()
        .map(|n| scm.domain(&node(n)).unwrap().len())
        .collect();
    let cpt = |n: &str| scm.cpt(&node(n)).unwrap().values().to_vec();
    let (kp_c, ka_c, dp_c, da_c, z_c, y_c) = (cards[3], cards[2], cards[1], cards[0], cards[5], cards[4]);
    let (t_kp, t_ka, t_dp, t_da, t_z, t_y) = (
        cpt(fusion::K_P),
        cpt(fusion::K_A),
        cpt(fusion::D_P),
        cpt(fusion::D_A),
        cpt(fusion::Z),
        cpt(fusion::Y),
    );
    let mut out = Vec::new();
    for a in index_product(&cards) {
        let (da, dp, ka, kp, y, z) = (a[0], a[1], a[2], a[3], a[4], a[5]);
        // CPT rows are indexed by parents in name order:
        // D_P | K_P; D_A | K_A; Z | D_A, D_P; Y | K_A, K_P, Z.
        let p = t_kp[kp]
            * t_ka[ka]
            * t_dp[kp * dp_c + dp]
            * t_da[ka * da_c + da]
            * t_z[(da * dp_c + dp) * z_c + z]
            * t_y[((ka * kp_c + kp) * z_c + z) * y_c + y];
        out.push(p);
    }
    out
}

#[test]
fn fusion_joint_matches_independent_enumeration() {
    for seed in [0u64, 5, 23] {
        for k in [2usize, 3] {
            let scm = fusion::random_fusion_scm(k, seed);
            let joint = scm.joint().unwrap();
            let expected = enumerate_fusion_joint(&scm);
            assert_eq!(joint.values().len(), expected.len());
            for (a, b) in joint.values().iter().zip(&expected) {
                assert!((a - b).abs() <= 1e-15);
            }
            let marg = joint.marginal(&BTreeSet::from([node(fusion::Y)])).unwrap();
            // Marginal over Y against hand enumeration.
            let y_card = scm.domain(&node(fusion::Y)).unwrap().len();
            let mut by_y = vec![0.0; y_card];
            let cards: Vec<usize> = joint.domains().iter().map(Vec::len).collect();
            for (cell, a) in joint.values().iter().zip(index_product(&cards)) {
                by_y[a[4]] += cell;
            }
            for (a, b) in marg.values().iter().zip(&by_y) {
                assert!((a - b).abs() <= 1e-15);
            }
        }
    }
}

#[test]
fn joint_rejects_oversized_domains() {
    let g = random_dag(6, 0.3, 1);
    let sizes: BTreeMap<NodeId, usize> = g.nodes().iter().map(|n| (n.clone(), 3)).collect();
    let scm = random_scm(&g, &sizes, 2).unwrap();
    assert!(matches!(
        scm.joint_with_cap(100),
        Err(causal::ScmError::DomainTooLarge { .. })
    ));
}

fn arb_table() -> impl Strategy<Value = ProbTable> {
    // Up to three variables with domains of size 2..=3, random positive cells.
    (1usize..=3, proptest::collection::vec(2usize..=3, 3))
        .prop_flat_map(|(nvars, cards)| {
            let cards: Vec<usize> = cards.into_iter().take(nvars).collect();
            let cells: usize = cards.iter().product();
            proptest::collection::vec(0.0f64..1.0, cells).prop_map(move |mut raw| {
                let total: f64 = raw.iter().sum();
                if total > 0.0 {
                    for v in &mut raw {
                        *v /= total;
                    }
                } else {
                    raw[0] = 1.0;
                }
                let vars: Vec<NodeId> = (0..cards.len()).map(|i| node(&format!("V{i}"))).collect();
                let domains: Vec<Vec<String>> = cards
                    .iter()
                    .map(|&c| (0..c).map(|v| v.to_string()).collect())
                    .collect();
                ProbTable::new(vars, domains, raw).unwrap()
            })
        })
}

proptest! {
    #[test]
    fn marginal_preserves_total_mass(t in arb_table()) {
        for keep_first in [true, false] {
            let keep: BTreeSet<NodeId> = t
                .variables()
                .iter()
                .enumerate()
                .filter(|(i, _)| (*i == 0) == keep_first)
                .map(|(_, n)| n.clone())
                .collect();
            let m = t.marginal(&keep).unwrap();
            prop_assert!((m.total() - t.total()).abs() <= 1e-12);
        }
    }

    #[test]
    fn conditional_is_normalized_or_zero(t in arb_table()) {
        let var = t.variables()[0].clone();
        let rest: BTreeSet<NodeId> = t.variables().iter().skip(1).cloned().collect();
        if rest.is_empty() {
            return Ok(());
        }
        for label in t.domains()[0].clone() {
            let given = BTreeMap::from([(var.clone(), label)]);
            let c = t.conditional(&rest, &given).unwrap();
            prop_assert!(c.is_zero() || c.is_normalized(1e-9));
        }
    }
}
