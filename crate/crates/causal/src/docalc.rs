//! Graph-surgery operators, the three do-calculus rules, and numerical
//! certification of the two derivations of the relaxed front-door adjustment
//! on the bimodal fusion SCM.
//!
//! The certifiers evaluate both sides of every labeled derivation step by
//! explicit summation over all domains — including the unobserved knowledge
//! variables. That is deliberate: these checks certify the algebra, not
//! identifiability; the adjustment evaluators in [`crate::scm`] are the ones
//! held to the observational-only discipline.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{GraphError, ScmError};
use crate::fusion;
use crate::graph::{d_separated, node, Dag, NodeId};
use crate::scm::DiscreteScm;
use crate::table::{index_product, ProbTable};

/// Default tolerance for derivation-step and adjustment comparisons.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Which edges to delete: incoming edges of `bar` nodes, outgoing edges of
/// `underbar` nodes.
#[derive(Clone, Debug, Default)]
pub struct SurgerySpec {
    pub bar: BTreeSet<NodeId>,
    pub underbar: BTreeSet<NodeId>,
}

impl SurgerySpec {
    pub fn bar(nodes: &[&NodeId]) -> Self {
        SurgerySpec {
            bar: nodes.iter().map(|&n| n.clone()).collect(),
            underbar: BTreeSet::new(),
        }
    }

    pub fn underbar(nodes: &[&NodeId]) -> Self {
        SurgerySpec {
            bar: BTreeSet::new(),
            underbar: nodes.iter().map(|&n| n.clone()).collect(),
        }
    }

    pub fn bar_underbar(bar: &[&NodeId], underbar: &[&NodeId]) -> Self {
        SurgerySpec {
            bar: bar.iter().map(|&n| n.clone()).collect(),
            underbar: underbar.iter().map(|&n| n.clone()).collect(),
        }
    }
}

/// Mutilated graph obtained by deleting the edges named in `spec`.
pub fn surgery(g: &Dag, spec: &SurgerySpec) -> Result<Dag, GraphError> {
    let mut remove = BTreeSet::new();
    for n in &spec.bar {
        let i = g.idx(n)?;
        for &p in g.parent_idxs(i) {
            remove.insert((p, i));
        }
    }
    for n in &spec.underbar {
        let i = g.idx(n)?;
        for &c in g.child_idxs(i) {
            remove.insert((i, c));
        }
    }
    Ok(g.without_edges(&remove))
}

/// The three inference rules for interventional distributions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// Insertion/deletion of observations:
    /// (Y ⊥ Z | X, W) in G with incoming edges of X removed.
    One,
    /// Action/observation exchange:
    /// (Y ⊥ Z | X, W) in G with incoming edges of X and outgoing edges of Z
    /// removed.
    Two,
    /// Insertion/deletion of actions:
    /// (Y ⊥ Z | X, W) in G with incoming edges of X and of Z(W) removed,
    /// where Z(W) holds the Z-nodes that are not ancestors of W once X's
    /// incoming edges are gone.
    Three,
}

/// Whether `rule` licenses its rewrite for the given (x, y, z, w) sets, by
/// checking the rule's d-separation premise in the mutilated graph.
pub fn rule_applicable(
    g: &Dag,
    rule: Rule,
    x: &BTreeSet<NodeId>,
    y: &BTreeSet<NodeId>,
    z: &BTreeSet<NodeId>,
    w: &BTreeSet<NodeId>,
) -> Result<bool, GraphError> {
    let mut cond: BTreeSet<NodeId> = x.clone();
    cond.extend(w.iter().cloned());
    let world = match rule {
        Rule::One => surgery(g, &SurgerySpec {
            bar: x.clone(),
            underbar: BTreeSet::new(),
        })?,
        Rule::Two => surgery(g, &SurgerySpec {
            bar: x.clone(),
            underbar: z.clone(),
        })?,
        Rule::Three => {
            let no_x_in = surgery(g, &SurgerySpec {
                bar: x.clone(),
                underbar: BTreeSet::new(),
            })?;
            let mut z_of_w = BTreeSet::new();
            for zn in z {
                let mut is_ancestor = false;
                for wn in w {
                    if no_x_in.ancestors(wn)?.contains(zn) {
                        is_ancestor = true;
                        break;
                    }
                }
                if !is_ancestor {
                    z_of_w.insert(zn.clone());
                }
            }
            let mut bar = x.clone();
            bar.extend(z_of_w);
            surgery(g, &SurgerySpec {
                bar,
                underbar: BTreeSet::new(),
            })?
        }
    };
    d_separated(&world, y, z, &cond)
}

/// Record of one verified derivation step: both sides evaluated as tables
/// and compared entrywise.
#[derive(Clone, Debug, Serialize)]
pub struct StepReport {
    pub step_label: String,
    pub lhs: ProbTable,
    pub rhs: ProbTable,
    pub max_abs_diff: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl StepReport {
    fn new(label: &str, lhs: ProbTable, rhs: ProbTable, tol: f64) -> Result<Self, ScmError> {
        let max_abs_diff = lhs.max_abs_diff(&rhs)?;
        Ok(StepReport {
            step_label: label.to_owned(),
            lhs,
            rhs,
            max_abs_diff,
            tolerance: tol,
            passed: max_abs_diff <= tol,
        })
    }
}

fn names(list: &[&str]) -> Vec<NodeId> {
    list.iter().map(|n| node(n)).collect()
}

/// Conveniences bound to the fusion SCM: the full joint, the mutilated
/// joints, and every conditional table the derivation steps read.
struct FusionTables {
    cards: BTreeMap<&'static str, usize>,
    domains: BTreeMap<&'static str, Vec<String>>,
    // observational conditionals (from the full joint, unobserved included)
    p_kp: ProbTable,
    p_ka: ProbTable,
    p_dp: ProbTable,
    p_da: ProbTable,
    p_da_given_ka: ProbTable,     // [K_A, D_A]
    p_dp_given_kp: ProbTable,     // [K_P, D_P]
    p_kp_given_dp: ProbTable,     // [D_P, K_P]
    p_y_given_kkz: ProbTable,     // [K_P, K_A, Z, Y]
    p_y_given_kkzd: ProbTable,    // [K_P, K_A, Z, D_P, Y]
    p_kp_given_dzk: ProbTable,    // [D_P, Z, K_A, K_P]
    p_y_given_kzd: ProbTable,     // [K_A, Z, D_P, Y]
    p_ka_given_da: ProbTable,     // [D_A, K_A]
    p_y_given_kzdd: ProbTable,    // [K_A, Z, D_P, D_A, Y]
    p_ka_given_dzd: ProbTable,    // [D_A, Z, D_P, K_A]
    p_y_given_zdd: ProbTable,     // [Z, D_P, D_A, Y]
    p_z_given_dd: ProbTable,      // [D_P, D_A, Z]
}

impl FusionTables {
    fn build(scm: &DiscreteScm) -> Result<Self, ScmError> {
        fusion::require_topology(scm)?;
        let joint = scm.joint()?;
        let ct = |target: &[&str], given: &[&str]| -> Result<ProbTable, ScmError> {
            joint.conditional_table(&names(target), &names(given))
        };
        let mut cards = BTreeMap::new();
        let mut domains = BTreeMap::new();
        for n in [fusion::K_P, fusion::K_A, fusion::D_P, fusion::D_A, fusion::Z, fusion::Y] {
            let d = scm.domain(&node(n))?.to_vec();
            cards.insert(n, d.len());
            domains.insert(n, d);
        }
        Ok(FusionTables {
            cards,
            domains,
            p_kp: ct(&[fusion::K_P], &[])?,
            p_ka: ct(&[fusion::K_A], &[])?,
            p_dp: ct(&[fusion::D_P], &[])?,
            p_da: ct(&[fusion::D_A], &[])?,
            p_da_given_ka: ct(&[fusion::D_A], &[fusion::K_A])?,
            p_dp_given_kp: ct(&[fusion::D_P], &[fusion::K_P])?,
            p_kp_given_dp: ct(&[fusion::K_P], &[fusion::D_P])?,
            p_y_given_kkz: ct(&[fusion::Y], &[fusion::K_P, fusion::K_A, fusion::Z])?,
            p_y_given_kkzd: ct(&[fusion::Y], &[fusion::K_P, fusion::K_A, fusion::Z, fusion::D_P])?,
            p_kp_given_dzk: ct(&[fusion::K_P], &[fusion::D_P, fusion::Z, fusion::K_A])?,
            p_y_given_kzd: ct(&[fusion::Y], &[fusion::K_A, fusion::Z, fusion::D_P])?,
            p_ka_given_da: ct(&[fusion::K_A], &[fusion::D_A])?,
            p_y_given_kzdd: ct(&[fusion::Y], &[fusion::K_A, fusion::Z, fusion::D_P, fusion::D_A])?,
            p_ka_given_dzd: ct(&[fusion::K_A], &[fusion::D_A, fusion::Z, fusion::D_P])?,
            p_y_given_zdd: ct(&[fusion::Y], &[fusion::Z, fusion::D_P, fusion::D_A])?,
            p_z_given_dd: ct(&[fusion::Z], &[fusion::D_P, fusion::D_A])?,
        })
    }

    fn card(&self, n: &str) -> usize {
        self.cards[n]
    }

    /// Table over [D_P, Y] filled from an expression of (d_p, y) indices.
    fn dp_y_table(&self, f: impl Fn(usize, usize) -> f64) -> Result<ProbTable, ScmError> {
        let dp_card = self.card(fusion::D_P);
        let y_card = self.card(fusion::Y);
        let mut values = Vec::with_capacity(dp_card * y_card);
        for dp in 0..dp_card {
            for y in 0..y_card {
                values.push(f(dp, y));
            }
        }
        ProbTable::new(
            vec![node(fusion::D_P), node(fusion::Y)],
            vec![
                self.domains[fusion::D_P].clone(),
                self.domains[fusion::Y].clone(),
            ],
            values,
        )
    }

    /// The relaxed front-door sum (the last line of both derivations).
    fn adjustment_expr(&self, dp: usize, y: usize) -> f64 {
        let mut acc = 0.0;
        for z in 0..self.card(fusion::Z) {
            for da in 0..self.card(fusion::D_A) {
                for dp2 in 0..self.card(fusion::D_P) {
                    acc += self.p_y_given_zdd.at(&[z, dp2, da, y])
                        * self.p_z_given_dd.at(&[dp, da, z])
                        * self.p_dp.at(&[dp2])
                        * self.p_da.at(&[da]);
                }
            }
        }
        acc
    }
}

/// Compares the enumerated joint against the product of the six factors of
/// the fusion model's factorization, each factor recovered from the joint by
/// conditioning.
pub fn verify_joint_decomposition(scm: &DiscreteScm, tol: f64) -> Result<StepReport, ScmError> {
    let t = FusionTables::build(scm)?;
    let joint = scm.joint()?;
    // Node order in the joint is lexicographic: D_A, D_P, K_A, K_P, Y, Z.
    let cards: Vec<usize> = [fusion::D_A, fusion::D_P, fusion::K_A, fusion::K_P, fusion::Y, fusion::Z]
        .iter()
        .map(|n| t.card(n))
        .collect();
    let mut values = Vec::with_capacity(cards.iter().product());
    for a in index_product(&cards) {
        let (da, dp, ka, kp, y, z) = (a[0], a[1], a[2], a[3], a[4], a[5]);
        values.push(
            t.p_ka.at(&[ka])
                * t.p_kp.at(&[kp])
                * t.p_da_given_ka.at(&[ka, da])
                * t.p_dp_given_kp.at(&[kp, dp])
                * t.p_z_given_dd.at(&[dp, da, z])
                * t.p_y_given_kkz.at(&[kp, ka, z, y]),
        );
    }
    let product = ProbTable::new(joint.variables().to_vec(), joint.domains().to_vec(), values)?;
    StepReport::new("11", joint, product, tol)
}

/// Certifies the joint-distribution derivation of the adjustment formula:
/// the entry step (truncated factorization aggregated over the latent
/// variables) followed by the six labeled rewrite steps.
pub fn verify_decomposition_chain(
    scm: &DiscreteScm,
    tol: f64,
) -> Result<Vec<StepReport>, ScmError> {
    let t = FusionTables::build(scm)?;
    let kp_card = t.card(fusion::K_P);
    let ka_card = t.card(fusion::K_A);
    let dp_card = t.card(fusion::D_P);
    let da_card = t.card(fusion::D_A);
    let z_card = t.card(fusion::Z);

    // Entry expression: sum over Z, K_P, K_A, D_A of the truncated product.
    let e0 = t.dp_y_table(|dp, y| {
        let mut acc = 0.0;
        for z in 0..z_card {
            for kp in 0..kp_card {
                for ka in 0..ka_card {
                    for da in 0..da_card {
                        acc += t.p_y_given_kkz.at(&[kp, ka, z, y])
                            * t.p_da_given_ka.at(&[ka, da])
                            * t.p_ka.at(&[ka])
                            * t.p_kp.at(&[kp])
                            * t.p_z_given_dd.at(&[dp, da, z]);
                    }
                }
            }
        }
        acc
    })?;
    // Total probability over the cause's own values: P(K_P) expands to
    // sum over d_p' of P(K_P | d_p') P(d_p').
    let e1 = t.dp_y_table(|dp, y| {
        let mut acc = 0.0;
        for z in 0..z_card {
            for kp in 0..kp_card {
                for ka in 0..ka_card {
                    for da in 0..da_card {
                        for dp2 in 0..dp_card {
                            acc += t.p_y_given_kkz.at(&[kp, ka, z, y])
                                * t.p_kp_given_dp.at(&[dp2, kp])
                                * t.p_dp.at(&[dp2])
                                * t.p_z_given_dd.at(&[dp, da, z])
                                * t.p_da_given_ka.at(&[ka, da])
                                * t.p_ka.at(&[ka]);
                        }
                    }
                }
            }
        }
        acc
    })?;
    // Conditional independences: Y ⊥ D_P | K_P, K_A, Z and K_P ⊥ Z, K_A | D_P.
    let e2 = t.dp_y_table(|dp, y| {
        let mut acc = 0.0;
        for z in 0..z_card {
            for ka in 0..ka_card {
                for da in 0..da_card {
                    for dp2 in 0..dp_card {
                        let mut inner = 0.0;
                        for kp in 0..kp_card {
                            inner += t.p_y_given_kkzd.at(&[kp, ka, z, dp2, y])
                                * t.p_kp_given_dzk.at(&[dp2, z, ka, kp]);
                        }
                        acc += inner
                            * t.p_dp.at(&[dp2])
                            * t.p_da_given_ka.at(&[ka, da])
                            * t.p_ka.at(&[ka])
                            * t.p_z_given_dd.at(&[dp, da, z]);
                    }
                }
            }
        }
        acc
    })?;
    // Total probability over K_P given (D_P, Z, K_A).
    let e3 = t.dp_y_table(|dp, y| {
        let mut acc = 0.0;
        for z in 0..z_card {
            for ka in 0..ka_card {
                for da in 0..da_card {
                    for dp2 in 0..dp_card {
                        acc += t.p_y_given_kzd.at(&[ka, z, dp2, y])
                            * t.p_dp.at(&[dp2])
                            * t.p_da_given_ka.at(&[ka, da])
                            * t.p_ka.at(&[ka])
                            * t.p_z_given_dd.at(&[dp, da, z]);
                    }
                }
            }
        }
        acc
    })?;
    // Bayes: P(D_A | K_A) P(K_A) = P(K_A | D_A) P(D_A).
    let e4 = t.dp_y_table(|dp, y| {
        let mut acc = 0.0;
        for z in 0..z_card {
            for ka in 0..ka_card {
                for da in 0..da_card {
                    for dp2 in 0..dp_card {
                        acc += t.p_y_given_kzd.at(&[ka, z, dp2, y])
                            * t.p_dp.at(&[dp2])
                            * t.p_ka_given_da.at(&[da, ka])
                            * t.p_da.at(&[da])
                            * t.p_z_given_dd.at(&[dp, da, z]);
                    }
                }
            }
        }
        acc
    })?;
    // Conditional independences: Y ⊥ D_A | K_A, Z, D_P and K_A ⊥ Z, D_P | D_A.
    let e5 = t.dp_y_table(|dp, y| {
        let mut acc = 0.0;
        for z in 0..z_card {
            for da in 0..da_card {
                for dp2 in 0..dp_card {
                    let mut inner = 0.0;
                    for ka in 0..ka_card {
                        inner += t.p_y_given_kzdd.at(&[ka, z, dp2, da, y])
                            * t.p_ka_given_dzd.at(&[da, z, dp2, ka]);
                    }
                    acc += inner
                        * t.p_z_given_dd.at(&[dp, da, z])
                        * t.p_dp.at(&[dp2])
                        * t.p_da.at(&[da]);
                }
            }
        }
        acc
    })?;
    // Total probability over K_A given (D_P, D_A, Z): the adjustment formula.
    let e6 = t.dp_y_table(|dp, y| t.adjustment_expr(dp, y))?;

    let oracle = interventional_table(scm, &t)?;
    Ok(vec![
        StepReport::new("13", oracle, e0.clone(), tol)?,
        StepReport::new("13a", e0, e1.clone(), tol)?,
        StepReport::new("13b", e1, e2.clone(), tol)?,
        StepReport::new("13c", e2, e3.clone(), tol)?,
        StepReport::new("13d", e3, e4.clone(), tol)?,
        StepReport::new("13e", e4, e5.clone(), tol)?,
        StepReport::new("13f", e5, e6, tol)?,
    ])
}

/// P(Y | do(D_P)) from the mutilated-graph oracle, as a [D_P, Y] table.
fn interventional_table(scm: &DiscreteScm, t: &FusionTables) -> Result<ProbTable, ScmError> {
    let dp = node(fusion::D_P);
    let y = node(fusion::Y);
    let dp_domain = t.domains[fusion::D_P].clone();
    let mut values = Vec::new();
    for dp_val in &dp_domain {
        let table = scm.interventional(&dp, dp_val, &y)?;
        values.extend_from_slice(table.values());
    }
    ProbTable::new(
        vec![dp, y],
        vec![dp_domain, t.domains[fusion::Y].clone()],
        values,
    )
}

/// Certifies the multi-world derivation of the adjustment formula. The
/// do-expressions on each side are computed by graph mutilation, and the
/// rule-justified steps additionally assert that the corresponding rule's
/// premise holds in the mutilated world.
pub fn verify_multiworld_chain(scm: &DiscreteScm, tol: f64) -> Result<Vec<StepReport>, ScmError> {
    let t = FusionTables::build(scm)?;
    let g = scm.dag();
    let da_card = t.card(fusion::D_A);
    let z_card = t.card(fusion::Z);

    let single = |n: &str| BTreeSet::from([node(n)]);
    let empty = BTreeSet::new();
    assert!(
        rule_applicable(g, Rule::Three, &empty, &single(fusion::D_A), &single(fusion::D_P), &empty)?,
        "removing do on the cause must be licensed for the aux feature"
    );
    assert!(
        rule_applicable(g, Rule::Two, &empty, &single(fusion::Z), &single(fusion::D_P), &single(fusion::D_A))?,
        "observing the cause in place of do must be licensed for the fused representation"
    );
    assert!(
        rule_applicable(g, Rule::Two, &single(fusion::D_P), &single(fusion::Y), &single(fusion::Z), &single(fusion::D_A))?,
        "exchanging observation of the fused representation for do must be licensed"
    );
    assert!(
        rule_applicable(g, Rule::Three, &single(fusion::Z), &single(fusion::Y), &single(fusion::D_P), &single(fusion::D_A))?,
        "removing do on the cause must be licensed once the representation is forced"
    );

    let dp = node(fusion::D_P);
    let z_node = node(fusion::Z);
    let dp_domain = t.domains[fusion::D_P].clone();
    let z_domain = t.domains[fusion::Z].clone();

    // Worlds: do(D_P), do(D_P, Z), do(Z).
    let mut q_y_zd = Vec::new(); // [Z, D_A, Y] per dp
    let mut q_zd = Vec::new(); // [Z, D_A] per dp
    let mut q_z_d = Vec::new(); // [D_A, Z] per dp
    let mut q_d = Vec::new(); // [D_A] per dp
    let mut oracle_y = Vec::new(); // [Y] per dp
    let mut r_y_d = Vec::new(); // [D_A, Y] per (dp, z)
    for dp_val in &dp_domain {
        let world = scm.intervene(&BTreeMap::from([(dp.clone(), dp_val.clone())]))?;
        let joint = world.joint()?;
        q_y_zd.push(joint.conditional_table(&names(&[fusion::Y]), &names(&[fusion::Z, fusion::D_A]))?);
        q_zd.push(joint.conditional_table(&names(&[fusion::Z, fusion::D_A]), &[])?);
        q_z_d.push(joint.conditional_table(&names(&[fusion::Z]), &names(&[fusion::D_A]))?);
        q_d.push(joint.conditional_table(&names(&[fusion::D_A]), &[])?);
        oracle_y.push(joint.conditional_table(&names(&[fusion::Y]), &[])?);
        let mut per_z = Vec::new();
        for z_val in &z_domain {
            let world2 = world.intervene(&BTreeMap::from([(z_node.clone(), z_val.clone())]))?;
            let joint2 = world2.joint()?;
            per_z.push(joint2.conditional_table(&names(&[fusion::Y]), &names(&[fusion::D_A]))?);
        }
        r_y_d.push(per_z);
    }
    let mut s_y_d = Vec::new(); // [D_A, Y] per z
    for z_val in &z_domain {
        let world = scm.intervene(&BTreeMap::from([(z_node.clone(), z_val.clone())]))?;
        let joint = world.joint()?;
        s_y_d.push(joint.conditional_table(&names(&[fusion::Y]), &names(&[fusion::D_A]))?);
    }

    let w0 = t.dp_y_table(|dpi, y| oracle_y[dpi].at(&[y]))?;
    let w1 = t.dp_y_table(|dpi, y| {
        let mut acc = 0.0;
        for z in 0..z_card {
            for da in 0..da_card {
                acc += q_y_zd[dpi].at(&[z, da, y]) * q_zd[dpi].at(&[z, da]);
            }
        }
        acc
    })?;
    let w2 = t.dp_y_table(|dpi, y| {
        let mut acc = 0.0;
        for z in 0..z_card {
            for da in 0..da_card {
                acc += q_y_zd[dpi].at(&[z, da, y]) * q_z_d[dpi].at(&[da, z]) * q_d[dpi].at(&[da]);
            }
        }
        acc
    })?;
    let w3 = t.dp_y_table(|dpi, y| {
        let mut acc = 0.0;
        for z in 0..z_card {
            for da in 0..da_card {
                acc += q_y_zd[dpi].at(&[z, da, y]) * q_z_d[dpi].at(&[da, z]) * t.p_da.at(&[da]);
            }
        }
        acc
    })?;
    let w4 = t.dp_y_table(|dpi, y| {
        let mut acc = 0.0;
        for z in 0..z_card {
            for da in 0..da_card {
                acc += q_y_zd[dpi].at(&[z, da, y]) * t.p_z_given_dd.at(&[dpi, da, z]) * t.p_da.at(&[da]);
            }
        }
        acc
    })?;
    let w5 = t.dp_y_table(|dpi, y| {
        let mut acc = 0.0;
        for z in 0..z_card {
            for da in 0..da_card {
                acc += r_y_d[dpi][z].at(&[da, y]) * t.p_z_given_dd.at(&[dpi, da, z]) * t.p_da.at(&[da]);
            }
        }
        acc
    })?;
    let w6 = t.dp_y_table(|dpi, y| {
        let mut acc = 0.0;
        for z in 0..z_card {
            for da in 0..da_card {
                acc += s_y_d[z].at(&[da, y]) * t.p_z_given_dd.at(&[dpi, da, z]) * t.p_da.at(&[da]);
            }
        }
        acc
    })?;
    let w7 = t.dp_y_table(|dpi, y| t.adjustment_expr(dpi, y))?;

    Ok(vec![
        StepReport::new("14a", w0, w1.clone(), tol)?,
        StepReport::new("14b", w1, w2.clone(), tol)?,
        StepReport::new("14c", w2, w3.clone(), tol)?,
        StepReport::new("14d", w3, w4.clone(), tol)?,
        StepReport::new("14e", w4, w5.clone(), tol)?,
        StepReport::new("14f", w5, w6.clone(), tol)?,
        StepReport::new("14g", w6, w7, tol)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion;
    use crate::graph::random_dag;

    fn single(n: &str) -> BTreeSet<NodeId> {
        BTreeSet::from([node(n)])
    }

    #[test]
    fn bar_on_root_changes_nothing() {
        let g = fusion::dag();
        let cut = surgery(&g, &SurgerySpec::bar(&[&node(fusion::K_P)])).unwrap();
        assert_eq!(g, cut);
    }

    #[test]
    fn bar_on_cause_removes_its_incoming_edge() {
        let g = fusion::dag();
        let cut = surgery(&g, &SurgerySpec::bar(&[&node(fusion::D_P)])).unwrap();
        assert!(!cut.has_edge(&node(fusion::K_P), &node(fusion::D_P)).unwrap());
        assert_eq!(cut.edges().len(), g.edges().len() - 1);
    }

    #[test]
    fn combined_surgery_removes_both_edge_groups() {
        let g = fusion::dag();
        let cut = surgery(
            &g,
            &SurgerySpec::bar_underbar(&[&node(fusion::D_P)], &[&node(fusion::Z)]),
        )
        .unwrap();
        assert!(!cut.has_edge(&node(fusion::K_P), &node(fusion::D_P)).unwrap());
        assert!(!cut.has_edge(&node(fusion::Z), &node(fusion::Y)).unwrap());
        assert_eq!(cut.edges().len(), g.edges().len() - 2);
    }

    #[test]
    fn surgery_composes_on_disjoint_sets() {
        for seed in 0..40u64 {
            let g = random_dag(6, 0.4, seed);
            let a = node("V0");
            let b = node("V3");
            let bar_then_under = surgery(
                &surgery(&g, &SurgerySpec::bar(&[&a])).unwrap(),
                &SurgerySpec::underbar(&[&b]),
            )
            .unwrap();
            let under_then_bar = surgery(
                &surgery(&g, &SurgerySpec::underbar(&[&b])).unwrap(),
                &SurgerySpec::bar(&[&a]),
            )
            .unwrap();
            assert_eq!(bar_then_under, under_then_bar);
        }
    }

    #[test]
    fn rule_two_licenses_the_representation_exchange() {
        let g = fusion::dag();
        assert!(rule_applicable(
            &g,
            Rule::Two,
            &single(fusion::D_P),
            &single(fusion::Y),
            &single(fusion::Z),
            &single(fusion::D_A),
        )
        .unwrap());
    }

    #[test]
    fn rule_three_licenses_removing_do_on_the_cause() {
        let g = fusion::dag();
        assert!(rule_applicable(
            &g,
            Rule::Three,
            &single(fusion::Z),
            &single(fusion::Y),
            &single(fusion::D_P),
            &single(fusion::D_A),
        )
        .unwrap());
    }

    #[test]
    fn empty_z_makes_all_rules_applicable() {
        let g = fusion::dag();
        let empty = BTreeSet::new();
        for rule in [Rule::One, Rule::Two, Rule::Three] {
            assert!(rule_applicable(
                &g,
                rule,
                &single(fusion::D_P),
                &single(fusion::Y),
                &empty,
                &single(fusion::D_A),
            )
            .unwrap());
        }
    }

    #[test]
    fn joint_decomposition_on_seeded_scm() {
        let scm = fusion::random_fusion_scm(2, 17);
        let report = verify_joint_decomposition(&scm, 1e-12).unwrap();
        assert!(report.passed, "diff {}", report.max_abs_diff);
    }

    #[test]
    fn joint_decomposition_on_deterministic_scm_is_exact() {
        let report = verify_joint_decomposition(&fusion::copy_chain_scm(), 0.0).unwrap();
        assert!(report.passed, "diff {}", report.max_abs_diff);
    }

    #[test]
    fn joint_decomposition_rejects_wrong_topology() {
        let mut edges = fusion::dag().edges();
        edges.push((node(fusion::K_P), node(fusion::Z)));
        let g = Dag::new(fusion::dag().nodes().to_vec(), edges, fusion::dag().observed_set()).unwrap();
        let sizes: BTreeMap<NodeId, usize> = g.nodes().iter().map(|n| (n.clone(), 2)).collect();
        let scm = crate::scm::random_scm(&g, &sizes, 0).unwrap();
        assert!(matches!(
            verify_joint_decomposition(&scm, 1e-12),
            Err(ScmError::TopologyMismatch)
        ));
    }

    #[test]
    fn decomposition_chain_passes_on_seeded_scms() {
        for seed in 0..25u64 {
            let scm = fusion::random_fusion_scm(2, seed);
            for step in verify_decomposition_chain(&scm, DEFAULT_TOL).unwrap() {
                assert!(step.passed, "step {} diff {}", step.step_label, step.max_abs_diff);
            }
        }
    }

    #[test]
    fn decomposition_chain_is_exact_on_copy_chain() {
        for step in verify_decomposition_chain(&fusion::copy_chain_scm(), DEFAULT_TOL).unwrap() {
            // The entry step compares against the oracle and is excluded: a
            // deterministic mediator breaks positivity, so the algebraic
            // rewrites hold exactly while the formula itself need not equal
            // the interventional truth.
            if step.step_label == "13" {
                continue;
            }
            assert_eq!(step.max_abs_diff, 0.0, "step {}", step.step_label);
        }
    }

    #[test]
    fn multiworld_chain_passes_on_seeded_scms() {
        for seed in 0..25u64 {
            let scm = fusion::random_fusion_scm(2, seed);
            for step in verify_multiworld_chain(&scm, DEFAULT_TOL).unwrap() {
                assert!(step.passed, "step {} diff {}", step.step_label, step.max_abs_diff);
            }
        }
    }

    #[test]
    fn multiworld_chain_passes_on_uniform_scm() {
        for step in verify_multiworld_chain(&fusion::uniform_fusion_scm(2), DEFAULT_TOL).unwrap() {
            assert!(step.passed, "step {} diff {}", step.step_label, step.max_abs_diff);
        }
    }

    #[test]
    fn chain_endpoints_agree_with_the_adjustment_evaluator() {
        use crate::scm::beta_frontdoor_adjust;
        let scm = fusion::random_fusion_scm(2, 99);
        let decomp = verify_decomposition_chain(&scm, DEFAULT_TOL).unwrap();
        let multi = verify_multiworld_chain(&scm, DEFAULT_TOL).unwrap();
        let decomp_final = &decomp.last().unwrap().rhs;
        let multi_final = &multi.last().unwrap().rhs;
        assert!(decomp_final.max_abs_diff(multi_final).unwrap() <= DEFAULT_TOL);

        for (dpi, dp_val) in scm.domain(&node(fusion::D_P)).unwrap().to_vec().iter().enumerate() {
            let adj = beta_frontdoor_adjust(
                &scm,
                &node(fusion::D_P),
                dp_val,
                &node(fusion::Y),
                &single(fusion::Z),
                &single(fusion::D_A),
            )
            .unwrap();
            for (yi, v) in adj.values().iter().enumerate() {
                assert!((v - decomp_final.at(&[dpi, yi])).abs() <= DEFAULT_TOL);
            }
        }
    }
}
