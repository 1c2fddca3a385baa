//! Exact discrete structural causal models.
//!
//! A [`DiscreteScm`] is a [`Dag`] plus a finite domain and a conditional
//! probability table per node. It supports the exact joint, graph-mutilation
//! interventions, the ground-truth interventional oracle, and the three
//! adjustment-formula evaluators.
//!
//! The adjustment evaluators obey an identifiability discipline: they never
//! read the CPT of an unobserved node, only the observational joint
//! restricted to the observed variables.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ScmError;
use crate::graph::{
    check_backdoor_criterion, check_beta_frontdoor_criterion, check_frontdoor_criterion, Dag,
    NodeId,
};
use crate::table::{index_product, ProbTable};

/// Default cap on dense table size, in cells.
pub const DEFAULT_CELL_CAP: usize = 10_000_000;

/// CPT rows must sum to one within this tolerance.
pub const CPT_ROW_TOL: f64 = 1e-12;

/// Conditional probability table P(node | parents). Rows are indexed by the
/// parent assignment (parents in lexicographic name order, row-major) and hold
/// one probability per node value, the node's value varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt {
    values: Vec<f64>,
}

impl Cpt {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteScm {
    dag: Dag,
    domains: Vec<Vec<String>>, // by node index
    cpts: Vec<Cpt>,            // by node index
}

impl DiscreteScm {
    /// Builds an SCM, validating CPT shapes against the parent domains and
    /// each row's normalization (within [`CPT_ROW_TOL`]).
    pub fn new(
        dag: Dag,
        domains: BTreeMap<NodeId, Vec<String>>,
        cpts: BTreeMap<NodeId, Vec<f64>>,
    ) -> Result<Self, ScmError> {
        let mut dom_vec: Vec<Vec<String>> = Vec::with_capacity(dag.len());
        for n in dag.nodes() {
            let d = domains
                .get(n)
                .ok_or_else(|| ScmError::UnknownVariable(n.clone()))?;
            if d.is_empty() {
                return Err(ScmError::Format(format!("empty domain for `{n}`")));
            }
            dom_vec.push(d.clone());
        }
        for extra in domains.keys() {
            if !dag.contains(extra) {
                return Err(ScmError::UnknownVariable(extra.clone()));
            }
        }
        let mut cpt_vec: Vec<Cpt> = Vec::with_capacity(dag.len());
        for (i, n) in dag.nodes().iter().enumerate() {
            let raw = cpts
                .get(n)
                .ok_or_else(|| ScmError::UnknownVariable(n.clone()))?;
            let card = dom_vec[i].len();
            let parent_cells: usize = dag
                .parent_idxs(i)
                .iter()
                .map(|&p| dom_vec[p].len())
                .product();
            let expected = parent_cells * card;
            if raw.len() != expected {
                return Err(ScmError::CptShape {
                    node: n.clone(),
                    got: raw.len(),
                    expected,
                });
            }
            for (j, &v) in raw.iter().enumerate() {
                if v < 0.0 {
                    return Err(ScmError::NegativeProbability { index: j, value: v });
                }
            }
            for row in 0..parent_cells {
                let sum: f64 = raw[row * card..(row + 1) * card].iter().sum();
                if (sum - 1.0).abs() > CPT_ROW_TOL {
                    return Err(ScmError::CptRowSum {
                        node: n.clone(),
                        row,
                        sum,
                    });
                }
            }
            cpt_vec.push(Cpt { values: raw.clone() });
        }
        for extra in cpts.keys() {
            if !dag.contains(extra) {
                return Err(ScmError::UnknownVariable(extra.clone()));
            }
        }
        Ok(DiscreteScm {
            dag,
            domains: dom_vec,
            cpts: cpt_vec,
        })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn domain(&self, n: &NodeId) -> Result<&[String], ScmError> {
        let i = self.dag.idx(n)?;
        Ok(&self.domains[i])
    }

    pub fn domains(&self) -> BTreeMap<NodeId, Vec<String>> {
        self.dag
            .nodes()
            .iter()
            .zip(&self.domains)
            .map(|(n, d)| (n.clone(), d.clone()))
            .collect()
    }

    pub fn cpt(&self, n: &NodeId) -> Result<&Cpt, ScmError> {
        let i = self.dag.idx(n)?;
        Ok(&self.cpts[i])
    }

    fn value_index(&self, node_idx: usize, label: &str) -> Result<usize, ScmError> {
        self.domains[node_idx]
            .iter()
            .position(|v| v == label)
            .ok_or_else(|| ScmError::ValueOutOfDomain {
                node: self.dag.nodes()[node_idx].clone(),
                value: label.to_owned(),
            })
    }

    /// P(node = value | parent values), all given as value indices.
    fn cpt_entry(&self, node_idx: usize, parent_vals: &[usize], val: usize) -> f64 {
        let card = self.domains[node_idx].len();
        let mut row = 0usize;
        for (k, &p) in self.dag.parent_idxs(node_idx).iter().enumerate() {
            row = row * self.domains[p].len() + parent_vals[k];
        }
        self.cpts[node_idx].values[row * card + val]
    }

    /// Full joint distribution as the product of CPT factors in topological
    /// order, with the default cell cap.
    pub fn joint(&self) -> Result<ProbTable, ScmError> {
        self.joint_with_cap(DEFAULT_CELL_CAP)
    }

    /// Full joint with an explicit cell cap.
    pub fn joint_with_cap(&self, cap: usize) -> Result<ProbTable, ScmError> {
        let cells: u128 = self.domains.iter().map(|d| d.len() as u128).product();
        if cells > cap as u128 {
            return Err(ScmError::DomainTooLarge { cells, cap });
        }
        let vars: Vec<NodeId> = self.dag.nodes().to_vec();
        let cards: Vec<usize> = self.domains.iter().map(Vec::len).collect();
        let mut values = Vec::with_capacity(cells as usize);
        let mut parent_buf = Vec::new();
        for assign in index_product(&cards) {
            let mut p = 1.0;
            for i in 0..vars.len() {
                parent_buf.clear();
                parent_buf.extend(self.dag.parent_idxs(i).iter().map(|&q| assign[q]));
                p *= self.cpt_entry(i, &parent_buf, assign[i]);
                if p == 0.0 {
                    break;
                }
            }
            values.push(p);
        }
        ProbTable::new(vars, self.domains.clone(), values)
    }

    /// Observational joint restricted to the observed variables. This is the
    /// only distribution the adjustment evaluators are allowed to consume.
    pub fn observational_joint(&self) -> Result<ProbTable, ScmError> {
        let joint = self.joint()?;
        joint.marginal(&self.dag.observed_set())
    }

    /// Graph-mutilation intervention: every assigned node loses its incoming
    /// edges and its CPT becomes a point mass at the assigned value.
    pub fn intervene(&self, assignments: &BTreeMap<NodeId, String>) -> Result<DiscreteScm, ScmError> {
        let mut remove = BTreeSet::new();
        let mut forced: Vec<(usize, usize)> = Vec::new();
        for (n, v) in assignments {
            let i = self.dag.idx(n)?;
            let vi = self.value_index(i, v)?;
            forced.push((i, vi));
            for &p in self.dag.parent_idxs(i) {
                remove.insert((p, i));
            }
        }
        let dag = self.dag.without_edges(&remove);
        let mut cpts = self.cpts.clone();
        for (i, vi) in forced {
            let card = self.domains[i].len();
            let mut row = vec![0.0; card];
            row[vi] = 1.0;
            cpts[i] = Cpt { values: row };
        }
        Ok(DiscreteScm {
            dag,
            domains: self.domains.clone(),
            cpts,
        })
    }

    /// Ground-truth P(y | do(x = x_val)) by mutilation, joint, and
    /// marginalization. This is the oracle every adjustment evaluator is
    /// compared against.
    pub fn interventional(
        &self,
        x: &NodeId,
        x_val: &str,
        y: &NodeId,
    ) -> Result<ProbTable, ScmError> {
        let mutilated = self.intervene(&BTreeMap::from([(x.clone(), x_val.to_owned())]))?;
        let joint = mutilated.joint()?;
        joint.marginal(&BTreeSet::from([y.clone()]))
    }
}

/// Iterates over all joint assignments of `vars`, yielding value-label maps.
fn assignment_maps<'a>(
    scm: &'a DiscreteScm,
    vars: &'a [NodeId],
) -> Result<impl Iterator<Item = BTreeMap<NodeId, String>> + 'a, ScmError> {
    let cards: Vec<usize> = vars
        .iter()
        .map(|n| scm.domain(n).map(<[String]>::len))
        .collect::<Result<_, _>>()?;
    Ok(index_product(&cards).map(move |idxs| {
        vars.iter()
            .zip(&idxs)
            .map(|(n, &i)| (n.clone(), scm.domain(n).unwrap()[i].clone()))
            .collect()
    }))
}

fn require_observed(scm: &DiscreteScm, nodes: &[&NodeId]) -> Result<(), ScmError> {
    for n in nodes {
        if !scm.dag().is_observed(n)? {
            return Err(ScmError::UnobservedAdjustment((*n).clone()));
        }
    }
    Ok(())
}

/// Back-door adjustment P(y | do(x)) = Σ_z P(y | x, z) P(z), evaluated from
/// the observational joint. Refuses to run when the criterion check fails.
pub fn backdoor_adjust(
    scm: &DiscreteScm,
    x: &NodeId,
    x_val: &str,
    y: &NodeId,
    z: &BTreeSet<NodeId>,
) -> Result<ProbTable, ScmError> {
    let report = check_backdoor_criterion(scm.dag(), x, y, z)?;
    if !report.satisfied {
        return Err(ScmError::CriterionViolated {
            criterion: "back-door",
            condition: report.violated_condition.unwrap_or(0),
        });
    }
    require_observed(scm, &z.iter().collect::<Vec<_>>())?;
    backdoor_adjust_unchecked(scm, x, x_val, y, z)
}

/// The back-door sum without the criterion gate.
pub fn backdoor_adjust_unchecked(
    scm: &DiscreteScm,
    x: &NodeId,
    x_val: &str,
    y: &NodeId,
    z: &BTreeSet<NodeId>,
) -> Result<ProbTable, ScmError> {
    require_observed(scm, &[x, y])?;
    let joint = scm.observational_joint()?;
    let z_vars: Vec<NodeId> = z.iter().cloned().collect();
    let y_domain = scm.domain(y)?.to_vec();

    let mut out = vec![0.0; y_domain.len()];
    for z_assign in assignment_maps(scm, &z_vars)? {
        let pz = joint.mass(&z_assign)?;
        if pz == 0.0 {
            continue;
        }
        let mut given = z_assign.clone();
        given.insert(x.clone(), x_val.to_owned());
        for (yi, y_val) in y_domain.iter().enumerate() {
            let target = BTreeMap::from([(y.clone(), y_val.clone())]);
            out[yi] += joint.cond_prob(&target, &given)? * pz;
        }
    }
    ProbTable::new(vec![y.clone()], vec![y_domain], out)
}

/// Front-door adjustment P(y | do(x)) = Σ_z P(z | x) Σ_{x'} P(y | x', z) P(x').
pub fn frontdoor_adjust(
    scm: &DiscreteScm,
    x: &NodeId,
    x_val: &str,
    y: &NodeId,
    z: &BTreeSet<NodeId>,
) -> Result<ProbTable, ScmError> {
    let report = check_frontdoor_criterion(scm.dag(), x, y, z)?;
    if !report.satisfied {
        return Err(ScmError::CriterionViolated {
            criterion: "front-door",
            condition: report.violated_condition.unwrap_or(0),
        });
    }
    require_observed(scm, &z.iter().collect::<Vec<_>>())?;
    frontdoor_adjust_unchecked(scm, x, x_val, y, z)
}

/// The front-door sum without the criterion gate.
pub fn frontdoor_adjust_unchecked(
    scm: &DiscreteScm,
    x: &NodeId,
    x_val: &str,
    y: &NodeId,
    z: &BTreeSet<NodeId>,
) -> Result<ProbTable, ScmError> {
    require_observed(scm, &[x, y])?;
    let joint = scm.observational_joint()?;
    let z_vars: Vec<NodeId> = z.iter().cloned().collect();
    let x_domain = scm.domain(x)?.to_vec();
    let y_domain = scm.domain(y)?.to_vec();

    let mut out = vec![0.0; y_domain.len()];
    for z_assign in assignment_maps(scm, &z_vars)? {
        let given_x = BTreeMap::from([(x.clone(), x_val.to_owned())]);
        let pz_given_x = joint.cond_prob(
            &z_assign.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            &given_x,
        )?;
        if pz_given_x == 0.0 {
            continue;
        }
        for x_prime in &x_domain {
            let px = joint.mass(&BTreeMap::from([(x.clone(), x_prime.clone())]))?;
            if px == 0.0 {
                continue;
            }
            let mut given = z_assign.clone();
            given.insert(x.clone(), x_prime.clone());
            for (yi, y_val) in y_domain.iter().enumerate() {
                let target = BTreeMap::from([(y.clone(), y_val.clone())]);
                out[yi] += pz_given_x * joint.cond_prob(&target, &given)? * px;
            }
        }
    }
    ProbTable::new(vec![y.clone()], vec![y_domain], out)
}

/// Relaxed front-door adjustment
/// P(y | do(x)) = Σ_z Σ_{d_a} Σ_{x'} P(y | z, x', d_a) P(z | x, d_a) P(d_a) P(x'),
/// with every factor taken from the observational joint and zero-mass
/// conditioning terms contributing 0.
pub fn beta_frontdoor_adjust(
    scm: &DiscreteScm,
    x: &NodeId,
    x_val: &str,
    y: &NodeId,
    z: &BTreeSet<NodeId>,
    d_a: &BTreeSet<NodeId>,
) -> Result<ProbTable, ScmError> {
    let report = check_beta_frontdoor_criterion(scm.dag(), x, y, z, d_a)?;
    if !report.satisfied {
        return Err(ScmError::CriterionViolated {
            criterion: "relaxed front-door",
            condition: report.violated_condition.unwrap_or(0),
        });
    }
    require_observed(scm, &z.iter().chain(d_a.iter()).collect::<Vec<_>>())?;
    beta_frontdoor_adjust_unchecked(scm, x, x_val, y, z, d_a)
}

/// The relaxed front-door sum without the criterion gate.
pub fn beta_frontdoor_adjust_unchecked(
    scm: &DiscreteScm,
    x: &NodeId,
    x_val: &str,
    y: &NodeId,
    z: &BTreeSet<NodeId>,
    d_a: &BTreeSet<NodeId>,
) -> Result<ProbTable, ScmError> {
    require_observed(scm, &[x, y])?;
    let joint = scm.observational_joint()?;
    let z_vars: Vec<NodeId> = z.iter().cloned().collect();
    let da_vars: Vec<NodeId> = d_a.iter().cloned().collect();
    let x_domain = scm.domain(x)?.to_vec();
    let y_domain = scm.domain(y)?.to_vec();

    let mut out = vec![0.0; y_domain.len()];
    for z_assign in assignment_maps(scm, &z_vars)? {
        for da_assign in assignment_maps(scm, &da_vars)? {
            let p_da = joint.mass(&da_assign)?;
            if p_da == 0.0 {
                continue;
            }
            let mut given_x_da = da_assign.clone();
            given_x_da.insert(x.clone(), x_val.to_owned());
            let p_z = joint.cond_prob(&z_assign, &given_x_da)?;
            if p_z == 0.0 {
                continue;
            }
            for x_prime in &x_domain {
                let p_xp = joint.mass(&BTreeMap::from([(x.clone(), x_prime.clone())]))?;
                if p_xp == 0.0 {
                    continue;
                }
                let mut given = z_assign.clone();
                given.extend(da_assign.iter().map(|(k, v)| (k.clone(), v.clone())));
                given.insert(x.clone(), x_prime.clone());
                for (yi, y_val) in y_domain.iter().enumerate() {
                    let target = BTreeMap::from([(y.clone(), y_val.clone())]);
                    out[yi] += joint.cond_prob(&target, &given)? * p_z * p_da * p_xp;
                }
            }
        }
    }
    ProbTable::new(vec![y.clone()], vec![y_domain], out)
}

/// Random SCM on `dag` with the given domain sizes: every CPT row is drawn
/// from a symmetric Dirichlet with concentration 1 (normalized unit
/// exponentials). Deterministic in `seed`.
pub fn random_scm(
    dag: &Dag,
    sizes: &BTreeMap<NodeId, usize>,
    seed: u64,
) -> Result<DiscreteScm, ScmError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut domains = BTreeMap::new();
    for n in dag.nodes() {
        let &k = sizes.get(n).ok_or_else(|| ScmError::MissingDomainSize(n.clone()))?;
        if k == 0 {
            return Err(ScmError::MissingDomainSize(n.clone()));
        }
        domains.insert(n.clone(), (0..k).map(|v| v.to_string()).collect::<Vec<_>>());
    }
    let mut cpts = BTreeMap::new();
    for (i, n) in dag.nodes().iter().enumerate() {
        let card = domains[n].len();
        let rows: usize = dag
            .parent_idxs(i)
            .iter()
            .map(|&p| domains[&dag.nodes()[p]].len())
            .product();
        let mut values = Vec::with_capacity(rows * card);
        for _ in 0..rows {
            let mut row: Vec<f64> = (0..card)
                .map(|_| {
                    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                    -u.ln()
                })
                .collect();
            let total: f64 = row.iter().sum();
            for v in &mut row {
                *v /= total;
            }
            values.extend(row);
        }
        cpts.insert(n.clone(), values);
    }
    DiscreteScm::new(dag.clone(), domains, cpts)
}
