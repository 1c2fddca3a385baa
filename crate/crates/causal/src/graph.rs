//! Directed acyclic graphs over named variables, path machinery, d-separation,
//! and the criterion checkers used by the adjustment evaluators.
//!
//! Nodes are indexed internally by their rank in lexicographic name order, so
//! every path-returning operation is deterministic: identical inputs yield
//! identical ordered output. All types are immutable after construction and
//! all operations are pure functions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::GraphError;

/// Name of a variable, unique within a [`Dag`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(name: impl Into<String>) -> Self {
        NodeId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

/// Shorthand constructor, mostly for tests and examples.
pub fn node(name: &str) -> NodeId {
    NodeId::from(name)
}

/// Direction in which a path step traverses the underlying directed edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeDir {
    /// The step follows the edge: `a -> b`.
    Forward,
    /// The step goes against the edge: `a <- b`.
    Backward,
}

/// A simple path in the skeleton of a [`Dag`], with per-step edge direction.
///
/// Invariants: consecutive nodes are adjacent in the graph and no node
/// repeats. Serializes as its display form, e.g. `"Z <- D_A <- K_A -> Y"`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    nodes: Vec<NodeId>,
    dirs: Vec<EdgeDir>,
}

impl Path {
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn dirs(&self) -> &[EdgeDir] {
        &self.dirs
    }

    /// True when the first step enters the start node against an edge,
    /// i.e. the path "contains an arrow into" its start.
    pub fn starts_into_start(&self) -> bool {
        matches!(self.dirs.first(), Some(EdgeDir::Backward))
    }

    pub fn contains(&self, n: &NodeId) -> bool {
        self.nodes.contains(n)
    }

    /// Interior nodes (everything but the two endpoints).
    pub fn interior(&self) -> &[NodeId] {
        if self.nodes.len() < 3 {
            &[]
        } else {
            &self.nodes[1..self.nodes.len() - 1]
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.nodes.iter().enumerate() {
            if i > 0 {
                match self.dirs[i - 1] {
                    EdgeDir::Forward => write!(f, " -> ")?,
                    EdgeDir::Backward => write!(f, " <- ")?,
                }
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

impl Serialize for Path {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Result of a criterion check.
///
/// When `satisfied` is true, `violated_condition` and `witness_path` are
/// absent. `alpha_paths` are the back-door paths linking the cause-effect
/// pair directly; `beta_paths` are the back-door paths from the mediator set
/// to the effect that bypass the cause. `unobserved_adjustment` lists
/// conditioning nodes that are not flagged observed, for criteria that are
/// structurally satisfied but not usable in practice.
#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub satisfied: bool,
    pub violated_condition: Option<u8>,
    pub witness_path: Option<Path>,
    pub alpha_paths: Vec<Path>,
    pub beta_paths: Vec<Path>,
    pub unobserved_adjustment: Vec<NodeId>,
}

impl CriterionReport {
    fn satisfied(alpha: Vec<Path>, beta: Vec<Path>, unobserved: Vec<NodeId>) -> Self {
        CriterionReport {
            satisfied: true,
            violated_condition: None,
            witness_path: None,
            alpha_paths: alpha,
            beta_paths: beta,
            unobserved_adjustment: unobserved,
        }
    }

    fn violated(
        condition: u8,
        witness: Option<Path>,
        alpha: Vec<Path>,
        beta: Vec<Path>,
        unobserved: Vec<NodeId>,
    ) -> Self {
        CriterionReport {
            satisfied: false,
            violated_condition: Some(condition),
            witness_path: witness,
            alpha_paths: alpha,
            beta_paths: beta,
            unobserved_adjustment: unobserved,
        }
    }
}

/// A directed acyclic graph over named variables with an observability flag
/// per node. Immutable after construction; the topological order is computed
/// and cached by [`Dag::new`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dag {
    names: Vec<NodeId>,          // sorted lexicographically; position = node index
    index: BTreeMap<NodeId, usize>,
    parents: Vec<Vec<usize>>,    // sorted ascending
    children: Vec<Vec<usize>>,   // sorted ascending
    observed: Vec<bool>,
    topo: Vec<usize>,
}

impl Dag {
    /// Builds a DAG from node names, directed edges, and the observed subset.
    ///
    /// Fails with [`GraphError::CycleDetected`] if the edge set has a directed
    /// cycle and [`GraphError::UnknownNode`] if an edge or observed entry
    /// references a missing node.
    pub fn new(
        nodes: Vec<NodeId>,
        edges: Vec<(NodeId, NodeId)>,
        observed: BTreeSet<NodeId>,
    ) -> Result<Self, GraphError> {
        if nodes.iter().any(|n| n.as_str().is_empty()) {
            return Err(GraphError::EmptyNodeName);
        }
        let mut names = nodes;
        names.sort();
        for w in names.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateNode(w[0].clone()));
            }
        }
        let index: BTreeMap<NodeId, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let n = names.len();

        let mut parent_sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut child_sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (a, b) in &edges {
            let ia = *index.get(a).ok_or_else(|| GraphError::UnknownNode(a.clone()))?;
            let ib = *index.get(b).ok_or_else(|| GraphError::UnknownNode(b.clone()))?;
            if ia == ib {
                return Err(GraphError::CycleDetected);
            }
            child_sets[ia].insert(ib);
            parent_sets[ib].insert(ia);
        }
        let parents: Vec<Vec<usize>> = parent_sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let children: Vec<Vec<usize>> = child_sets.into_iter().map(|s| s.into_iter().collect()).collect();

        // Kahn's algorithm; smallest index first keeps the order canonical.
        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(&i) = ready.iter().next() {
            ready.remove(&i);
            topo.push(i);
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if topo.len() != n {
            return Err(GraphError::CycleDetected);
        }

        let mut observed_flags = vec![false; n];
        for o in &observed {
            let i = *index.get(o).ok_or_else(|| GraphError::UnknownNode(o.clone()))?;
            observed_flags[i] = true;
        }

        Ok(Dag {
            names,
            index,
            parents,
            children,
            observed: observed_flags,
            topo,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Node names in lexicographic order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.names
    }

    pub fn contains(&self, n: &NodeId) -> bool {
        self.index.contains_key(n)
    }

    pub(crate) fn idx(&self, n: &NodeId) -> Result<usize, GraphError> {
        self.index
            .get(n)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(n.clone()))
    }

    pub(crate) fn name(&self, i: usize) -> &NodeId {
        &self.names[i]
    }

    pub(crate) fn parent_idxs(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub(crate) fn child_idxs(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn parents_of(&self, n: &NodeId) -> Result<Vec<NodeId>, GraphError> {
        let i = self.idx(n)?;
        Ok(self.parents[i].iter().map(|&p| self.names[p].clone()).collect())
    }

    pub fn children_of(&self, n: &NodeId) -> Result<Vec<NodeId>, GraphError> {
        let i = self.idx(n)?;
        Ok(self.children[i].iter().map(|&c| self.names[c].clone()).collect())
    }

    pub fn has_edge(&self, a: &NodeId, b: &NodeId) -> Result<bool, GraphError> {
        let ia = self.idx(a)?;
        let ib = self.idx(b)?;
        Ok(self.children[ia].binary_search(&ib).is_ok())
    }

    /// All directed edges, in (tail, head) lexicographic order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (i, ch) in self.children.iter().enumerate() {
            for &c in ch {
                out.push((self.names[i].clone(), self.names[c].clone()));
            }
        }
        out
    }

    pub fn is_observed(&self, n: &NodeId) -> Result<bool, GraphError> {
        Ok(self.observed[self.idx(n)?])
    }

    pub fn observed_set(&self) -> BTreeSet<NodeId> {
        self.observed
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(|(i, _)| self.names[i].clone())
            .collect()
    }

    /// Cached topological order.
    pub fn topological_order(&self) -> Vec<NodeId> {
        self.topo.iter().map(|&i| self.names[i].clone()).collect()
    }

    fn descendant_idxs(&self, i: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![i];
        while let Some(v) = stack.pop() {
            for &c in &self.children[v] {
                if seen.insert(c) {
                    stack.push(c);
                }
            }
        }
        seen
    }

    fn ancestor_idxs(&self, i: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![i];
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        seen
    }

    /// Strict descendants of `n`.
    pub fn descendants(&self, n: &NodeId) -> Result<BTreeSet<NodeId>, GraphError> {
        let i = self.idx(n)?;
        Ok(self.descendant_idxs(i).into_iter().map(|d| self.names[d].clone()).collect())
    }

    /// Strict ancestors of `n`.
    pub fn ancestors(&self, n: &NodeId) -> Result<BTreeSet<NodeId>, GraphError> {
        let i = self.idx(n)?;
        Ok(self.ancestor_idxs(i).into_iter().map(|a| self.names[a].clone()).collect())
    }

    /// Returns a copy with `remove` edges deleted. Endpoints must exist.
    pub(crate) fn without_edges(&self, remove: &BTreeSet<(usize, usize)>) -> Dag {
        let mut parents: Vec<Vec<usize>> = vec![Vec::new(); self.len()];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.len()];
        for (i, ch) in self.children.iter().enumerate() {
            for &c in ch {
                if !remove.contains(&(i, c)) {
                    children[i].push(c);
                    parents[c].push(i);
                }
            }
        }
        for v in parents.iter_mut().chain(children.iter_mut()) {
            v.sort_unstable();
        }
        // Removing edges cannot create a cycle, so the cached order stays valid.
        Dag {
            names: self.names.clone(),
            index: self.index.clone(),
            parents,
            children,
            observed: self.observed.clone(),
            topo: self.topo.clone(),
        }
    }

    fn idx_set(&self, set: &BTreeSet<NodeId>) -> Result<BTreeSet<usize>, GraphError> {
        set.iter().map(|n| self.idx(n)).collect()
    }
}

fn to_path(dag: &Dag, nodes: &[usize], dirs: &[EdgeDir]) -> Path {
    Path {
        nodes: nodes.iter().map(|&i| dag.name(i).clone()).collect(),
        dirs: dirs.to_vec(),
    }
}

/// Depth-first enumeration of simple paths from `from` to `to`. With
/// `directed_only` the search follows edges forward only. Branches are
/// explored in ascending node-index order, so the output is sorted
/// lexicographically by node-name sequence.
fn enumerate_paths(dag: &Dag, from: usize, to: usize, directed_only: bool) -> Vec<Path> {
    let mut out = Vec::new();
    let mut nodes = vec![from];
    let mut dirs: Vec<EdgeDir> = Vec::new();
    let mut on_path = vec![false; dag.len()];
    on_path[from] = true;

    fn step(
        dag: &Dag,
        to: usize,
        directed_only: bool,
        nodes: &mut Vec<usize>,
        dirs: &mut Vec<EdgeDir>,
        on_path: &mut Vec<bool>,
        out: &mut Vec<Path>,
    ) {
        let here = *nodes.last().unwrap();
        if here == to && nodes.len() > 1 {
            out.push(to_path(dag, nodes, dirs));
            return;
        }
        let mut moves: Vec<(usize, EdgeDir)> = dag
            .child_idxs(here)
            .iter()
            .map(|&c| (c, EdgeDir::Forward))
            .collect();
        if !directed_only {
            moves.extend(dag.parent_idxs(here).iter().map(|&p| (p, EdgeDir::Backward)));
            moves.sort_unstable_by_key(|&(i, _)| i);
        }
        for (next, dir) in moves {
            if on_path[next] {
                continue;
            }
            on_path[next] = true;
            nodes.push(next);
            dirs.push(dir);
            step(dag, to, directed_only, nodes, dirs, on_path, out);
            nodes.pop();
            dirs.pop();
            on_path[next] = false;
        }
    }

    step(dag, to, directed_only, &mut nodes, &mut dirs, &mut on_path, &mut out);
    out
}

/// All simple directed paths from `x` to `y`, lexicographically ordered.
pub fn directed_paths(dag: &Dag, x: &NodeId, y: &NodeId) -> Result<Vec<Path>, GraphError> {
    let ix = dag.idx(x)?;
    let iy = dag.idx(y)?;
    Ok(enumerate_paths(dag, ix, iy, true))
}

/// All simple paths between `x` and `y` in the skeleton, regardless of the
/// direction of the first step, lexicographically ordered.
pub fn paths_between(dag: &Dag, x: &NodeId, y: &NodeId) -> Result<Vec<Path>, GraphError> {
    let ix = dag.idx(x)?;
    let iy = dag.idx(y)?;
    Ok(enumerate_paths(dag, ix, iy, false))
}

/// All simple paths between `x` and `y` whose first edge points into `x`.
pub fn backdoor_paths(dag: &Dag, x: &NodeId, y: &NodeId) -> Result<Vec<Path>, GraphError> {
    Ok(paths_between(dag, x, y)?
        .into_iter()
        .filter(Path::starts_into_start)
        .collect())
}

/// Whether `path` is blocked by the conditioning set `z` under the usual
/// chain/fork/collider rules: a non-collider interior node blocks when it is
/// in `z`; a collider blocks unless it or one of its descendants is in `z`.
pub fn path_blocked(dag: &Dag, path: &Path, z: &BTreeSet<NodeId>) -> Result<bool, GraphError> {
    let zi = dag.idx_set(z)?;
    let idxs: Vec<usize> = path
        .nodes
        .iter()
        .map(|n| dag.idx(n))
        .collect::<Result<_, _>>()?;
    for k in 1..idxs.len().saturating_sub(1) {
        let v = idxs[k];
        let collider = path.dirs[k - 1] == EdgeDir::Forward && path.dirs[k] == EdgeDir::Backward;
        if collider {
            let open = zi.contains(&v) || dag.descendant_idxs(v).iter().any(|d| zi.contains(d));
            if !open {
                return Ok(true);
            }
        } else if zi.contains(&v) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn check_disjoint(sets: &[&BTreeSet<NodeId>]) -> Result<(), GraphError> {
    let mut seen: BTreeSet<&NodeId> = BTreeSet::new();
    for set in sets {
        for n in set.iter() {
            if !seen.insert(n) {
                return Err(GraphError::OverlappingSets(n.clone()));
            }
        }
    }
    Ok(())
}

/// Whether `x` and `y` are d-separated given `z`.
///
/// Implemented with linear-time reachability over (node, travel direction)
/// states rather than path enumeration; [`d_separated_by_enumeration`] is the
/// brute-force reference the implementation is tested against.
pub fn d_separated(
    dag: &Dag,
    x: &BTreeSet<NodeId>,
    y: &BTreeSet<NodeId>,
    z: &BTreeSet<NodeId>,
) -> Result<bool, GraphError> {
    check_disjoint(&[x, y, z])?;
    let xi = dag.idx_set(x)?;
    let yi = dag.idx_set(y)?;
    let zi = dag.idx_set(z)?;

    // Nodes that are in z or have a descendant in z: exactly the colliders
    // through which a trail may pass.
    let mut collider_open = vec![false; dag.len()];
    for &zn in &zi {
        collider_open[zn] = true;
        for a in dag.ancestor_idxs(zn) {
            collider_open[a] = true;
        }
    }

    // State (v, dir): dir = true when v was entered from a child (moving up),
    // false when entered from a parent (moving down).
    let mut visited = vec![[false; 2]; dag.len()];
    let mut queue: VecDeque<(usize, bool)> = xi.iter().map(|&s| (s, true)).collect();
    while let Some((v, up)) = queue.pop_front() {
        if visited[v][up as usize] {
            continue;
        }
        visited[v][up as usize] = true;
        let in_z = zi.contains(&v);
        if !in_z && yi.contains(&v) {
            return Ok(false);
        }
        if up {
            // Entered against an edge: v acts as a chain or fork middle.
            if !in_z {
                for &p in dag.parent_idxs(v) {
                    queue.push_back((p, true));
                }
                for &c in dag.child_idxs(v) {
                    queue.push_back((c, false));
                }
            }
        } else {
            // Entered along an edge from a parent.
            if !in_z {
                for &c in dag.child_idxs(v) {
                    queue.push_back((c, false));
                }
            }
            if collider_open[v] {
                for &p in dag.parent_idxs(v) {
                    queue.push_back((p, true));
                }
            }
        }
    }
    Ok(true)
}

/// Brute-force d-separation by enumerating every simple path between the two
/// sets and checking [`path_blocked`]. Exponential; kept as the oracle for
/// property tests and for small-graph diagnostics.
pub fn d_separated_by_enumeration(
    dag: &Dag,
    x: &BTreeSet<NodeId>,
    y: &BTreeSet<NodeId>,
    z: &BTreeSet<NodeId>,
) -> Result<bool, GraphError> {
    check_disjoint(&[x, y, z])?;
    for xn in x {
        for yn in y {
            for path in paths_between(dag, xn, yn)? {
                if !path_blocked(dag, &path, z)? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn unobserved_in(dag: &Dag, set: &BTreeSet<NodeId>) -> Result<Vec<NodeId>, GraphError> {
    let mut out = Vec::new();
    for n in set {
        if !dag.is_observed(n)? {
            out.push(n.clone());
        }
    }
    Ok(out)
}

/// Back-door paths between `x` and `y`: the paths that interfere with the
/// (x, y) causal estimate directly.
fn alpha_paths(dag: &Dag, x: &NodeId, y: &NodeId) -> Result<Vec<Path>, GraphError> {
    backdoor_paths(dag, x, y)
}

/// Back-door paths from a mediator node to `y` that bypass `x`: the paths
/// that interfere with the (x, y) estimate only through the mediator.
fn beta_paths(
    dag: &Dag,
    x: &NodeId,
    y: &NodeId,
    z: &BTreeSet<NodeId>,
) -> Result<Vec<Path>, GraphError> {
    let mut out = Vec::new();
    for zn in z {
        for p in backdoor_paths(dag, zn, y)? {
            if !p.contains(x) {
                out.push(p);
            }
        }
    }
    Ok(out)
}

/// Back-door criterion for the ordered pair `(x, y)` with adjustment set `z`:
/// no node of `z` descends from `x`, and `z` blocks every back-door path from
/// `x` to `y`. Unobserved members of `z` are flagged but do not fail the
/// structural check.
pub fn check_backdoor_criterion(
    dag: &Dag,
    x: &NodeId,
    y: &NodeId,
    z: &BTreeSet<NodeId>,
) -> Result<CriterionReport, GraphError> {
    check_disjoint(&[&BTreeSet::from([x.clone()]), &BTreeSet::from([y.clone()]), z])?;
    let alpha = alpha_paths(dag, x, y)?;
    let unobserved = unobserved_in(dag, z)?;

    let desc = dag.descendants(x)?;
    for zn in z {
        if desc.contains(zn) {
            let witness = directed_paths(dag, x, zn)?.into_iter().next();
            return Ok(CriterionReport::violated(1, witness, alpha, Vec::new(), unobserved));
        }
    }
    for p in &alpha {
        if !path_blocked(dag, p, z)? {
            return Ok(CriterionReport::violated(2, Some(p.clone()), alpha.clone(), Vec::new(), unobserved));
        }
    }
    Ok(CriterionReport::satisfied(alpha, Vec::new(), unobserved))
}

const EMPTY_SET: &BTreeSet<NodeId> = &BTreeSet::new();

/// Front-door criterion for `(x, y)` with mediator set `z`:
/// 1. every directed path from `x` to `y` meets `z`;
/// 2. every back-door path from `x` to `z` is blocked (by the empty set);
/// 3. every back-door path from `z` to `y` is blocked by `{x}`.
pub fn check_frontdoor_criterion(
    dag: &Dag,
    x: &NodeId,
    y: &NodeId,
    z: &BTreeSet<NodeId>,
) -> Result<CriterionReport, GraphError> {
    check_beta_criterion_inner(dag, x, y, z, EMPTY_SET, false)
}

/// Relaxed front-door criterion that tolerates back-door paths from the
/// mediator to `y`, provided each is carried by an observed variable set
/// `d_a`:
/// 1. every directed path from `x` to `y` meets `z`;
/// 2. every back-door path from `x` to `z` is blocked;
/// 3. every back-door path from `z` to `y` is blocked by `{x} ∪ d_a`;
/// 4. every node of `d_a` is a parent of a node of `z` with no unblocked
///    back-door path from it to `z`.
///
/// Conditions 3 and 4 are the adjustment-validity conditions under which the
/// relaxed adjustment formula is provably exact.
pub fn check_beta_frontdoor_criterion(
    dag: &Dag,
    x: &NodeId,
    y: &NodeId,
    z: &BTreeSet<NodeId>,
    d_a: &BTreeSet<NodeId>,
) -> Result<CriterionReport, GraphError> {
    for n in d_a {
        if !dag.is_observed(n)? {
            return Err(GraphError::UnobservedDa(n.clone()));
        }
    }
    check_beta_criterion_inner(dag, x, y, z, d_a, true)
}

fn check_beta_criterion_inner(
    dag: &Dag,
    x: &NodeId,
    y: &NodeId,
    z: &BTreeSet<NodeId>,
    d_a: &BTreeSet<NodeId>,
    with_da_conditions: bool,
) -> Result<CriterionReport, GraphError> {
    let singles = (BTreeSet::from([x.clone()]), BTreeSet::from([y.clone()]));
    check_disjoint(&[&singles.0, &singles.1, z, d_a])?;
    let alpha = alpha_paths(dag, x, y)?;
    let beta = beta_paths(dag, x, y, z)?;
    let unobserved = unobserved_in(dag, z)?;

    // 1: z intercepts every directed x -> y path.
    for p in directed_paths(dag, x, y)? {
        if !p.interior().iter().any(|n| z.contains(n)) {
            return Ok(CriterionReport::violated(1, Some(p), alpha, beta, unobserved));
        }
    }
    // 2: no unblocked back-door path from x into the mediator set.
    for zn in z {
        for p in backdoor_paths(dag, x, zn)? {
            if !path_blocked(dag, &p, EMPTY_SET)? {
                return Ok(CriterionReport::violated(2, Some(p), alpha, beta, unobserved));
            }
        }
    }
    // 3: back-door paths from the mediator to y blocked by {x} (plus d_a in
    // the relaxed form).
    let mut blockers: BTreeSet<NodeId> = BTreeSet::from([x.clone()]);
    blockers.extend(d_a.iter().cloned());
    for zn in z {
        for p in backdoor_paths(dag, zn, y)? {
            if !path_blocked(dag, &p, &blockers)? {
                return Ok(CriterionReport::violated(3, Some(p), alpha, beta, unobserved));
            }
        }
    }
    // 4: each d_a node sits at the head of the mediator with a clean back door.
    if with_da_conditions {
        for dn in d_a {
            let is_parent = z.iter().any(|zn| {
                dag.has_edge(dn, zn).unwrap_or(false)
            });
            if !is_parent {
                return Ok(CriterionReport::violated(4, None, alpha, beta, unobserved));
            }
            for zn in z {
                for p in backdoor_paths(dag, dn, zn)? {
                    if !path_blocked(dag, &p, EMPTY_SET)? {
                        return Ok(CriterionReport::violated(4, Some(p), alpha, beta, unobserved));
                    }
                }
            }
        }
    }
    Ok(CriterionReport::satisfied(alpha, beta, unobserved))
}

/// Random DAG on `n` nodes named `V0..V{n-1}`, each ordered pair of distinct
/// nodes drawn as an edge with probability `edge_prob` in a random
/// orientation order. All nodes are flagged observed. Deterministic in
/// `seed`; used by the property suites.
pub fn random_dag(n: usize, edge_prob: f64, seed: u64) -> Dag {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<NodeId> = (0..n).map(|i| NodeId::new(format!("V{i}"))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random::<f64>() < edge_prob {
                edges.push((names[order[a]].clone(), names[order[b]].clone()));
            }
        }
    }
    let observed: BTreeSet<NodeId> = names.iter().cloned().collect();
    Dag::new(names, edges, observed).expect("construction follows a topological order")
}
