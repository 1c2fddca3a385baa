//! Dense probability tables over a set of named variables.
//!
//! A [`ProbTable`] is the currency of every adjustment evaluator and oracle
//! comparison: a row-major float64 array over the product domain of its
//! variables. Full joints sum to 1; conditional tables sum to 1 per
//! conditioning slice with positive mass. Conditioning on a zero-probability
//! event yields the designated all-zero table, and such terms contribute 0 to
//! adjustment sums.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ScmError;
use crate::graph::NodeId;

/// Mass below which a conditioning event counts as impossible.
pub const ZERO_MASS: f64 = 0.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbTable {
    variables: Vec<NodeId>,
    domains: Vec<Vec<String>>,
    values: Vec<f64>,
}

impl ProbTable {
    /// Builds a table; `values` is row-major over `variables` in order, with
    /// the last variable's index varying fastest. Entries must be
    /// non-negative.
    pub fn new(
        variables: Vec<NodeId>,
        domains: Vec<Vec<String>>,
        values: Vec<f64>,
    ) -> Result<Self, ScmError> {
        if variables.len() != domains.len() {
            return Err(ScmError::TableShape(format!(
                "{} variables but {} domains",
                variables.len(),
                domains.len()
            )));
        }
        let cells: usize = domains.iter().map(Vec::len).product();
        if values.len() != cells {
            return Err(ScmError::TableShape(format!(
                "{} values for a {cells}-cell product domain",
                values.len()
            )));
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, &v)| v < 0.0) {
            return Err(ScmError::NegativeProbability { index: i, value: v });
        }
        Ok(ProbTable {
            variables,
            domains,
            values,
        })
    }

    /// All-zero table over the given variables.
    pub fn zero(variables: Vec<NodeId>, domains: Vec<Vec<String>>) -> Self {
        let cells = domains.iter().map(Vec::len).product();
        ProbTable {
            variables,
            domains,
            values: vec![0.0; cells],
        }
    }

    pub fn variables(&self) -> &[NodeId] {
        &self.variables
    }

    pub fn domains(&self) -> &[Vec<String>] {
        &self.domains
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.total() - 1.0).abs() <= tol
    }

    fn var_pos(&self, n: &NodeId) -> Result<usize, ScmError> {
        self.variables
            .iter()
            .position(|v| v == n)
            .ok_or_else(|| ScmError::UnknownVariable(n.clone()))
    }

    fn value_index(&self, pos: usize, label: &str) -> Result<usize, ScmError> {
        self.domains[pos]
            .iter()
            .position(|v| v == label)
            .ok_or_else(|| ScmError::ValueOutOfDomain {
                node: self.variables[pos].clone(),
                value: label.to_owned(),
            })
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.variables.len()];
        for i in (0..self.variables.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.domains[i + 1].len();
        }
        s
    }

    /// Value at a full assignment given as per-variable value indices.
    pub fn at(&self, idxs: &[usize]) -> f64 {
        debug_assert_eq!(idxs.len(), self.variables.len());
        let strides = self.strides();
        let off: usize = idxs.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.values[off]
    }

    /// Iterates over all full assignments as index vectors, row-major.
    pub fn assignments(&self) -> AssignmentIter {
        AssignmentIter {
            cards: self.domains.iter().map(Vec::len).collect(),
            next: if self.values.is_empty() { None } else { Some(vec![0; self.variables.len()]) },
        }
    }

    fn positions_and_indices(
        &self,
        assign: &BTreeMap<NodeId, String>,
    ) -> Result<Vec<(usize, usize)>, ScmError> {
        assign
            .iter()
            .map(|(n, v)| {
                let pos = self.var_pos(n)?;
                let idx = self.value_index(pos, v)?;
                Ok((pos, idx))
            })
            .collect()
    }

    /// Marginal mass of a (possibly partial) assignment.
    pub fn mass(&self, assign: &BTreeMap<NodeId, String>) -> Result<f64, ScmError> {
        let fixed = self.positions_and_indices(assign)?;
        let strides = self.strides();
        let mut total = 0.0;
        'cells: for (off, &v) in self.values.iter().enumerate() {
            for &(pos, idx) in &fixed {
                if (off / strides[pos]) % self.domains[pos].len() != idx {
                    continue 'cells;
                }
            }
            total += v;
        }
        Ok(total)
    }

    /// Conditional probability P(target | given); 0 when P(given) = 0.
    pub fn cond_prob(
        &self,
        target: &BTreeMap<NodeId, String>,
        given: &BTreeMap<NodeId, String>,
    ) -> Result<f64, ScmError> {
        let denom = self.mass(given)?;
        if denom <= ZERO_MASS {
            return Ok(0.0);
        }
        let mut both = given.clone();
        for (n, v) in target {
            if both.insert(n.clone(), v.clone()).is_some() {
                return Err(ScmError::TableShape(format!(
                    "variable `{n}` appears in both target and given"
                )));
            }
        }
        Ok(self.mass(&both)? / denom)
    }

    /// Sums out every variable not in `keep`, preserving this table's
    /// variable order.
    pub fn marginal(&self, keep: &BTreeSet<NodeId>) -> Result<ProbTable, ScmError> {
        for n in keep {
            self.var_pos(n)?;
        }
        let kept: Vec<usize> = (0..self.variables.len())
            .filter(|&i| keep.contains(&self.variables[i]))
            .collect();
        let out_vars: Vec<NodeId> = kept.iter().map(|&i| self.variables[i].clone()).collect();
        let out_domains: Vec<Vec<String>> = kept.iter().map(|&i| self.domains[i].clone()).collect();
        let out_cells: usize = out_domains.iter().map(Vec::len).product();
        let mut out_values = vec![0.0; out_cells];

        let strides = self.strides();
        let mut out_strides = vec![1usize; kept.len()];
        for i in (0..kept.len().saturating_sub(1)).rev() {
            out_strides[i] = out_strides[i + 1] * out_domains[i + 1].len();
        }
        for (off, &v) in self.values.iter().enumerate() {
            let mut out_off = 0;
            for (k, &pos) in kept.iter().enumerate() {
                let idx = (off / strides[pos]) % self.domains[pos].len();
                out_off += idx * out_strides[k];
            }
            out_values[out_off] += v;
        }
        ProbTable::new(out_vars, out_domains, out_values)
    }

    /// P(target | given) as a table over the target variables. Returns the
    /// all-zero table when the conditioning event has zero mass.
    pub fn conditional(
        &self,
        target: &BTreeSet<NodeId>,
        given: &BTreeMap<NodeId, String>,
    ) -> Result<ProbTable, ScmError> {
        for n in target {
            self.var_pos(n)?;
            if given.contains_key(n) {
                return Err(ScmError::TableShape(format!(
                    "variable `{n}` appears in both target and given"
                )));
            }
        }
        let fixed = self.positions_and_indices(given)?;
        let strides = self.strides();

        let kept: Vec<usize> = (0..self.variables.len())
            .filter(|&i| target.contains(&self.variables[i]))
            .collect();
        let out_vars: Vec<NodeId> = kept.iter().map(|&i| self.variables[i].clone()).collect();
        let out_domains: Vec<Vec<String>> = kept.iter().map(|&i| self.domains[i].clone()).collect();
        let mut out = ProbTable::zero(out_vars, out_domains);
        let mut out_strides = vec![1usize; kept.len()];
        for i in (0..kept.len().saturating_sub(1)).rev() {
            out_strides[i] = out_strides[i + 1] * out.domains[i + 1].len();
        }

        let mut denom = 0.0;
        'cells: for (off, &v) in self.values.iter().enumerate() {
            for &(pos, idx) in &fixed {
                if (off / strides[pos]) % self.domains[pos].len() != idx {
                    continue 'cells;
                }
            }
            denom += v;
            let mut out_off = 0;
            for (k, &pos) in kept.iter().enumerate() {
                let idx = (off / strides[pos]) % self.domains[pos].len();
                out_off += idx * out_strides[k];
            }
            out.values[out_off] += v;
        }
        if denom <= ZERO_MASS {
            for v in &mut out.values {
                *v = 0.0;
            }
            return Ok(out);
        }
        for v in &mut out.values {
            *v /= denom;
        }
        Ok(out)
    }

    /// P(target | given) over every conditioning assignment, as a table whose
    /// variables are `given ++ target` in the order passed. Slices with zero
    /// conditioning mass are left all-zero.
    pub fn conditional_table(
        &self,
        target: &[NodeId],
        given: &[NodeId],
    ) -> Result<ProbTable, ScmError> {
        let mut out_vars: Vec<NodeId> = Vec::with_capacity(given.len() + target.len());
        out_vars.extend(given.iter().cloned());
        out_vars.extend(target.iter().cloned());
        {
            let mut seen = BTreeSet::new();
            for v in &out_vars {
                if !seen.insert(v.clone()) {
                    return Err(ScmError::TableShape(format!(
                        "variable `{v}` appears in both target and given"
                    )));
                }
            }
        }
        let pos: Vec<usize> = out_vars
            .iter()
            .map(|n| self.var_pos(n))
            .collect::<Result<_, _>>()?;
        let out_domains: Vec<Vec<String>> = pos.iter().map(|&p| self.domains[p].clone()).collect();
        let mut out = ProbTable::zero(out_vars, out_domains);
        let mut out_strides = vec![1usize; out.variables.len()];
        for i in (0..out.variables.len().saturating_sub(1)).rev() {
            out_strides[i] = out_strides[i + 1] * out.domains[i + 1].len();
        }
        let given_cells: usize = (0..given.len()).map(|i| out.domains[i].len()).product();
        let mut slice_mass = vec![0.0; given_cells.max(1)];

        let strides = self.strides();
        // First pass: joint mass of (given, target) cells and per-slice mass.
        for (off, &v) in self.values.iter().enumerate() {
            let mut out_off = 0;
            let mut slice_off = 0;
            for (k, &p) in pos.iter().enumerate() {
                let idx = (off / strides[p]) % self.domains[p].len();
                out_off += idx * out_strides[k];
                if k < given.len() {
                    slice_off = slice_off * out.domains[k].len() + idx;
                }
            }
            out.values[out_off] += v;
            slice_mass[slice_off] += v;
        }
        // Second pass: normalize per conditioning slice.
        let target_cells: usize = (given.len()..out.variables.len())
            .map(|i| out.domains[i].len())
            .product();
        for (s, &m) in slice_mass.iter().enumerate() {
            let base = s * target_cells;
            if m <= ZERO_MASS {
                for v in &mut out.values[base..base + target_cells] {
                    *v = 0.0;
                }
            } else {
                for v in &mut out.values[base..base + target_cells] {
                    *v /= m;
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute entry difference against `other`, which must cover
    /// the same variables and domains (in any variable order).
    pub fn max_abs_diff(&self, other: &ProbTable) -> Result<f64, ScmError> {
        if self.variables.len() != other.variables.len() {
            return Err(ScmError::TableShape("variable sets differ".into()));
        }
        let perm: Vec<usize> = self
            .variables
            .iter()
            .map(|n| other.var_pos(n))
            .collect::<Result<_, _>>()?;
        for (i, &p) in perm.iter().enumerate() {
            if self.domains[i] != other.domains[p] {
                return Err(ScmError::TableShape(format!(
                    "domains of `{}` differ",
                    self.variables[i]
                )));
            }
        }
        let mut worst = 0.0f64;
        let mut other_idxs = vec![0usize; perm.len()];
        for idxs in self.assignments() {
            for (i, &p) in perm.iter().enumerate() {
                other_idxs[p] = idxs[i];
            }
            worst = worst.max((self.at(&idxs) - other.at(&other_idxs)).abs());
        }
        Ok(worst)
    }
}

impl fmt::Display for ProbTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for idxs in self.assignments() {
            let assign: Vec<String> = idxs
                .iter()
                .enumerate()
                .map(|(i, &v)| format!("{}={}", self.variables[i], self.domains[i][v]))
                .collect();
            writeln!(f, "{}: {:.12}", assign.join(", "), self.at(&idxs))?;
        }
        Ok(())
    }
}

/// Row-major odometer over the product domain.
pub struct AssignmentIter {
    cards: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for AssignmentIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut pos = self.cards.len();
        loop {
            if pos == 0 {
                self.next = None;
                break;
            }
            pos -= 1;
            succ[pos] += 1;
            if succ[pos] < self.cards[pos] {
                self.next = Some(succ);
                break;
            }
            succ[pos] = 0;
        }
        Some(current)
    }
}

/// Iterates over all assignments of the given cardinalities.
pub fn index_product(cards: &[usize]) -> AssignmentIter {
    AssignmentIter {
        cards: cards.to_vec(),
        next: if cards.iter().any(|&c| c == 0) {
            None
        } else {
            Some(vec![0; cards.len()])
        },
    }
}
