//! Discrete Bayesian networks: variables, conditional probability tables,
//! the joint distribution they define, and structural statistics.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use std::fmt;

use thiserror::Error;

/// Tolerance for CPT rows summing to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Dense index of a variable within its network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum BnError {
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("variable {0} bound to value index {1}, outside its domain")]
    ValueOutOfRange(String, usize),
    #[error("CPT of {var} has {found} entries, expected {expected}")]
    TableShape { var: String, expected: usize, found: usize },
    #[error("variable {0} has no CPT")]
    MissingCpt(String),
    #[error("variable {0} has more than one CPT")]
    DuplicateCpt(String),
    #[error("variable {0} lists parent {1} twice")]
    DuplicateParent(String, String),
    #[error("assignment leaves {0} unbound")]
    PartialAssignment(String),
    #[error("cycle detected through edge {from} -> {to}")]
    Cycle { from: String, to: String },
    #[error("network has invariant violations: {0}")]
    Invalid(String),
    #[error("{0}")]
    Binding(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub domain: Vec<String>,
    /// Opaque `property` strings carried through BIF round-trips.
    pub properties: Vec<String>,
}

impl Variable {
    pub fn card(&self) -> usize {
        self.domain.len()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.domain.iter().position(|l| l == label)
    }
}

/// Conditional probability table of one variable.
///
/// Rows are laid out in mixed-radix order over `parents` (last parent varies
/// fastest); each row holds one probability per value of the owner.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt {
    pub owner: VarId,
    pub parents: Vec<VarId>,
    card: usize,
    parent_cards: Vec<usize>,
    table: Vec<f64>,
}

impl Cpt {
    pub fn card(&self) -> usize {
        self.card
    }

    pub fn parent_cards(&self) -> &[usize] {
        &self.parent_cards
    }

    pub fn row_count(&self) -> usize {
        self.parent_cards.iter().product()
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Row index for the given parent values (in `parents` order).
    pub fn row_index(&self, parent_values: &[usize]) -> usize {
        debug_assert_eq!(parent_values.len(), self.parent_cards.len());
        parent_values
            .iter()
            .zip(&self.parent_cards)
            .fold(0, |acc, (&v, &c)| acc * c + v)
    }

    /// Inverse of [`Cpt::row_index`].
    pub fn row_values(&self, mut row: usize) -> Vec<usize> {
        let mut values = vec![0; self.parent_cards.len()];
        for (slot, &c) in values.iter_mut().zip(&self.parent_cards).rev() {
            *slot = row % c;
            row /= c;
        }
        values
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.table[row * self.card..(row + 1) * self.card]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.table.chunks(self.card.max(1))
    }

    pub fn prob(&self, value: usize, parent_values: &[usize]) -> f64 {
        self.row(self.row_index(parent_values))[value]
    }
}

/// A discrete partial assignment `variable -> value index`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(BTreeMap<VarId, usize>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, var: VarId, value: usize) -> Option<usize> {
        self.0.insert(var, value)
    }

    pub fn with(mut self, var: VarId, value: usize) -> Self {
        self.bind(var, value);
        self
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.0.get(&var).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    /// True if `full` (indexed by variable id) agrees with every binding.
    pub fn is_consistent_with(&self, full: &[usize]) -> bool {
        self.iter().all(|(v, d)| full.get(v.0) == Some(&d))
    }

    /// Checks every binding against `bn`'s variables and domains.
    pub fn check(&self, bn: &BayesianNetwork) -> Result<(), BnError> {
        for (var, value) in self.iter() {
            let v = bn
                .variables
                .get(var.0)
                .ok_or_else(|| BnError::UnknownVariable(var.to_string()))?;
            if value >= v.card() {
                return Err(BnError::ValueOutOfRange(v.name.clone(), value));
            }
        }
        Ok(())
    }
}

impl FromIterator<(VarId, usize)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (VarId, usize)>>(iter: T) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

/// One broken invariant found by [`BayesianNetwork::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyDomain { var: String },
    DuplicateLabel { var: String, label: String },
    DuplicateName { name: String },
    NonCanonicalParents { var: String },
    EntryOutOfRange { var: String, row: usize, value: f64 },
    RowSum { var: String, row: usize, sum: f64 },
    Cycle { from: String, to: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyDomain { var } => write!(f, "{var}: empty domain"),
            Violation::DuplicateLabel { var, label } => {
                write!(f, "{var}: duplicate domain label {label:?}")
            }
            Violation::DuplicateName { name } => write!(f, "duplicate variable name {name:?}"),
            Violation::NonCanonicalParents { var } => {
                write!(f, "{var}: parents not in ascending id order")
            }
            Violation::EntryOutOfRange { var, row, value } => {
                write!(f, "{var} row {row}: entry {value} outside [0, 1]")
            }
            Violation::RowSum { var, row, sum } => write!(f, "{var} row {row}: sums to {sum}"),
            Violation::Cycle { from, to } => write!(f, "cycle through edge {from} -> {to}"),
        }
    }
}

/// Structural statistics in the layout of the usual benchmark tables.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkStats {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub max_in_degree: usize,
    pub max_domain_size: usize,
    /// Sum of Markov-blanket sizes; the average is this over `vertex_count`.
    pub markov_blanket_total: usize,
    pub avg_markov_blanket: f64,
    /// Free parameters: `sum_v rows(v) * (|D_v| - 1)`.
    pub parameter_count: usize,
    /// Stored CPT entries: `sum_v rows(v) * |D_v|`.
    pub cpt_entry_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BayesianNetwork {
    pub name: String,
    pub properties: Vec<String>,
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    children: Vec<Vec<VarId>>,
}

impl BayesianNetwork {
    /// Assembles a network from parts. Only shape is checked here (ids dense,
    /// one CPT per variable, table sizes); numeric and acyclicity invariants
    /// are reported by [`BayesianNetwork::validate`].
    pub fn new(
        name: impl Into<String>,
        variables: Vec<Variable>,
        cpts: Vec<(VarId, Vec<VarId>, Vec<f64>)>,
    ) -> Result<Self, BnError> {
        for (i, v) in variables.iter().enumerate() {
            if v.id.0 != i {
                return Err(BnError::UnknownVariable(format!(
                    "{} has id {} at position {i}",
                    v.name, v.id.0
                )));
            }
        }
        let mut slots: Vec<Option<Cpt>> = vec![None; variables.len()];
        for (owner, parents, table) in cpts {
            let var = variables
                .get(owner.0)
                .ok_or_else(|| BnError::UnknownVariable(owner.to_string()))?;
            let mut parent_cards = Vec::with_capacity(parents.len());
            for p in &parents {
                let pv = variables
                    .get(p.0)
                    .ok_or_else(|| BnError::UnknownVariable(p.to_string()))?;
                parent_cards.push(pv.card());
            }
            let expected = parent_cards.iter().product::<usize>() * var.card();
            if table.len() != expected {
                return Err(BnError::TableShape {
                    var: var.name.clone(),
                    expected,
                    found: table.len(),
                });
            }
            if slots[owner.0].is_some() {
                return Err(BnError::DuplicateCpt(var.name.clone()));
            }
            slots[owner.0] = Some(Cpt {
                owner,
                parents,
                card: var.card(),
                parent_cards,
                table,
            });
        }
        let cpts = slots
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| BnError::MissingCpt(variables[i].name.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let mut children = vec![Vec::new(); variables.len()];
        for cpt in &cpts {
            for p in &cpt.parents {
                if !children[p.0].contains(&cpt.owner) {
                    children[p.0].push(cpt.owner);
                }
            }
        }
        for c in &mut children {
            c.sort();
        }
        Ok(BayesianNetwork {
            name: name.into(),
            properties: Vec::new(),
            variables,
            cpts,
            children,
        })
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn variables_mut(&mut self) -> &mut [Variable] {
        &mut self.variables
    }

    pub fn cpt(&self, id: VarId) -> &Cpt {
        &self.cpts[id.0]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn parents(&self, id: VarId) -> &[VarId] {
        &self.cpts[id.0].parents
    }

    pub fn children(&self, id: VarId) -> &[VarId] {
        &self.children[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.variables.len()).map(VarId)
    }

    pub fn find(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    /// All edges `(parent, child)` in ascending order.
    pub fn edges(&self) -> BTreeSet<(VarId, VarId)> {
        self.cpts
            .iter()
            .flat_map(|c| c.parents.iter().map(move |&p| (p, c.owner)))
            .collect()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut names = BTreeSet::new();
        for v in &self.variables {
            if !names.insert(v.name.as_str()) {
                out.push(Violation::DuplicateName {
                    name: v.name.clone(),
                });
            }
            if v.domain.is_empty() {
                out.push(Violation::EmptyDomain {
                    var: v.name.clone(),
                });
            }
            let mut labels = BTreeSet::new();
            for l in &v.domain {
                if !labels.insert(l.as_str()) {
                    out.push(Violation::DuplicateLabel {
                        var: v.name.clone(),
                        label: l.clone(),
                    });
                }
            }
        }
        for cpt in &self.cpts {
            let name = &self.variables[cpt.owner.0].name;
            if cpt.parents.windows(2).any(|w| w[0] >= w[1]) || cpt.parents.contains(&cpt.owner)
            {
                out.push(Violation::NonCanonicalParents { var: name.clone() });
            }
            if cpt.card == 0 {
                continue;
            }
            for (row, probs) in cpt.rows().enumerate() {
                if let Some(&bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    out.push(Violation::EntryOutOfRange {
                        var: name.clone(),
                        row,
                        value: bad,
                    });
                }
                let sum: f64 = probs.iter().sum();
                if sum.is_nan() || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    out.push(Violation::RowSum {
                        var: name.clone(),
                        row,
                        sum,
                    });
                }
            }
        }
        if let Err(BnError::Cycle { from, to }) = self.topological_order() {
            out.push(Violation::Cycle { from, to });
        }
        out
    }

    /// Fails with [`BnError::Invalid`] listing every violation.
    pub fn ensure_valid(&self) -> Result<(), BnError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            let msg = violations
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; ");
            Err(BnError::Invalid(msg))
        }
    }

    /// Kahn's algorithm; among ready vertices the smallest id goes first.
    pub fn topological_order(&self) -> Result<Vec<VarId>, BnError> {
        let n = self.variables.len();
        let mut indegree: Vec<usize> = (0..n)
            .map(|i| {
                let mut ps = self.cpts[i].parents.clone();
                ps.dedup();
                ps.len()
            })
            .collect();
        let mut ready: BinaryHeap<Reverse<usize>> = (0..n)
            .filter(|&i| indegree[i] == 0)
            .map(Reverse)
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(v)) = ready.pop() {
            order.push(VarId(v));
            for &c in &self.children[v] {
                indegree[c.0] -= 1;
                if indegree[c.0] == 0 {
                    ready.push(Reverse(c.0));
                }
            }
        }
        if order.len() == n {
            return Ok(order);
        }
        // Every leftover vertex has a leftover parent; walk parents until one repeats.
        let mut seen = vec![false; n];
        let mut cur = (0..n).find(|&i| indegree[i] > 0).unwrap();
        loop {
            seen[cur] = true;
            let parent = self.cpts[cur]
                .parents
                .iter()
                .map(|p| p.0)
                .find(|&p| indegree[p] > 0)
                .unwrap();
            if seen[parent] {
                return Err(BnError::Cycle {
                    from: self.variables[parent].name.clone(),
                    to: self.variables[cur].name.clone(),
                });
            }
            cur = parent;
        }
    }

    /// Product of CPT entries along a full assignment.
    pub fn joint_probability(&self, full: &Assignment) -> Result<f64, BnError> {
        full.check(self)?;
        let mut values = Vec::with_capacity(self.len());
        for v in &self.variables {
            values.push(
                full.get(v.id)
                    .ok_or_else(|| BnError::PartialAssignment(v.name.clone()))?,
            );
        }
        Ok(self.joint_of_values(&values))
    }

    /// Same as [`BayesianNetwork::joint_probability`] over a dense value
    /// vector indexed by variable id; no bounds checking beyond indexing.
    pub fn joint_of_values(&self, values: &[usize]) -> f64 {
        let mut parent_values = Vec::new();
        self.cpts.iter().fold(1.0, |acc, cpt| {
            parent_values.clear();
            parent_values.extend(cpt.parents.iter().map(|p| values[p.0]));
            acc * cpt.prob(values[cpt.owner.0], &parent_values)
        })
    }

    pub fn markov_blanket(&self, id: VarId) -> Result<BTreeSet<VarId>, BnError> {
        if id.0 >= self.len() {
            return Err(BnError::UnknownVariable(id.to_string()));
        }
        let mut blanket: BTreeSet<VarId> = self.parents(id).iter().copied().collect();
        for &c in self.children(id) {
            blanket.insert(c);
            blanket.extend(self.parents(c).iter().copied());
        }
        blanket.remove(&id);
        Ok(blanket)
    }

    pub fn stats(&self) -> NetworkStats {
        let vertex_count = self.len();
        let markov_blanket_total: usize = self
            .ids()
            .map(|v| self.markov_blanket(v).map_or(0, |b| b.len()))
            .sum();
        NetworkStats {
            vertex_count,
            edge_count: self.edges().len(),
            max_in_degree: self.cpts.iter().map(|c| c.parents.len()).max().unwrap_or(0),
            max_domain_size: self.variables.iter().map(Variable::card).max().unwrap_or(0),
            markov_blanket_total,
            avg_markov_blanket: if vertex_count == 0 {
                0.0
            } else {
                markov_blanket_total as f64 / vertex_count as f64
            },
            parameter_count: self
                .cpts
                .iter()
                .map(|c| c.row_count() * c.card.saturating_sub(1))
                .sum(),
            cpt_entry_count: self.cpts.iter().map(|c| c.table.len()).sum(),
        }
    }

    /// Sub-network induced by `keep`, which must be closed under parents.
    /// Variables are renumbered densely in ascending original id order.
    pub fn sub_network(&self, keep: &[VarId]) -> Result<BayesianNetwork, BnError> {
        let mut kept: Vec<VarId> = keep.to_vec();
        kept.sort();
        kept.dedup();
        let mut remap = vec![None; self.len()];
        for (new, old) in kept.iter().enumerate() {
            if old.0 >= self.len() {
                return Err(BnError::UnknownVariable(old.to_string()));
            }
            remap[old.0] = Some(VarId(new));
        }
        let mut variables = Vec::with_capacity(kept.len());
        let mut cpts = Vec::with_capacity(kept.len());
        for old in &kept {
            let v = &self.variables[old.0];
            let new_id = remap[old.0].unwrap();
            let cpt = &self.cpts[old.0];
            let parents = cpt
                .parents
                .iter()
                .map(|p| {
                    remap[p.0].ok_or_else(|| {
                        BnError::Invalid(format!(
                            "{} kept without its parent {}",
                            v.name, self.variables[p.0].name
                        ))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            variables.push(Variable {
                id: new_id,
                ..v.clone()
            });
            cpts.push((new_id, parents, cpt.table.clone()));
        }
        let mut bn = BayesianNetwork::new(self.name.clone(), variables, cpts)?;
        bn.properties = self.properties.clone();
        Ok(bn)
    }
}

/// Incremental construction with name-based references and arbitrary parent
/// order; tables are re-indexed so parents end up in ascending id order.
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    name: String,
    variables: Vec<Variable>,
    cpts: Vec<(VarId, Vec<VarId>, Vec<f64>)>,
}

impl NetworkBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        NetworkBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn variable<S: Into<String>>(
        &mut self,
        name: impl Into<String>,
        domain: impl IntoIterator<Item = S>,
    ) -> VarId {
        let id = VarId(self.variables.len());
        self.variables.push(Variable {
            id,
            name: name.into(),
            domain: domain.into_iter().map(Into::into).collect(),
            properties: Vec::new(),
        });
        id
    }

    pub fn variable_mut(&mut self, id: VarId) -> &mut Variable {
        &mut self.variables[id.0]
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    /// `rows` are listed in mixed-radix order over `parents` as given (last
    /// parent fastest), one probability vector per parent combination.
    pub fn cpt(&mut self, owner: VarId, parents: &[VarId], rows: &[Vec<f64>]) -> Result<(), BnError> {
        let name = |id: VarId| self.variables[id.0].name.clone();
        for (i, p) in parents.iter().enumerate() {
            if p.0 >= self.variables.len() {
                return Err(BnError::UnknownVariable(p.to_string()));
            }
            if parents[..i].contains(p) {
                return Err(BnError::DuplicateParent(name(owner), name(*p)));
            }
        }
        let card = self.variables[owner.0].card();
        let given_cards: Vec<usize> = parents.iter().map(|p| self.variables[p.0].card()).collect();
        let row_count: usize = given_cards.iter().product();
        if rows.len() != row_count || rows.iter().any(|r| r.len() != card) {
            return Err(BnError::TableShape {
                var: name(owner),
                expected: row_count * card,
                found: rows.iter().map(Vec::len).sum(),
            });
        }
        let mut sorted: Vec<(VarId, usize)> = parents.iter().copied().zip(0..).collect();
        sorted.sort();
        let canon_parents: Vec<VarId> = sorted.iter().map(|&(p, _)| p).collect();
        let canon_cards: Vec<usize> = sorted.iter().map(|&(p, _)| self.variables[p.0].card()).collect();
        let mut table = vec![0.0; row_count * card];
        let mut given = vec![0usize; parents.len()];
        for (row_idx, row) in rows.iter().enumerate() {
            let mut r = row_idx;
            for (slot, &c) in given.iter_mut().zip(&given_cards).rev() {
                *slot = r % c;
                r /= c;
            }
            let canon_idx = sorted
                .iter()
                .zip(&canon_cards)
                .fold(0, |acc, (&(_, pos), &c)| acc * c + given[pos]);
            table[canon_idx * card..(canon_idx + 1) * card].copy_from_slice(row);
        }
        self.cpts.retain(|(o, _, _)| *o != owner);
        self.cpts.push((owner, canon_parents, table));
        Ok(())
    }

    pub fn build(self) -> Result<BayesianNetwork, BnError> {
        BayesianNetwork::new(self.name, self.variables, self.cpts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::student_mood;

    fn ids(names: &[&str], bn: &BayesianNetwork) -> BTreeSet<VarId> {
        names.iter().map(|n| bn.find(n).unwrap()).collect()
    }

    #[test]
    fn student_mood_is_valid() {
        assert_eq!(student_mood().validate(), vec![]);
    }

    #[test]
    fn single_variable_network_is_valid() {
        let mut b = NetworkBuilder::new("one");
        let x = b.variable("x", ["a", "b"]);
        b.cpt(x, &[], &[vec![0.5, 0.5]]).unwrap();
        assert!(b.build().unwrap().validate().is_empty());
    }

    #[test]
    fn row_sum_violation_reported() {
        let mut b = NetworkBuilder::new("bad");
        let x = b.variable("x", ["a", "b"]);
        b.cpt(x, &[], &[vec![0.5, 0.4]]).unwrap();
        let v = b.build().unwrap().validate();
        assert_eq!(v.len(), 1);
        assert!(matches!(&v[0], Violation::RowSum { var, row: 0, .. } if var == "x"));
    }

    #[test]
    fn topological_order_of_fixture() {
        let bn = student_mood();
        let names: Vec<&str> = bn
            .topological_order()
            .unwrap()
            .into_iter()
            .map(|v| bn.variable(v).name.as_str())
            .collect();
        assert_eq!(names, ["Dif", "Prep", "Grade", "Mood"]);
    }

    #[test]
    fn topological_order_breaks_ties_by_id() {
        let mut b = NetworkBuilder::new("flat");
        for n in ["a", "b", "c"] {
            let v = b.variable(n, ["0", "1"]);
            b.cpt(v, &[], &[vec![0.5, 0.5]]).unwrap();
        }
        let order = b.build().unwrap().topological_order().unwrap();
        assert_eq!(order, vec![VarId(0), VarId(1), VarId(2)]);

        // child declared first must still come after its parent
        let mut b = NetworkBuilder::new("rev");
        let c = b.variable("c", ["0", "1"]);
        let p = b.variable("p", ["0", "1"]);
        b.cpt(p, &[], &[vec![0.5, 0.5]]).unwrap();
        b.cpt(c, &[p], &[vec![0.5, 0.5], vec![0.1, 0.9]]).unwrap();
        assert_eq!(b.build().unwrap().topological_order().unwrap(), vec![p, c]);
    }

    #[test]
    fn cycle_is_detected() {
        let mut b = NetworkBuilder::new("cyc");
        let a = b.variable("a", ["0", "1"]);
        let c = b.variable("b", ["0", "1"]);
        b.cpt(a, &[c], &[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        b.cpt(c, &[a], &[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let bn = b.build().unwrap();
        assert!(matches!(bn.topological_order(), Err(BnError::Cycle { .. })));
        assert!(bn.validate().iter().any(|v| matches!(v, Violation::Cycle { .. })));
    }

    #[test]
    fn joint_probability_of_quoted_assignment() {
        let bn = student_mood();
        let full = Assignment::new()
            .with(VarId(0), 0)
            .with(VarId(1), 1)
            .with(VarId(2), 0)
            .with(VarId(3), 0);
        let p = bn.joint_probability(&full).unwrap();
        assert!((p - 0.081).abs() < 1e-15, "{p}");
    }

    #[test]
    fn joint_probability_rejects_partial() {
        let bn = student_mood();
        let partial = Assignment::new().with(VarId(0), 0);
        assert!(matches!(
            bn.joint_probability(&partial),
            Err(BnError::PartialAssignment(_))
        ));
    }

    #[test]
    fn deterministic_chain_has_unit_path() {
        let mut b = NetworkBuilder::new("det");
        let a = b.variable("a", ["0", "1"]);
        let c = b.variable("c", ["0", "1"]);
        b.cpt(a, &[], &[vec![0.0, 1.0]]).unwrap();
        b.cpt(c, &[a], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let bn = b.build().unwrap();
        let full = Assignment::new().with(a, 1).with(c, 1);
        assert_eq!(bn.joint_probability(&full).unwrap(), 1.0);
    }

    #[test]
    fn markov_blankets() {
        let bn = student_mood();
        let g = bn.find("Grade").unwrap();
        assert_eq!(bn.markov_blanket(g).unwrap(), ids(&["Dif", "Prep", "Mood"], &bn));

        let mut b = NetworkBuilder::new("v");
        let a = b.variable("a", ["0", "1"]);
        let c = b.variable("c", ["0", "1"]);
        let bb = b.variable("b", ["0", "1"]);
        let lone = b.variable("lone", ["0", "1"]);
        for v in [a, bb, lone] {
            b.cpt(v, &[], &[vec![0.5, 0.5]]).unwrap();
        }
        b.cpt(c, &[a, bb], &vec![vec![0.5, 0.5]; 4]).unwrap();
        let bn = b.build().unwrap();
        assert_eq!(bn.markov_blanket(a).unwrap(), [c, bb].into_iter().collect());
        assert!(bn.markov_blanket(lone).unwrap().is_empty());
        assert!(bn.markov_blanket(VarId(9)).is_err());
    }

    #[test]
    fn stats_of_fixture_and_empty() {
        let s = student_mood().stats();
        assert_eq!((s.vertex_count, s.edge_count, s.max_in_degree), (4, 3, 2));
        assert_eq!(s.max_domain_size, 2);
        // |MB|: Dif {Prep, Grade}, Prep {Dif, Grade}, Grade {Dif, Prep, Mood}, Mood {Grade}
        assert_eq!(s.markov_blanket_total, 8);
        assert_eq!(s.parameter_count, 1 + 1 + 4 + 2);
        assert_eq!(s.cpt_entry_count, 2 + 2 + 8 + 4);

        let empty = BayesianNetwork::new("e", vec![], vec![]).unwrap().stats();
        assert_eq!(empty.vertex_count, 0);
        assert_eq!(empty.avg_markov_blanket, 0.0);
        assert_eq!(empty.parameter_count, 0);
    }

    #[test]
    fn builder_reindexes_parent_order() {
        // rows given with parents (q, p): last listed (p) varies fastest
        let mut b = NetworkBuilder::new("r");
        let p = b.variable("p", ["0", "1"]);
        let q = b.variable("q", ["0", "1", "2"]);
        let c = b.variable("c", ["0", "1"]);
        b.cpt(p, &[], &[vec![0.5, 0.5]]).unwrap();
        b.cpt(q, &[], &[vec![0.2, 0.3, 0.5]]).unwrap();
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 10.0, 1.0 - i as f64 / 10.0]).collect();
        b.cpt(c, &[q, p], &rows).unwrap();
        let bn = b.build().unwrap();
        let cpt = bn.cpt(c);
        assert_eq!(cpt.parents, vec![p, q]);
        for qv in 0..3 {
            for pv in 0..2 {
                let given = (qv * 2 + pv) as f64 / 10.0;
                assert_eq!(cpt.prob(0, &[pv, qv]), given);
            }
        }
    }

    #[test]
    fn sub_network_requires_parents() {
        let bn = student_mood();
        let sub = bn
            .sub_network(&[VarId(0), VarId(1), VarId(2)])
            .unwrap();
        assert_eq!(sub.len(), 3);
        assert!(sub.validate().is_empty());
        assert!(bn.sub_network(&[VarId(2)]).is_err());
    }
}
