//! Vtrees and probabilistic sentential decision diagrams over boolean
//! variables: parsing, structural validation and evaluation.
//!
//! Vtree format, one record per line, `c` starts a comment:
//!
//! ```text
//! L <id> <variable>       leaf
//! I <id> <left> <right>   internal node
//! ```
//!
//! The root is the one node that is nobody's child.
//!
//! PSDD format, children before parents, the root is the last record:
//!
//! ```text
//! T <id> <vtree> <theta>                      x:theta at a vtree leaf
//! L <id> <vtree> <var> | L <id> <vtree> -<var> literal
//! F <id> <vtree>                              false
//! D <id> <vtree> <k> {<prime> <sub> <theta>}  decision with k elements
//! ```
//!
//! A decision at vtree node `v` must have primes tagged with `v`'s left
//! child and subs tagged with its right child, except that a `F` sub may
//! carry any tag. Element parameters are non-negative, sum to one, and are
//! zero exactly for `F` subs.

use std::collections::HashMap;

use thiserror::Error;

use crate::bn::VarId;
use crate::symbolic::SymbolicBn;

/// Largest left-variable count [`Psdd::validate_partition`] enumerates.
pub const PARTITION_ENUMERATION_BOUND: usize = 20;
/// Largest variable count [`compare_with_bn`] enumerates.
pub const COMPARE_ENUMERATION_BOUND: usize = 20;
const PARAMETER_TOLERANCE: f64 = 1e-9;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PsddError {
    #[error("{file} line {line}: {msg}")]
    Syntax { file: &'static str, line: usize, msg: String },
    #[error("{file} line {line}: reference to undefined node {id}")]
    Dangling { file: &'static str, line: usize, id: String },
    #[error("psdd line {line}: {msg}")]
    Parameter { line: usize, msg: String },
    #[error("psdd line {line}: {msg}")]
    Respect { line: usize, msg: String },
    #[error("vtree: {0}")]
    Vtree(String),
    #[error("decision node {node} has {count} left variables, more than the enumeration bound {bound}")]
    EnumerationBound { node: String, count: usize, bound: usize },
    #[error("structural error: {0}")]
    Structural(String),
    #[error("mapping: {0}")]
    Mapping(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VtreeNode {
    Leaf { var: usize },
    Internal { left: usize, right: usize },
}

#[derive(Clone, Debug)]
pub struct Vtree {
    nodes: Vec<VtreeNode>,
    ids: Vec<String>,
    root: usize,
    variables: Vec<String>,
    /// Variables below each node, ascending.
    scope: Vec<Vec<usize>>,
}

impl Vtree {
    pub fn parse(text: &str) -> Result<Vtree, PsddError> {
        let mut nodes = Vec::new();
        let mut ids: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut variables: Vec<String> = Vec::new();
        let mut has_parent: Vec<bool> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let fields: Vec<&str> = raw.split_whitespace().collect();
            let syntax = |msg: &str| PsddError::Syntax {
                file: "vtree",
                line,
                msg: msg.to_string(),
            };
            let node = match fields.as_slice() {
                [] => continue,
                [c, ..] if *c == "c" => continue,
                ["L", id, var] => {
                    if variables.iter().any(|v| v == var) {
                        return Err(syntax(&format!("variable {var} labels two leaves")));
                    }
                    variables.push(var.to_string());
                    (id, VtreeNode::Leaf { var: variables.len() - 1 })
                }
                ["I", id, left, right] => {
                    let mut child = |c: &str| match index.get(c) {
                        Some(&i) if has_parent[i] => Err(PsddError::Vtree(format!("node {c} has two parents"))),
                        Some(&i) => {
                            has_parent[i] = true;
                            Ok(i)
                        }
                        None => Err(PsddError::Dangling {
                            file: "vtree",
                            line,
                            id: c.to_string(),
                        }),
                    };
                    let left = child(left)?;
                    let right = child(right)?;
                    (id, VtreeNode::Internal { left, right })
                }
                _ => return Err(syntax("expected 'L <id> <var>' or 'I <id> <left> <right>'")),
            };
            let (id, node) = node;
            if index.insert(id.to_string(), nodes.len()).is_some() {
                return Err(syntax(&format!("node id {id} defined twice")));
            }
            ids.push(id.to_string());
            nodes.push(node);
            has_parent.push(false);
        }
        let roots: Vec<usize> = (0..nodes.len()).filter(|&i| !has_parent[i]).collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(PsddError::Vtree("empty vtree".into())),
            _ => return Err(PsddError::Vtree(format!("{} unconnected roots", roots.len()))),
        };
        let mut scope: Vec<Vec<usize>> = Vec::with_capacity(nodes.len());
        for node in &nodes {
            let s = match node {
                VtreeNode::Leaf { var } => vec![*var],
                VtreeNode::Internal { left, right } => {
                    let mut s = [scope[*left].clone(), scope[*right].clone()].concat();
                    s.sort_unstable();
                    s
                }
            };
            scope.push(s);
        }
        Ok(Vtree {
            nodes,
            ids,
            root,
            variables,
            scope,
        })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &VtreeNode {
        &self.nodes[i]
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    /// Variables below node `i`.
    pub fn scope(&self, i: usize) -> &[usize] {
        &self.scope[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Element {
    pub prime: usize,
    pub sub: usize,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PsddNode {
    /// `x:theta`.
    Top { var: usize, theta: f64 },
    Literal { var: usize, positive: bool },
    False,
    Decision { elements: Vec<Element> },
}

#[derive(Clone, Debug)]
struct Record {
    id: String,
    vtree: usize,
    node: PsddNode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionVerdict {
    pub node: String,
    pub consistent: bool,
    pub exclusive: bool,
    pub exhaustive: bool,
}

impl DecisionVerdict {
    pub fn passes(&self) -> bool {
        self.consistent && self.exclusive && self.exhaustive
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartitionReport {
    pub decisions: Vec<DecisionVerdict>,
}

impl PartitionReport {
    pub fn all_pass(&self) -> bool {
        self.decisions.iter().all(DecisionVerdict::passes)
    }
}

/// Canonical-form diagnostics; evaluation does not depend on them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Diagnostics {
    /// No decision node has a single element.
    pub trimmed: bool,
    /// No decision node repeats a sub.
    pub compressed: bool,
}

#[derive(Clone, Debug)]
pub struct Psdd {
    vtree: Vtree,
    records: Vec<Record>,
    /// Nodes reachable from the root, children first.
    reachable: Vec<usize>,
}

fn param(s: &str, line: usize) -> Result<f64, PsddError> {
    s.parse::<f64>()
        .ok()
        .filter(|p| p.is_finite())
        .ok_or_else(|| PsddError::Parameter {
            line,
            msg: format!("invalid parameter {s:?}"),
        })
}

/// Parses `vtree_text` and `psdd_text` and checks parameters and vtree
/// respect. Partitions are checked separately by
/// [`Psdd::validate_partition`].
pub fn parse_psdd(vtree_text: &str, psdd_text: &str) -> Result<Psdd, PsddError> {
    let vtree = Vtree::parse(vtree_text)?;
    let mut vt_index: HashMap<&str, usize> = HashMap::new();
    for i in 0..vtree.len() {
        vt_index.insert(vtree.id(i), i);
    }
    let mut records: Vec<Record> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut lines: Vec<usize> = Vec::new();
    for (n, raw) in psdd_text.lines().enumerate() {
        let line = n + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() || fields[0] == "c" {
            continue;
        }
        let syntax = |msg: String| PsddError::Syntax {
            file: "psdd",
            line,
            msg,
        };
        if fields.len() < 3 {
            return Err(syntax("record needs a kind, an id and a vtree node".into()));
        }
        let id = fields[1];
        let vt = *vt_index.get(fields[2]).ok_or_else(|| PsddError::Dangling {
            file: "psdd",
            line,
            id: format!("vtree {}", fields[2]),
        })?;
        let respect = |msg: String| PsddError::Respect { line, msg };
        let leaf_var = || match vtree.node(vt) {
            VtreeNode::Leaf { var } => Ok(*var),
            VtreeNode::Internal { .. } => Err(respect(format!(
                "terminal {id} is tagged with internal vtree node {}",
                fields[2]
            ))),
        };
        let node = match (fields[0], &fields[3..]) {
            ("T", [theta]) => {
                let theta = param(theta, line)?;
                if !(theta > 0.0 && theta < 1.0) {
                    return Err(PsddError::Parameter {
                        line,
                        msg: format!("terminal parameter {theta} outside (0, 1)"),
                    });
                }
                PsddNode::Top { var: leaf_var()?, theta }
            }
            ("L", [lit]) => {
                let (positive, name) = match lit.strip_prefix('-') {
                    Some(name) => (false, name),
                    None => (true, *lit),
                };
                let var = leaf_var()?;
                if vtree.variables()[var] != name {
                    return Err(respect(format!(
                        "literal {lit} is tagged with the leaf of {}",
                        vtree.variables()[var]
                    )));
                }
                PsddNode::Literal { var, positive }
            }
            ("F", []) => PsddNode::False,
            ("D", [k, rest @ ..]) => {
                let k: usize = k
                    .parse()
                    .map_err(|_| syntax(format!("invalid element count {k:?}")))?;
                if k == 0 || rest.len() != 3 * k {
                    return Err(syntax(format!("expected {k} (prime sub theta) triples")));
                }
                let VtreeNode::Internal { left, right } = *vtree.node(vt) else {
                    return Err(respect(format!("decision {id} is tagged with a vtree leaf")));
                };
                let mut elements = Vec::with_capacity(k);
                let mut total = 0.0;
                for t in rest.chunks(3) {
                    let child = |c: &str| {
                        index.get(c).copied().ok_or_else(|| PsddError::Dangling {
                            file: "psdd",
                            line,
                            id: c.to_string(),
                        })
                    };
                    let (prime, sub, theta) = (child(t[0])?, child(t[1])?, param(t[2], line)?);
                    if records[prime].vtree != left || matches!(records[prime].node, PsddNode::False) {
                        return Err(respect(format!(
                            "prime {} of {id} must be a consistent node at vtree {}",
                            t[0],
                            vtree.id(left)
                        )));
                    }
                    let sub_false = matches!(records[sub].node, PsddNode::False);
                    if !sub_false && records[sub].vtree != right {
                        return Err(respect(format!(
                            "sub {} of {id} must be at vtree {}",
                            t[1],
                            vtree.id(right)
                        )));
                    }
                    if !(0.0..=1.0).contains(&theta) {
                        return Err(PsddError::Parameter {
                            line,
                            msg: format!("element parameter {theta} outside [0, 1]"),
                        });
                    }
                    if (theta == 0.0) != sub_false {
                        return Err(PsddError::Parameter {
                            line,
                            msg: format!(
                                "element ({} {} {theta}): a parameter is zero exactly when its sub is false",
                                t[0], t[1]
                            ),
                        });
                    }
                    total += theta;
                    elements.push(Element { prime, sub, theta });
                }
                if (total - 1.0).abs() > PARAMETER_TOLERANCE {
                    return Err(PsddError::Parameter {
                        line,
                        msg: format!("parameters of {id} sum to {total}"),
                    });
                }
                PsddNode::Decision { elements }
            }
            _ => return Err(syntax(format!("malformed record {raw:?}"))),
        };
        if index.insert(id.to_string(), records.len()).is_some() {
            return Err(syntax(format!("node id {id} defined twice")));
        }
        records.push(Record {
            id: id.to_string(),
            vtree: vt,
            node,
        });
        lines.push(line);
    }
    let Some(root) = records.len().checked_sub(1) else {
        return Err(PsddError::Structural("no nodes".into()));
    };
    if records[root].vtree != vtree.root() {
        return Err(PsddError::Respect {
            line: lines[root],
            msg: format!("root {} is not tagged with the vtree root", records[root].id),
        });
    }
    let mut seen = vec![false; records.len()];
    seen[root] = true;
    for i in (0..records.len()).rev() {
        if !seen[i] {
            continue;
        }
        if let PsddNode::Decision { elements } = &records[i].node {
            for e in elements {
                seen[e.prime] = true;
                seen[e.sub] = true;
            }
        }
    }
    let reachable = (0..records.len()).filter(|&i| seen[i]).collect();
    Ok(Psdd {
        vtree,
        records,
        reachable,
    })
}

impl Psdd {
    pub fn vtree(&self) -> &Vtree {
        &self.vtree
    }

    pub fn root(&self) -> usize {
        self.records.len() - 1
    }

    /// Nodes reachable from the root.
    pub fn node_count(&self) -> usize {
        self.reachable.len()
    }

    pub fn node(&self, i: usize) -> &PsddNode {
        &self.records[i].node
    }

    pub fn node_id(&self, i: usize) -> &str {
        &self.records[i].id
    }

    pub fn node_vtree(&self, i: usize) -> usize {
        self.records[i].vtree
    }

    /// Term from `(variable name, value)` pairs.
    pub fn term(&self, bindings: &[(String, bool)]) -> Result<Vec<Option<bool>>, PsddError> {
        let mut term = vec![None; self.vtree.variables().len()];
        for (name, value) in bindings {
            let v = self
                .vtree
                .var_index(name)
                .ok_or_else(|| PsddError::Mapping(format!("unknown variable {name}")))?;
            term[v] = Some(*value);
        }
        Ok(term)
    }

    /// Boolean value of the underlying SDD node under a full assignment.
    fn holds(&self, n: usize, x: &[bool], memo: &mut [Option<bool>]) -> bool {
        if let Some(b) = memo[n] {
            return b;
        }
        let b = match &self.records[n].node {
            PsddNode::Top { .. } => true,
            PsddNode::Literal { var, positive } => x[*var] == *positive,
            PsddNode::False => false,
            PsddNode::Decision { elements } => elements
                .iter()
                .any(|e| self.holds(e.prime, x, memo) && self.holds(e.sub, x, memo)),
        };
        memo[n] = Some(b);
        b
    }

    /// Checks each reachable decision node's primes by enumerating its left
    /// variables: every prime satisfiable, no two overlapping, and together
    /// covering every assignment.
    pub fn validate_partition(&self) -> Result<PartitionReport, PsddError> {
        let mut report = PartitionReport::default();
        let nvars = self.vtree.variables().len();
        for &n in &self.reachable {
            let PsddNode::Decision { elements } = &self.records[n].node else {
                continue;
            };
            let VtreeNode::Internal { left, .. } = *self.vtree.node(self.records[n].vtree) else {
                unreachable!("decisions are tagged with internal nodes");
            };
            let xs = self.vtree.scope(left);
            if xs.len() > PARTITION_ENUMERATION_BOUND {
                return Err(PsddError::EnumerationBound {
                    node: self.records[n].id.clone(),
                    count: xs.len(),
                    bound: PARTITION_ENUMERATION_BOUND,
                });
            }
            let mut satisfiable = vec![false; elements.len()];
            let mut exclusive = true;
            let mut exhaustive = true;
            let mut x = vec![false; nvars];
            for bits in 0u64..(1u64 << xs.len()) {
                for (j, &v) in xs.iter().enumerate() {
                    x[v] = bits >> j & 1 == 1;
                }
                let mut memo = vec![None; self.records.len()];
                let mut count = 0;
                for (i, e) in elements.iter().enumerate() {
                    if self.holds(e.prime, &x, &mut memo) {
                        satisfiable[i] = true;
                        count += 1;
                    }
                }
                exclusive &= count <= 1;
                exhaustive &= count >= 1;
            }
            report.decisions.push(DecisionVerdict {
                node: self.records[n].id.clone(),
                consistent: satisfiable.iter().all(|&s| s),
                exclusive,
                exhaustive,
            });
        }
        Ok(report)
    }

    /// `Pr(x)` for a full assignment indexed by vtree variable.
    pub fn prob_assignment(&self, x: &[bool]) -> Result<f64, PsddError> {
        if x.len() != self.vtree.variables().len() {
            return Err(PsddError::Mapping(format!(
                "assignment has {} values for {} variables",
                x.len(),
                self.vtree.variables().len()
            )));
        }
        let mut holds = vec![None; self.records.len()];
        let mut memo = vec![None; self.records.len()];
        self.prob_at(self.root(), x, &mut holds, &mut memo)
    }

    fn prob_at(
        &self,
        n: usize,
        x: &[bool],
        holds: &mut [Option<bool>],
        memo: &mut [Option<f64>],
    ) -> Result<f64, PsddError> {
        if let Some(p) = memo[n] {
            return Ok(p);
        }
        let p = match &self.records[n].node {
            PsddNode::Top { var, theta } => {
                if x[*var] {
                    *theta
                } else {
                    1.0 - theta
                }
            }
            PsddNode::Literal { var, positive } => f64::from(u8::from(x[*var] == *positive)),
            PsddNode::False => 0.0,
            PsddNode::Decision { elements } => {
                let Some(e) = elements.iter().find(|e| self.holds(e.prime, x, holds)) else {
                    return Err(PsddError::Structural(format!(
                        "no prime of {} holds",
                        self.records[n].id
                    )));
                };
                let e = *e;
                e.theta * self.prob_at(e.prime, x, holds, memo)? * self.prob_at(e.sub, x, holds, memo)?
            }
        };
        memo[n] = Some(p);
        Ok(p)
    }

    /// Probability of a term (unbound variables are `None`).
    pub fn prob_term(&self, term: &[Option<bool>]) -> f64 {
        self.prob_term_counted(term).0
    }

    /// [`Psdd::prob_term`] together with the number of node evaluations,
    /// which is exactly [`Psdd::node_count`].
    pub fn prob_term_counted(&self, term: &[Option<bool>]) -> (f64, usize) {
        let mut value = vec![0.0; self.records.len()];
        let mut visits = 0;
        for &n in &self.reachable {
            visits += 1;
            let bound = |var: usize| term.get(var).copied().flatten();
            value[n] = match &self.records[n].node {
                PsddNode::Top { var, theta } => match bound(*var) {
                    None => 1.0,
                    Some(true) => *theta,
                    Some(false) => 1.0 - theta,
                },
                PsddNode::Literal { var, positive } => match bound(*var) {
                    Some(b) if b != *positive => 0.0,
                    _ => 1.0,
                },
                PsddNode::False => 0.0,
                PsddNode::Decision { elements } => elements
                    .iter()
                    .map(|e| e.theta * value[e.prime] * value[e.sub])
                    .sum(),
            };
        }
        (value[self.root()], visits)
    }

    pub fn diagnostics(&self) -> Diagnostics {
        let mut trimmed = true;
        let mut compressed = true;
        for &n in &self.reachable {
            if let PsddNode::Decision { elements } = &self.records[n].node {
                trimmed &= elements.len() > 1;
                let mut subs: Vec<usize> = elements.iter().map(|e| e.sub).collect();
                subs.sort_unstable();
                compressed &= subs.windows(2).all(|w| w[0] != w[1]);
            }
        }
        Diagnostics { trimmed, compressed }
    }
}

/// Largest `|Pr_psdd(x) - Pr_bn(x)|` over all full assignments. `mapping`
/// pairs every PSDD variable with a binary network variable; PSDD value
/// `true` is network value index 1.
pub fn compare_with_bn(
    p: &Psdd,
    sym: &SymbolicBn,
    mapping: &[(String, VarId)],
) -> Result<f64, PsddError> {
    let names = p.vtree().variables();
    let bn_len = sym.variable_names().len();
    if names.len() > COMPARE_ENUMERATION_BOUND {
        return Err(PsddError::Mapping(format!(
            "{} variables exceed the enumeration bound {COMPARE_ENUMERATION_BOUND}",
            names.len()
        )));
    }
    let mut target: Vec<Option<VarId>> = vec![None; names.len()];
    let mut covered = vec![false; bn_len];
    for (name, var) in mapping {
        let i = p
            .vtree()
            .var_index(name)
            .ok_or_else(|| PsddError::Mapping(format!("unknown PSDD variable {name}")))?;
        if var.0 >= bn_len {
            return Err(PsddError::Mapping(format!("unknown network variable {var}")));
        }
        if sym.encoding.card(*var) != 2 {
            return Err(PsddError::Mapping(format!(
                "{} is not binary",
                sym.variable_names()[var.0]
            )));
        }
        if target[i].is_some() || covered[var.0] {
            return Err(PsddError::Mapping(format!("{name} mapped twice")));
        }
        target[i] = Some(*var);
        covered[var.0] = true;
    }
    if let Some(i) = target.iter().position(Option::is_none) {
        return Err(PsddError::Mapping(format!("PSDD variable {} is unmapped", names[i])));
    }
    if let Some(v) = covered.iter().position(|&c| !c) {
        return Err(PsddError::Mapping(format!(
            "network variable {} is unmapped",
            sym.variable_names()[v]
        )));
    }
    let target: Vec<VarId> = target.into_iter().flatten().collect();
    let mut x = vec![false; names.len()];
    let mut values = vec![0usize; bn_len];
    let mut worst: f64 = 0.0;
    for bits in 0u64..(1u64 << names.len()) {
        for (i, t) in target.iter().enumerate() {
            x[i] = bits >> i & 1 == 1;
            values[t.0] = usize::from(x[i]);
        }
        let delta = (p.prob_assignment(&x)? - sym.evaluate_values(&values)).abs();
        worst = worst.max(delta);
    }
    Ok(worst)
}

/// Maps PSDD variables to network variables of the same name.
pub fn mapping_by_name(p: &Psdd, names: &[String]) -> Vec<(String, VarId)> {
    p.vtree()
        .variables()
        .iter()
        .filter_map(|v| names.iter().position(|n| n == v).map(|i| (v.clone(), VarId(i))))
        .collect()
}
