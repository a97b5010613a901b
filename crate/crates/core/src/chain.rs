//! The tree-shaped Markov chain of a Bayesian network.
//!
//! States are partial evaluations that bind a prefix of a fixed topological
//! order; every other position is the don't-care `*`. From a state binding
//! `v_1..v_{i-1}`, one transition per value `d` of `v_i` carries
//! `Theta_{v_i}(parents)(d)`. Fully evaluated states loop on themselves with
//! probability one.

use std::fmt;

use thiserror::Error;

use crate::bn::{Assignment, BayesianNetwork, BnError, Cpt, VarId};

pub const DEFAULT_STATE_CAP: u128 = 10_000_000;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ChainError {
    #[error(transparent)]
    Network(#[from] BnError),
    #[error("order is not a topological order of the network: {0}")]
    NotTopological(String),
    #[error("chain would have up to {bound} states, above the cap of {cap}")]
    TooLarge { bound: u128, cap: u128 },
    #[error("predicate binds {var} to value {value}, outside its domain")]
    BadPredicate { var: String, value: usize },
    #[error("more than {0} paths to enumerate")]
    PathCap(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    /// Generate transitions of probability zero (and the states they reach).
    pub keep_zero_edges: bool,
    pub state_cap: u128,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            keep_zero_edges: false,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

/// Evaluation of every variable, by position in the chain's order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct McState {
    values: Box<[Option<u32>]>,
}

impl McState {
    pub fn values(&self) -> &[Option<u32>] {
        &self.values
    }

    /// Number of bound positions; those always form a prefix.
    pub fn depth(&self) -> usize {
        self.values.iter().take_while(|v| v.is_some()).count()
    }

    pub fn is_final(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }
}

/// How position `i` of the order is expanded: the variable, its parents'
/// positions (in CPT parent order) and its table.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionRule {
    pub var: VarId,
    pub name: String,
    pub labels: Vec<String>,
    pub parent_positions: Vec<usize>,
    pub cpt: Cpt,
}

#[derive(Clone, Debug)]
pub struct MarkovChain {
    pub network_name: String,
    rules: Vec<ExpansionRule>,
    position_of: Vec<usize>,
    states: Vec<McState>,
    predecessor: Vec<Option<usize>>,
    transitions: Vec<Vec<(f64, usize)>>,
    keep_zero_edges: bool,
}

/// `1 + sum_i prod_{k<=i} |D_k|` along `order`, saturating.
pub fn size_bound_for(bn: &BayesianNetwork, order: &[VarId]) -> u128 {
    let mut total: u128 = 1;
    let mut prefix: u128 = 1;
    for v in order {
        prefix = prefix.saturating_mul(bn.variable(*v).card() as u128);
        total = total.saturating_add(prefix);
    }
    total
}

/// [`size_bound_for`] along the network's canonical topological order.
pub fn size_bound(bn: &BayesianNetwork) -> Result<u128, BnError> {
    Ok(size_bound_for(bn, &bn.topological_order()?))
}

fn check_order(bn: &BayesianNetwork, order: &[VarId]) -> Result<Vec<usize>, ChainError> {
    let mut position = vec![usize::MAX; bn.len()];
    if order.len() != bn.len() {
        return Err(ChainError::NotTopological(format!(
            "{} entries for {} variables",
            order.len(),
            bn.len()
        )));
    }
    for (i, v) in order.iter().enumerate() {
        if v.0 >= bn.len() || position[v.0] != usize::MAX {
            return Err(ChainError::NotTopological(format!("{v} repeated or unknown")));
        }
        position[v.0] = i;
    }
    for (i, v) in order.iter().enumerate() {
        for p in bn.parents(*v) {
            if position[p.0] >= i {
                return Err(ChainError::NotTopological(format!(
                    "{} precedes its parent {}",
                    bn.variable(*v).name,
                    bn.variable(*p).name
                )));
            }
        }
    }
    Ok(position)
}

pub fn build_mc(
    bn: &BayesianNetwork,
    order: &[VarId],
    options: BuildOptions,
) -> Result<MarkovChain, ChainError> {
    let position_of = check_order(bn, order)?;
    let bound = size_bound_for(bn, order);
    if bound > options.state_cap {
        return Err(ChainError::TooLarge {
            bound,
            cap: options.state_cap,
        });
    }
    let rules: Vec<ExpansionRule> = order
        .iter()
        .map(|&v| {
            let var = bn.variable(v);
            ExpansionRule {
                var: v,
                name: var.name.clone(),
                labels: var.domain.clone(),
                parent_positions: bn.parents(v).iter().map(|p| position_of[p.0]).collect(),
                cpt: bn.cpt(v).clone(),
            }
        })
        .collect();

    let n = order.len();
    let mut states = vec![McState {
        values: vec![None; n].into_boxed_slice(),
    }];
    let mut predecessor = vec![None];
    let mut transitions: Vec<Vec<(f64, usize)>> = Vec::new();
    let mut parent_values = Vec::new();
    // States are appended in BFS order, so the vector doubles as the queue.
    let mut next = 0;
    while next < states.len() {
        let depth = states[next].depth();
        if depth == n {
            transitions.push(vec![(1.0, next)]);
            next += 1;
            continue;
        }
        let rule = &rules[depth];
        parent_values.clear();
        parent_values.extend(
            rule.parent_positions
                .iter()
                .map(|&pos| states[next].values[pos].unwrap() as usize),
        );
        let row = rule.cpt.row(rule.cpt.row_index(&parent_values));
        let mut out = Vec::with_capacity(row.len());
        for (d, &p) in row.iter().enumerate() {
            if p == 0.0 && !options.keep_zero_edges {
                continue;
            }
            let mut values = states[next].values.clone();
            values[depth] = Some(d as u32);
            out.push((p, states.len()));
            states.push(McState { values });
            predecessor.push(Some(next));
        }
        transitions.push(out);
        next += 1;
    }
    Ok(MarkovChain {
        network_name: bn.name.clone(),
        rules,
        position_of,
        states,
        predecessor,
        transitions,
        keep_zero_edges: options.keep_zero_edges,
    })
}

impl MarkovChain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn states(&self) -> &[McState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &McState {
        &self.states[index]
    }

    pub fn transitions(&self, index: usize) -> &[(f64, usize)] {
        &self.transitions[index]
    }

    pub fn predecessor(&self, index: usize) -> Option<usize> {
        self.predecessor[index]
    }

    pub fn rules(&self) -> &[ExpansionRule] {
        &self.rules
    }

    /// Variables by position.
    pub fn order(&self) -> Vec<VarId> {
        self.rules.iter().map(|r| r.var).collect()
    }

    pub fn position(&self, var: VarId) -> Option<usize> {
        self.position_of.get(var.0).copied()
    }

    pub fn keeps_zero_edges(&self) -> bool {
        self.keep_zero_edges
    }

    pub fn final_state_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(|&i| self.states[i].is_final())
    }

    /// Converts a variable-id assignment into `(position, value)` pairs.
    pub fn positions(&self, pred: &Assignment) -> Result<Vec<(usize, u32)>, ChainError> {
        pred.iter()
            .map(|(var, value)| {
                let pos = self
                    .position(var)
                    .ok_or_else(|| ChainError::Network(BnError::UnknownVariable(var.to_string())))?;
                if value >= self.rules[pos].labels.len() {
                    return Err(ChainError::BadPredicate {
                        var: self.rules[pos].name.clone(),
                        value,
                    });
                }
                Ok((pos, value as u32))
            })
            .collect()
    }

    /// True when `state` binds every position of `pred` to its value.
    pub fn satisfies(&self, state: usize, pred: &[(usize, u32)]) -> bool {
        let values = &self.states[state].values;
        pred.iter().all(|&(pos, d)| values[pos] == Some(d))
    }

    /// Fully evaluated states extending `pred`.
    pub fn final_states(&self, pred: &Assignment) -> Result<Vec<usize>, ChainError> {
        let pred = self.positions(pred)?;
        Ok(self
            .final_state_indices()
            .filter(|&s| self.satisfies(s, &pred))
            .collect())
    }

    /// Product of transition probabilities from the initial state to `state`.
    pub fn path_probability(&self, mut state: usize) -> f64 {
        let mut p = 1.0;
        while let Some(prev) = self.predecessor[state] {
            let (q, _) = self.transitions[prev]
                .iter()
                .find(|(_, t)| *t == state)
                .expect("predecessor has an edge to its child");
            p *= q;
            state = prev;
        }
        p
    }

    /// Full assignment of a final state, indexed by variable id.
    pub fn assignment_of(&self, state: usize) -> Assignment {
        self.states[state]
            .values
            .iter()
            .enumerate()
            .filter_map(|(pos, v)| v.map(|d| (self.rules[pos].var, d as usize)))
            .collect()
    }

    /// Human-readable rendering such as `(Dif=1, Prep=*)`.
    pub fn describe(&self, state: usize) -> String {
        let parts: Vec<String> = self.states[state]
            .values
            .iter()
            .zip(&self.rules)
            .map(|(v, r)| match v {
                Some(d) => format!("{}={}", r.name, r.labels[*d as usize]),
                None => format!("{}=*", r.name),
            })
            .collect();
        format!("({})", parts.join(", "))
    }
}

impl fmt::Display for MarkovChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, out) in self.transitions.iter().enumerate() {
            write!(f, "{i} {}:", self.describe(i))?;
            for (p, t) in out {
                write!(f, " {p}->{t}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
