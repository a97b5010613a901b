//! Reduced ordered multi-terminal BDDs.
//!
//! All diagrams live in one [`Manager`]. Nodes are hash-consed, so two
//! [`NodeRef`]s of one manager are equal exactly when they denote the same
//! function. The variable order is fixed when the manager is created.
//!
//! Terminal values are `f64` keyed by their exact bit pattern; values that
//! differ in any bit are distinct terminals. Negative, NaN and infinite
//! values are rejected at [`Manager::terminal`]; values above one are
//! allowed, since partial sums exceed it.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Position of a boolean variable in the manager's order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitVar(pub u32);

impl BitVar {
    pub fn level(self) -> usize {
        self.0 as usize
    }
}

/// Handle to a node of a particular [`Manager`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeRef(u32);

impl NodeRef {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum MtbddError {
    #[error("terminal value {0} is not a finite non-negative number")]
    InvalidTerminal(f64),
    #[error("variable {var} does not precede child variable {child}")]
    OrderViolation { var: u32, child: u32 },
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("duplicate variable label {0}")]
    DuplicateLabel(String),
    #[error("evaluation binds {found} variables, manager has {expected}")]
    EvaluationLength { expected: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarOrder {
    labels: Vec<String>,
}

impl VarOrder {
    pub fn new(labels: Vec<String>) -> Result<Self, MtbddError> {
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(MtbddError::DuplicateLabel(l.clone()));
            }
        }
        Ok(VarOrder { labels })
    }

    /// Variables `x0 < x1 < ... < x{n-1}`.
    pub fn numbered(n: usize) -> Self {
        VarOrder {
            labels: (0..n).map(|i| format!("x{i}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, var: BitVar) -> &str {
        &self.labels[var.level()]
    }

    pub fn find(&self, label: &str) -> Option<BitVar> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| BitVar(i as u32))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Node {
    Terminal(f64),
    Inner { var: BitVar, lo: NodeRef, hi: NodeRef },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Mul,
    Min,
    Max,
}

impl Op {
    pub fn eval(self, a: f64, b: f64) -> f64 {
        match self {
            Op::Add => a + b,
            Op::Mul => a * b,
            Op::Min => a.min(b),
            Op::Max => a.max(b),
        }
    }
}

/// Level of terminals: below every variable.
const TERMINAL_LEVEL: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct Manager {
    order: VarOrder,
    nodes: Vec<Node>,
    unique: HashMap<(BitVar, NodeRef, NodeRef), NodeRef>,
    terminals: HashMap<u64, NodeRef>,
    apply_cache: HashMap<(Op, NodeRef, NodeRef), NodeRef>,
}

impl Manager {
    pub fn new(order: VarOrder) -> Self {
        let mut m = Manager {
            order,
            nodes: Vec::new(),
            unique: HashMap::new(),
            terminals: HashMap::new(),
            apply_cache: HashMap::new(),
        };
        m.terminal_unchecked(0.0);
        m.terminal_unchecked(1.0);
        m
    }

    pub fn order(&self) -> &VarOrder {
        &self.order
    }

    pub fn var_count(&self) -> usize {
        self.order.len()
    }

    /// Total nodes stored, terminals included.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals.len()
    }

    pub fn node(&self, r: NodeRef) -> Node {
        self.nodes[r.index()]
    }

    pub fn zero(&self) -> NodeRef {
        self.terminals[&0f64.to_bits()]
    }

    pub fn one(&self) -> NodeRef {
        self.terminals[&1f64.to_bits()]
    }

    /// Terminal value, or `None` for inner nodes.
    pub fn value(&self, r: NodeRef) -> Option<f64> {
        match self.nodes[r.index()] {
            Node::Terminal(v) => Some(v),
            Node::Inner { .. } => None,
        }
    }

    pub fn top_var(&self, r: NodeRef) -> Option<BitVar> {
        match self.nodes[r.index()] {
            Node::Terminal(_) => None,
            Node::Inner { var, .. } => Some(var),
        }
    }

    fn level(&self, r: NodeRef) -> u32 {
        self.top_var(r).map_or(TERMINAL_LEVEL, |v| v.0)
    }

    fn cofactors(&self, r: NodeRef, level: u32) -> (NodeRef, NodeRef) {
        match self.nodes[r.index()] {
            Node::Inner { var, lo, hi } if var.0 == level => (lo, hi),
            _ => (r, r),
        }
    }

    fn push(&mut self, node: Node) -> NodeRef {
        let r = NodeRef(u32::try_from(self.nodes.len()).expect("node table overflow"));
        self.nodes.push(node);
        r
    }

    fn terminal_unchecked(&mut self, value: f64) -> NodeRef {
        // fold -0.0 into 0.0
        let value = if value == 0.0 { 0.0 } else { value };
        debug_assert!(value.is_finite() && value >= 0.0, "{value}");
        if let Some(&r) = self.terminals.get(&value.to_bits()) {
            return r;
        }
        let r = self.push(Node::Terminal(value));
        self.terminals.insert(value.to_bits(), r);
        r
    }

    pub fn terminal(&mut self, value: f64) -> Result<NodeRef, MtbddError> {
        if !value.is_finite() || value < 0.0 {
            return Err(MtbddError::InvalidTerminal(value));
        }
        Ok(self.terminal_unchecked(value))
    }

    fn mk(&mut self, var: BitVar, lo: NodeRef, hi: NodeRef) -> NodeRef {
        if lo == hi {
            return lo;
        }
        debug_assert!(var.0 < self.level(lo) && var.0 < self.level(hi));
        if let Some(&r) = self.unique.get(&(var, lo, hi)) {
            return r;
        }
        let r = self.push(Node::Inner { var, lo, hi });
        self.unique.insert((var, lo, hi), r);
        r
    }

    /// If-then-else on `var`: `lo` where `var = 0`, `hi` where `var = 1`.
    pub fn mk_node(&mut self, var: BitVar, lo: NodeRef, hi: NodeRef) -> Result<NodeRef, MtbddError> {
        if var.level() >= self.var_count() {
            return Err(MtbddError::UnknownVariable(var.0.to_string()));
        }
        for child in [lo, hi] {
            let level = self.level(child);
            if level <= var.0 {
                return Err(MtbddError::OrderViolation {
                    var: var.0,
                    child: level,
                });
            }
        }
        Ok(self.mk(var, lo, hi))
    }

    /// The 0/1 indicator of `var`.
    pub fn literal(&mut self, var: BitVar) -> Result<NodeRef, MtbddError> {
        let (zero, one) = (self.zero(), self.one());
        self.mk_node(var, zero, one)
    }

    /// Builds the function `f` over `vars` (ascending order) by Shannon
    /// expansion; `f` receives the bits of `vars` in the same order.
    pub fn from_fn(
        &mut self,
        vars: &[BitVar],
        mut f: impl FnMut(&[bool]) -> f64,
    ) -> Result<NodeRef, MtbddError> {
        if vars.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MtbddError::OrderViolation {
                var: vars[0].0,
                child: vars[0].0,
            });
        }
        if let Some(v) = vars.iter().find(|v| v.level() >= self.var_count()) {
            return Err(MtbddError::UnknownVariable(v.0.to_string()));
        }
        let mut bits = vec![false; vars.len()];
        self.build_fn_rec(vars, 0, &mut bits, &mut f)
    }

    fn build_fn_rec(
        &mut self,
        vars: &[BitVar],
        depth: usize,
        bits: &mut Vec<bool>,
        f: &mut impl FnMut(&[bool]) -> f64,
    ) -> Result<NodeRef, MtbddError> {
        if depth == vars.len() {
            return self.terminal(f(bits));
        }
        bits[depth] = false;
        let lo = self.build_fn_rec(vars, depth + 1, bits, f)?;
        bits[depth] = true;
        let hi = self.build_fn_rec(vars, depth + 1, bits, f)?;
        Ok(self.mk(vars[depth], lo, hi))
    }

    /// Pointwise `op(a, b)`, memoized on `(op, a, b)`.
    pub fn apply(&mut self, op: Op, a: NodeRef, b: NodeRef) -> NodeRef {
        // every supported operator is commutative
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if let (Some(x), Some(y)) = (self.value(a), self.value(b)) {
            return self.terminal_unchecked(op.eval(x, y));
        }
        match op {
            Op::Mul => {
                let (zero, one) = (self.zero(), self.one());
                if a == zero || b == zero {
                    return zero;
                }
                if a == one {
                    return b;
                }
                if b == one {
                    return a;
                }
            }
            Op::Add => {
                let zero = self.zero();
                if a == zero {
                    return b;
                }
                if b == zero {
                    return a;
                }
            }
            Op::Min | Op::Max => {
                if a == b {
                    return a;
                }
            }
        }
        if let Some(&r) = self.apply_cache.get(&(op, a, b)) {
            return r;
        }
        let level = self.level(a).min(self.level(b));
        let (a0, a1) = self.cofactors(a, level);
        let (b0, b1) = self.cofactors(b, level);
        let lo = self.apply(op, a0, b0);
        let hi = self.apply(op, a1, b1);
        let r = self.mk(BitVar(level), lo, hi);
        self.apply_cache.insert((op, a, b), r);
        r
    }

    pub fn scale(&mut self, a: NodeRef, factor: f64) -> Result<NodeRef, MtbddError> {
        let t = self.terminal(factor)?;
        Ok(self.apply(Op::Mul, a, t))
    }

    /// Cofactor of `a` with `var` fixed to `value`.
    pub fn restrict(&mut self, a: NodeRef, var: BitVar, value: bool) -> NodeRef {
        self.restrict_all(a, &[(var, value)])
    }

    /// Cofactor with several variables fixed at once.
    pub fn restrict_all(&mut self, a: NodeRef, bindings: &[(BitVar, bool)]) -> NodeRef {
        let mut fixed: Vec<Option<bool>> = vec![None; self.var_count()];
        for &(v, b) in bindings {
            if let Some(slot) = fixed.get_mut(v.level()) {
                *slot = Some(b);
            }
        }
        let mut memo = HashMap::new();
        self.restrict_rec(a, &fixed, &mut memo)
    }

    fn restrict_rec(
        &mut self,
        a: NodeRef,
        fixed: &[Option<bool>],
        memo: &mut HashMap<NodeRef, NodeRef>,
    ) -> NodeRef {
        let Node::Inner { var, lo, hi } = self.nodes[a.index()] else {
            return a;
        };
        if let Some(&r) = memo.get(&a) {
            return r;
        }
        let r = match fixed[var.level()] {
            Some(false) => self.restrict_rec(lo, fixed, memo),
            Some(true) => self.restrict_rec(hi, fixed, memo),
            None => {
                let l = self.restrict_rec(lo, fixed, memo);
                let h = self.restrict_rec(hi, fixed, memo);
                self.mk(var, l, h)
            }
        };
        memo.insert(a, r);
        r
    }

    /// Sums `a` over every valuation of `vars`.
    pub fn sum_abstract(&mut self, a: NodeRef, vars: &[BitVar]) -> NodeRef {
        let m = self.var_count();
        let mut mask = vec![false; m];
        for v in vars {
            if let Some(slot) = mask.get_mut(v.level()) {
                *slot = true;
            }
        }
        // below[i] = abstracted variables with level < i
        let mut below = vec![0u32; m + 1];
        for i in 0..m {
            below[i + 1] = below[i] + u32::from(mask[i]);
        }
        let mut memo = HashMap::new();
        let r = self.sum_rec(a, &mask, &below, &mut memo);
        let skipped = below[self.level_index(a)] - below[0];
        self.scale_pow2(r, skipped)
    }

    fn level_index(&self, a: NodeRef) -> usize {
        self.top_var(a).map_or(self.var_count(), |v| v.level())
    }

    fn scale_pow2(&mut self, a: NodeRef, k: u32) -> NodeRef {
        if k == 0 {
            return a;
        }
        let t = self.terminal_unchecked(2f64.powi(k as i32));
        self.apply(Op::Mul, a, t)
    }

    /// Abstraction of the abstracted variables at or below `a`'s level.
    fn sum_rec(
        &mut self,
        a: NodeRef,
        mask: &[bool],
        below: &[u32],
        memo: &mut HashMap<NodeRef, NodeRef>,
    ) -> NodeRef {
        let Node::Inner { var, lo, hi } = self.nodes[a.index()] else {
            return a;
        };
        if let Some(&r) = memo.get(&a) {
            return r;
        }
        let level = var.level();
        let mut child = |m: &mut Self, c: NodeRef| {
            let r = m.sum_rec(c, mask, below, memo);
            let skipped = below[m.level_index(c)] - below[level + 1];
            m.scale_pow2(r, skipped)
        };
        let l = child(self, lo);
        let h = child(self, hi);
        let r = if mask[level] {
            self.apply(Op::Add, l, h)
        } else {
            self.mk(var, l, h)
        };
        memo.insert(a, r);
        r
    }

    /// Value of `a` under a total evaluation indexed by level.
    pub fn evaluate(&self, a: NodeRef, bits: &[bool]) -> Result<f64, MtbddError> {
        if bits.len() != self.var_count() {
            return Err(MtbddError::EvaluationLength {
                expected: self.var_count(),
                found: bits.len(),
            });
        }
        let mut cur = a;
        loop {
            match self.nodes[cur.index()] {
                Node::Terminal(v) => return Ok(v),
                Node::Inner { var, lo, hi } => cur = if bits[var.level()] { hi } else { lo },
            }
        }
    }

    /// Distinct nodes reachable from `a`, terminals included.
    pub fn node_count(&self, a: NodeRef) -> usize {
        self.reachable(&[a]).len()
    }

    /// Reachable nodes in depth-first pre-order.
    fn reachable(&self, roots: &[NodeRef]) -> Vec<NodeRef> {
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        let mut stack: Vec<NodeRef> = roots.iter().rev().copied().collect();
        while let Some(r) = stack.pop() {
            if std::mem::replace(&mut seen[r.index()], true) {
                continue;
            }
            out.push(r);
            if let Node::Inner { lo, hi, .. } = self.nodes[r.index()] {
                stack.push(hi);
                stack.push(lo);
            }
        }
        out
    }

    pub fn clear_caches(&mut self) {
        self.apply_cache.clear();
    }

    pub fn cache_len(&self) -> usize {
        self.apply_cache.len()
    }

    /// Drops every node not reachable from `roots` and returns the roots'
    /// new handles. All other handles become invalid.
    pub fn collect(&mut self, roots: &[NodeRef]) -> Vec<NodeRef> {
        let mut fresh = Manager::new(self.order.clone());
        let mut map: HashMap<NodeRef, NodeRef> = HashMap::new();
        let mut live = self.reachable(roots);
        // children have larger levels; rebuild bottom-up
        live.sort_by_key(|&r| std::cmp::Reverse(self.level(r)));
        for r in live {
            let new = match self.nodes[r.index()] {
                Node::Terminal(v) => fresh.terminal_unchecked(v),
                Node::Inner { var, lo, hi } => fresh.mk(var, map[&lo], map[&hi]),
            };
            map.insert(r, new);
        }
        *self = fresh;
        roots.iter().map(|r| map[r]).collect()
    }

    /// Checks ordering and both reduction rules over the whole node table.
    pub fn is_reduced(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.nodes.iter().all(|n| match *n {
            Node::Terminal(_) => true,
            Node::Inner { var, lo, hi } => {
                lo != hi
                    && var.0 < self.level(lo)
                    && var.0 < self.level(hi)
                    && seen.insert((var, lo, hi))
            }
        })
    }

    /// Graphviz rendering of the diagram rooted at `root`. Nodes are named
    /// by their position in a depth-first walk, so equal diagrams give equal
    /// text.
    pub fn to_dot(&self, root: NodeRef) -> String {
        let order = self.reachable(&[root]);
        let name: HashMap<NodeRef, usize> = order.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let mut out = String::from("digraph mtbdd {\n");
        for &r in &order {
            let id = name[&r];
            match self.nodes[r.index()] {
                Node::Terminal(v) => {
                    let _ = writeln!(out, "  n{id} [shape=box, label=\"{v}\"];");
                }
                Node::Inner { var, lo, hi } => {
                    let _ = writeln!(out, "  n{id} [shape=circle, label=\"{}\"];", self.order.label(var));
                    let _ = writeln!(out, "  n{id} -> n{} [style=dashed];", name[&lo]);
                    let _ = writeln!(out, "  n{id} -> n{};", name[&hi]);
                }
            }
        }
        out.push_str("}\n");
        out
    }
}
