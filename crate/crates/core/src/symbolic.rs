//! Symbolic inference on the joint-distribution MTBDD.
//!
//! Each variable is log-encoded into `ceil(log2 |D|)` boolean variables,
//! most significant bit first. Bit patterns that decode to an index outside
//! the domain get probability zero in every CPT diagram. The joint is the
//! product of the CPT diagrams taken in topological order, and a conditional
//! query is `sum(restrict(joint, H, F)) / sum(restrict(joint, F))`.

use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bn::{Assignment, BayesianNetwork, BnError, VarId};
use crate::mtbdd::{BitVar, Manager, MtbddError, NodeRef, Op, VarOrder};
use crate::query::{ratio, Engine, InferenceError, Query};

/// Largest supported number of boolean variables.
pub const MAX_BITS: usize = 62;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SymbolicError {
    #[error(transparent)]
    Network(#[from] BnError),
    #[error(transparent)]
    Diagram(#[from] MtbddError),
    #[error("encoding needs {0} boolean variables, more than the supported {MAX_BITS}")]
    TooManyBits(usize),
    #[error("order is not a topological order of the network")]
    NotTopological,
}

/// Placement of the encoding bits in the diagram order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BitLayout {
    /// Variables in topological order, the bits of each kept adjacent.
    #[default]
    Contiguous,
    /// Most significant bits of every variable first, then the next plane.
    BitPlanes,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CompileOptions {
    pub layout: BitLayout,
}

pub fn bit_width(card: usize) -> usize {
    if card <= 1 {
        0
    } else {
        (usize::BITS - (card - 1).leading_zeros()) as usize
    }
}

/// Map from network variables to their boolean encoding variables.
#[derive(Clone, Debug, PartialEq)]
pub struct BitEncoding {
    bits: Vec<Vec<BitVar>>,
    cards: Vec<usize>,
}

impl BitEncoding {
    fn new(bn: &BayesianNetwork, order: &[VarId], layout: BitLayout) -> Result<(Self, Vec<String>), SymbolicError> {
        let widths: Vec<usize> = bn.variables().iter().map(|v| bit_width(v.card())).collect();
        let total: usize = widths.iter().sum();
        if total > MAX_BITS {
            return Err(SymbolicError::TooManyBits(total));
        }
        let mut bits = vec![Vec::new(); bn.len()];
        let mut labels = Vec::with_capacity(total);
        let mut place = |v: VarId, k: usize, labels: &mut Vec<String>| {
            let name = &bn.variable(v).name;
            bits[v.0].push(BitVar(labels.len() as u32));
            labels.push(if widths[v.0] == 1 {
                name.clone()
            } else {
                format!("{name}[{k}]")
            });
        };
        match layout {
            BitLayout::Contiguous => {
                for &v in order {
                    for k in 0..widths[v.0] {
                        place(v, k, &mut labels);
                    }
                }
            }
            BitLayout::BitPlanes => {
                let deepest = widths.iter().copied().max().unwrap_or(0);
                for k in 0..deepest {
                    for &v in order {
                        if k < widths[v.0] {
                            place(v, k, &mut labels);
                        }
                    }
                }
            }
        }
        let cards = bn.variables().iter().map(|v| v.card()).collect();
        Ok((BitEncoding { bits, cards }, labels))
    }

    /// Encoding bits of `var`, most significant first.
    pub fn bits(&self, var: VarId) -> &[BitVar] {
        &self.bits[var.0]
    }

    pub fn total_bits(&self) -> usize {
        self.bits.iter().map(Vec::len).sum()
    }

    pub fn encode(&self, var: VarId, value: usize) -> Vec<(BitVar, bool)> {
        let w = self.bits[var.0].len();
        self.bits[var.0]
            .iter()
            .enumerate()
            .map(|(k, &b)| (b, (value >> (w - 1 - k)) & 1 == 1))
            .collect()
    }

    /// Value index for the given bits (most significant first); may exceed
    /// the domain for unused patterns.
    pub fn decode(bits: impl IntoIterator<Item = bool>) -> usize {
        bits.into_iter().fold(0, |acc, b| acc << 1 | usize::from(b))
    }

    pub fn card(&self, var: VarId) -> usize {
        self.cards[var.0]
    }

    /// Total evaluation (indexed by diagram level) of a full assignment
    /// given as a dense value vector.
    pub fn evaluation(&self, values: &[usize]) -> Vec<bool> {
        let mut bits = vec![false; self.total_bits()];
        for (v, &d) in values.iter().enumerate() {
            for (b, x) in self.encode(VarId(v), d) {
                bits[b.level()] = x;
            }
        }
        bits
    }
}

pub struct SymbolicBn {
    pub manager: Manager,
    pub encoding: BitEncoding,
    pub joint: NodeRef,
    pub cpt_nodes: Vec<NodeRef>,
    pub order: Vec<VarId>,
    names: Vec<String>,
}

pub fn compile(
    bn: &BayesianNetwork,
    order: &[VarId],
    options: CompileOptions,
) -> Result<SymbolicBn, SymbolicError> {
    bn.ensure_valid()?;
    let mut position = vec![usize::MAX; bn.len()];
    for (i, v) in order.iter().enumerate() {
        if v.0 >= bn.len() || position[v.0] != usize::MAX {
            return Err(SymbolicError::NotTopological);
        }
        position[v.0] = i;
    }
    if order.len() != bn.len()
        || order
            .iter()
            .any(|v| bn.parents(*v).iter().any(|p| position[p.0] >= position[v.0]))
    {
        return Err(SymbolicError::NotTopological);
    }

    let (encoding, labels) = BitEncoding::new(bn, order, options.layout)?;
    let mut manager = Manager::new(VarOrder::new(labels)?);
    let mut cpt_nodes = vec![manager.one(); bn.len()];
    for &v in order {
        cpt_nodes[v.0] = cpt_diagram(&mut manager, &encoding, bn, v)?;
    }
    let mut joint = manager.one();
    for &v in order {
        joint = manager.apply(Op::Mul, joint, cpt_nodes[v.0]);
    }
    Ok(SymbolicBn {
        manager,
        encoding,
        joint,
        cpt_nodes,
        order: order.to_vec(),
        names: bn.variables().iter().map(|v| v.name.clone()).collect(),
    })
}

/// Diagram of `Theta_v` over the bits of `v` and its parents.
fn cpt_diagram(
    manager: &mut Manager,
    encoding: &BitEncoding,
    bn: &BayesianNetwork,
    v: VarId,
) -> Result<NodeRef, SymbolicError> {
    let cpt = bn.cpt(v);
    let scope: Vec<VarId> = std::iter::once(v).chain(cpt.parents.iter().copied()).collect();
    let mut vars: Vec<BitVar> = scope
        .iter()
        .flat_map(|s| encoding.bits(*s).iter().copied())
        .collect();
    vars.sort();
    // for each scope variable, where its bits sit within `vars`
    let slots: Vec<Vec<usize>> = scope
        .iter()
        .map(|s| {
            encoding
                .bits(*s)
                .iter()
                .map(|b| vars.binary_search(b).unwrap())
                .collect()
        })
        .collect();
    let cards: Vec<usize> = scope.iter().map(|s| encoding.card(*s)).collect();
    let mut parent_values = vec![0usize; cpt.parents.len()];
    let node = manager.from_fn(&vars, |bits| {
        let mut decoded = slots
            .iter()
            .map(|idx| BitEncoding::decode(idx.iter().map(|&i| bits[i])));
        let value = decoded.next().unwrap();
        for slot in parent_values.iter_mut() {
            *slot = decoded.next().unwrap();
        }
        let valid = std::iter::once(value)
            .chain(parent_values.iter().copied())
            .zip(&cards)
            .all(|(x, &c)| x < c);
        if valid {
            cpt.prob(value, &parent_values)
        } else {
            0.0
        }
    })?;
    Ok(node)
}

impl SymbolicBn {
    fn bindings(&self, a: &Assignment) -> Result<Vec<(BitVar, bool)>, InferenceError> {
        let mut out = Vec::new();
        for (var, value) in a.iter() {
            if var.0 >= self.names.len() {
                return Err(BnError::UnknownVariable(var.to_string()).into());
            }
            if value >= self.encoding.card(var) {
                return Err(BnError::ValueOutOfRange(self.names[var.0].clone(), value).into());
            }
            out.extend(self.encoding.encode(var, value));
        }
        Ok(out)
    }

    fn all_bits(&self) -> Vec<BitVar> {
        (0..self.manager.var_count() as u32).map(BitVar).collect()
    }

    /// `sum` of the joint restricted to `a`.
    pub fn marginal(&mut self, a: &Assignment) -> Result<f64, InferenceError> {
        let bindings = self.bindings(a)?;
        let restricted = self.manager.restrict_all(self.joint, &bindings);
        let remaining: Vec<BitVar> = self
            .all_bits()
            .into_iter()
            .filter(|b| !bindings.iter().any(|(x, _)| x == b))
            .collect();
        let total = self.manager.sum_abstract(restricted, &remaining);
        Ok(self
            .manager
            .value(total)
            .expect("abstracting every variable yields a terminal"))
    }

    pub fn query_terms(&mut self, query: &Query) -> Result<(f64, f64), InferenceError> {
        let den = self.marginal(query.evidence())?;
        let num = self.marginal(&query.conjunction())?;
        Ok((num, den))
    }

    pub fn infer(&mut self, query: &Query) -> Result<f64, InferenceError> {
        let (num, den) = self.query_terms(query)?;
        ratio(num, den)
    }

    /// Joint value at a full assignment (dense, by variable id).
    pub fn evaluate_values(&self, values: &[usize]) -> f64 {
        let bits = self.encoding.evaluation(values);
        self.manager
            .evaluate(self.joint, &bits)
            .expect("evaluation covers every bit")
    }

    /// Sum of the joint over all bit patterns; one for a valid network.
    pub fn total_mass(&mut self) -> f64 {
        let all = self.all_bits();
        let r = self.manager.sum_abstract(self.joint, &all);
        self.manager.value(r).unwrap()
    }

    pub fn joint_node_count(&self) -> usize {
        self.manager.node_count(self.joint)
    }

    pub fn variable_names(&self) -> &[String] {
        &self.names
    }
}

impl Engine for SymbolicBn {
    fn name(&self) -> &'static str {
        "symbolic"
    }

    fn conditional(&mut self, query: &Query) -> Result<f64, InferenceError> {
        self.infer(query)
    }
}

/// Which evidence variables a benchmark run conditions on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvidenceStrategy {
    /// Prefix of the topological order.
    First,
    /// Seeded uniform sample.
    Random,
    /// Suffix of the topological order.
    Last,
}

impl EvidenceStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            EvidenceStrategy::First => "first",
            EvidenceStrategy::Random => "random",
            EvidenceStrategy::Last => "last",
        }
    }
}

impl std::str::FromStr for EvidenceStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" => Ok(EvidenceStrategy::First),
            "random" => Ok(EvidenceStrategy::Random),
            "last" => Ok(EvidenceStrategy::Last),
            other => Err(format!("unknown strategy {other:?} (expected first, random or last)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub strategy: EvidenceStrategy,
    pub evidence_count: usize,
    pub seed: u64,
    pub query: Query,
    pub query_time_ns: u128,
    /// `None` when the query was ill-conditioned.
    pub result: Option<f64>,
}

impl BenchRow {
    pub const CSV_HEADER: &'static str =
        "network,strategy,evidence_count,seed,query_time_ns,result,ill_conditioned";

    pub fn ill_conditioned(&self) -> bool {
        self.result.is_none()
    }

    pub fn to_csv(&self, network: &str) -> String {
        format!(
            "{network},{},{},{},{},{},{}",
            self.strategy.as_str(),
            self.evidence_count,
            self.seed,
            self.query_time_ns,
            self.result.map_or_else(String::new, |r| r.to_string()),
            self.ill_conditioned()
        )
    }
}

/// Picks the evidence and hypothesis for one benchmark run. The generator
/// is ChaCha8 seeded with `seed` through `seed_from_u64`, which is stable
/// across platforms.
pub fn bench_query(
    order: &[VarId],
    cards: &[usize],
    strategy: EvidenceStrategy,
    count: usize,
    seed: u64,
) -> Query {
    let n = order.len();
    let count = count.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen: Vec<usize> = match strategy {
        EvidenceStrategy::First => (0..count).collect(),
        EvidenceStrategy::Last => (n - count..n).collect(),
        EvidenceStrategy::Random => {
            let mut picked = sample(&mut rng, n, count).into_vec();
            picked.sort_unstable();
            picked
        }
    };
    let mut evidence = Assignment::new();
    for &pos in &chosen {
        let v = order[pos];
        evidence.bind(v, rng.random_range(0..cards[v.0]));
    }
    let free: Vec<usize> = (0..n).filter(|p| !chosen.contains(p)).collect();
    let mut hypothesis = Assignment::new();
    if !free.is_empty() {
        let v = order[free[rng.random_range(0..free.len())]];
        hypothesis.bind(v, rng.random_range(0..cards[v.0]));
    }
    Query::new(evidence, hypothesis).expect("evidence and hypothesis are disjoint")
}

pub fn bench_evidence(
    sym: &mut SymbolicBn,
    strategy: EvidenceStrategy,
    count: usize,
    seed: u64,
) -> Result<BenchRow, InferenceError> {
    let cards: Vec<usize> = (0..sym.names.len()).map(|v| sym.encoding.card(VarId(v))).collect();
    let query = bench_query(&sym.order, &cards, strategy, count, seed);
    let start = Instant::now();
    let outcome = sym.infer(&query);
    let query_time_ns = start.elapsed().as_nanos();
    let result = match outcome {
        Ok(p) => Some(p),
        Err(InferenceError::IllConditioned(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(BenchRow {
        strategy,
        evidence_count: count.min(sym.order.len()),
        seed,
        query,
        query_time_ns,
        result,
    })
}
