//! Exact inference for discrete Bayesian networks by reachability on a
//! tree-shaped Markov chain, with an explicit engine, a multi-terminal BDD
//! engine, a brute-force oracle and a PSDD evaluator.

pub mod bif;
pub mod bn;
pub mod chain;
pub mod export;
pub mod fixtures;
pub mod generate;
pub mod mtbdd;
pub mod oracle;
pub mod psdd;
pub mod query;
pub mod reach;
pub mod symbolic;

pub use bif::{parse_bif, write_bif, BifError};
pub use bn::{Assignment, BayesianNetwork, BnError, NetworkBuilder, NetworkStats, VarId, Variable, Violation};
pub use chain::{build_mc, size_bound, BuildOptions, MarkovChain};
pub use generate::{chain_network, random_network, random_query, RandomSpec};
pub use psdd::{compare_with_bn, parse_psdd, Psdd, PsddError};
pub use export::{export_dot, export_jani};
pub use query::{Engine, InferenceError, Query};
pub use symbolic::{compile, CompileOptions, SymbolicBn};
