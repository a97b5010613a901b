//! Seeded random networks for tests and benchmarks.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bn::{Assignment, BayesianNetwork, NetworkBuilder, VarId};
use crate::query::Query;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomSpec {
    pub variables: usize,
    /// Domains are drawn from `2..=max_domain`.
    pub max_domain: usize,
    pub max_parents: usize,
    /// Chance that an individual CPT entry is forced to zero. A row always
    /// keeps at least one positive entry.
    pub zero_probability: f64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            variables: 5,
            max_domain: 3,
            max_parents: 2,
            zero_probability: 0.0,
        }
    }
}

fn random_row(rng: &mut impl Rng, card: usize, zero_probability: f64) -> Vec<f64> {
    let mut row: Vec<f64> = (0..card)
        .map(|_| {
            if zero_probability > 0.0 && rng.random_bool(zero_probability.min(1.0)) {
                0.0
            } else {
                rng.random_range(0.05..1.0)
            }
        })
        .collect();
    if row.iter().all(|&p| p == 0.0) {
        row[rng.random_range(0..card)] = 1.0;
    }
    let total: f64 = row.iter().sum();
    for p in &mut row {
        *p /= total;
    }
    row
}

/// Variable `i` only draws parents among `0..i`, so the id order is
/// topological.
pub fn random_network(spec: &RandomSpec, seed: u64) -> BayesianNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_domain = spec.max_domain.max(2);
    let mut b = NetworkBuilder::new(format!("random{seed}"));
    let ids: Vec<VarId> = (0..spec.variables)
        .map(|i| {
            let card = rng.random_range(2..=max_domain);
            b.variable(format!("v{i}"), (0..card).map(|d| d.to_string()))
        })
        .collect();
    for (i, &id) in ids.iter().enumerate() {
        let k = rng.random_range(0..=spec.max_parents.min(i));
        let mut parents: Vec<VarId> = sample(&mut rng, i, k).into_iter().map(|p| ids[p]).collect();
        parents.sort();
        let card = b.variables()[id.0].card();
        let rows: usize = parents.iter().map(|p| b.variables()[p.0].card()).product();
        let table: Vec<Vec<f64>> = (0..rows)
            .map(|_| random_row(&mut rng, card, spec.zero_probability))
            .collect();
        b.cpt(id, &parents, &table).expect("generated tables have the right shape");
    }
    b.build().expect("generated network is well formed")
}

/// Binary chain `x0 -> x1 -> ... -> x(n-1)`.
pub fn chain_network(n: usize, seed: u64) -> BayesianNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = NetworkBuilder::new(format!("chain{n}"));
    let ids: Vec<VarId> = (0..n).map(|i| b.variable(format!("x{i}"), ["0", "1"])).collect();
    for (i, &id) in ids.iter().enumerate() {
        let parents: Vec<VarId> = if i == 0 { vec![] } else { vec![ids[i - 1]] };
        let rows = if i == 0 { 1 } else { 2 };
        let table: Vec<Vec<f64>> = (0..rows).map(|_| random_row(&mut rng, 2, 0.0)).collect();
        b.cpt(id, &parents, &table).expect("chain tables have the right shape");
    }
    b.build().expect("chain network is well formed")
}

/// Random disjoint evidence and hypothesis, each variable landing in either
/// side with probability 1/3.
pub fn random_query(bn: &BayesianNetwork, seed: u64) -> Query {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evidence = Assignment::new();
    let mut hypothesis = Assignment::new();
    for v in bn.variables() {
        let value = rng.random_range(0..v.card());
        match rng.random_range(0..3) {
            0 => evidence.bind(v.id, value),
            1 => hypothesis.bind(v.id, value),
            _ => None,
        };
    }
    Query::new(evidence, hypothesis).expect("sides are disjoint")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_valid() {
        let spec = RandomSpec {
            variables: 8,
            zero_probability: 0.3,
            ..RandomSpec::default()
        };
        let a = random_network(&spec, 7);
        assert_eq!(a, random_network(&spec, 7));
        assert!(a.validate().is_empty());
        assert!(a.stats().max_in_degree <= 2);
        let c = chain_network(10, 1);
        assert!(c.validate().is_empty());
        assert_eq!(c.stats().edge_count, 9);
    }
}
