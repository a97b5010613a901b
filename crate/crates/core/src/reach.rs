//! Reachability probabilities on the explicit chain.
//!
//! The chain is a tree apart from the self-loops on final states, and
//! children are always stored after their parent, so one backward sweep
//! over the state vector solves the reachability equations exactly.

use crate::chain::{ChainError, MarkovChain};
use crate::query::{ratio, Engine, InferenceError, Query};

/// Default bound on the number of paths [`check_conjunction`] enumerates.
pub const DEFAULT_PATH_CAP: usize = 100_000;

/// `Pr(<> goal)` from the initial state.
pub fn reach_probability(mc: &MarkovChain, goal: &[usize]) -> f64 {
    let mut in_goal = vec![false; mc.len()];
    for &g in goal {
        in_goal[g] = true;
    }
    reach_marked(mc, &in_goal)
}

fn reach_marked(mc: &MarkovChain, in_goal: &[bool]) -> f64 {
    let mut x = vec![0.0; mc.len()];
    for s in (0..mc.len()).rev() {
        x[s] = if in_goal[s] {
            1.0
        } else if mc.state(s).is_final() {
            0.0
        } else {
            mc.transitions(s).iter().map(|&(p, t)| p * x[t]).sum()
        };
    }
    x.first().copied().unwrap_or(0.0)
}

fn chain_to_inference(e: ChainError) -> InferenceError {
    match e {
        ChainError::Network(n) => InferenceError::Network(n),
        other => InferenceError::Engine(other.to_string()),
    }
}

/// Numerator and denominator of `Pr(<>(H=h) | <>(F=f))`. The conjunction of
/// the two eventualities collapses into a single goal on the tree.
pub fn query_terms(mc: &MarkovChain, query: &Query) -> Result<(f64, f64), InferenceError> {
    let both = mc
        .final_states(&query.conjunction())
        .map_err(chain_to_inference)?;
    let evidence = mc
        .final_states(query.evidence())
        .map_err(chain_to_inference)?;
    mc.final_states(query.hypothesis())
        .map_err(chain_to_inference)?;
    Ok((reach_probability(mc, &both), reach_probability(mc, &evidence)))
}

pub fn conditional_query(mc: &MarkovChain, query: &Query) -> Result<f64, InferenceError> {
    let (num, den) = query_terms(mc, query)?;
    ratio(num, den)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConjunctionCheck {
    /// `Pr(<>(H=h) and <>(F=f))` by summing over enumerated paths.
    pub separate: f64,
    /// `Pr(<>(H=h and F=f))` by the backward sweep.
    pub joined: f64,
}

impl ConjunctionCheck {
    pub fn holds(&self, tolerance: f64) -> bool {
        (self.separate - self.joined).abs() <= tolerance
    }
}

/// Evaluates both sides of the eventuality-conjunction identity
/// independently. The path side tracks each eventuality along every path;
/// the joined side marks every state (final or not) satisfying both.
pub fn check_conjunction(
    mc: &MarkovChain,
    query: &Query,
    path_cap: usize,
) -> Result<ConjunctionCheck, ChainError> {
    let h = mc.positions(query.hypothesis())?;
    let f = mc.positions(query.evidence())?;
    let both = mc.positions(&query.conjunction())?;

    let path_count = mc.final_state_indices().count();
    if path_count > path_cap {
        return Err(ChainError::PathCap(path_cap));
    }

    let mut separate = 0.0;
    // (state, probability so far, seen H, seen F)
    let mut stack = vec![(mc.initial(), 1.0, false, false)];
    while let Some((s, p, seen_h, seen_f)) = stack.pop() {
        let seen_h = seen_h || mc.satisfies(s, &h);
        let seen_f = seen_f || mc.satisfies(s, &f);
        if mc.state(s).is_final() {
            if seen_h && seen_f {
                separate += p;
            }
            continue;
        }
        for &(q, t) in mc.transitions(s) {
            stack.push((t, p * q, seen_h, seen_f));
        }
    }

    let marked: Vec<bool> = (0..mc.len()).map(|s| mc.satisfies(s, &both)).collect();
    Ok(ConjunctionCheck {
        separate,
        joined: reach_marked(mc, &marked),
    })
}

/// Conditional queries answered on a prebuilt chain.
pub struct ExplicitEngine {
    pub chain: MarkovChain,
}

impl Engine for ExplicitEngine {
    fn name(&self) -> &'static str {
        "explicit"
    }

    fn conditional(&mut self, query: &Query) -> Result<f64, InferenceError> {
        conditional_query(&self.chain, query)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn::{Assignment, NetworkBuilder, VarId};
    use crate::chain::{build_mc, BuildOptions};
    use crate::fixtures::student_mood;

    fn mood_chain() -> MarkovChain {
        let bn = student_mood();
        build_mc(&bn, &bn.topological_order().unwrap(), BuildOptions::default()).unwrap()
    }

    #[test]
    fn prep_marginal() {
        let mc = mood_chain();
        let goal = mc.final_states(&Assignment::new().with(VarId(1), 1)).unwrap();
        assert!((reach_probability(&mc, &goal) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn total_and_empty_goals() {
        let mc = mood_chain();
        let all: Vec<usize> = mc.final_state_indices().collect();
        assert!((reach_probability(&mc, &all) - 1.0).abs() < 1e-12);
        assert_eq!(reach_probability(&mc, &[]), 0.0);
        assert_eq!(reach_probability(&mc, &[0]), 1.0);
    }

    #[test]
    fn student_mood_conditional() {
        let mc = mood_chain();
        let q = Query::new(
            Assignment::new().with(VarId(1), 1),
            Assignment::new()
                .with(VarId(0), 0)
                .with(VarId(2), 0)
                .with(VarId(3), 0),
        )
        .unwrap();
        let p = conditional_query(&mc, &q).unwrap();
        assert!((p - 0.27).abs() < 1e-12, "{p}");
    }

    #[test]
    fn empty_query_is_certain() {
        assert!((conditional_query(&mood_chain(), &Query::default()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn impossible_evidence_ill_conditioned() {
        let mut b = NetworkBuilder::new("zero");
        let x = b.variable("x", ["0", "1"]);
        let y = b.variable("y", ["0", "1"]);
        b.cpt(x, &[], &[vec![0.5, 0.5]]).unwrap();
        b.cpt(y, &[x], &[vec![1.0, 0.0], vec![0.2, 0.8]]).unwrap();
        let bn = b.build().unwrap();
        let mc = build_mc(&bn, &bn.topological_order().unwrap(), BuildOptions::default()).unwrap();
        let q = Query::new(
            Assignment::new().with(x, 0).with(y, 1),
            Assignment::new(),
        )
        .unwrap();
        assert!(matches!(
            conditional_query(&mc, &q),
            Err(InferenceError::IllConditioned(d)) if d == 0.0
        ));
    }

    #[test]
    fn conjunction_identity_on_fixture() {
        let mc = mood_chain();
        let q = Query::new(
            Assignment::new().with(VarId(3), 1),
            Assignment::new().with(VarId(0), 1),
        )
        .unwrap();
        let c = check_conjunction(&mc, &q, DEFAULT_PATH_CAP).unwrap();
        assert!(c.holds(1e-12), "{c:?}");
        let trivial = check_conjunction(&mc, &Query::default(), DEFAULT_PATH_CAP).unwrap();
        assert!((trivial.separate - 1.0).abs() < 1e-12 && trivial.holds(1e-12));
        assert!(matches!(
            check_conjunction(&mc, &q, 3),
            Err(ChainError::PathCap(3))
        ));
    }
}
