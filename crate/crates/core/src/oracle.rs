//! Brute-force inference by enumerating every full assignment.
//!
//! Deliberately naive: it shares no code path with the chain or the
//! decision-diagram engines beyond [`BayesianNetwork::joint_of_values`].

use crate::bn::BayesianNetwork;
use crate::query::{ratio, Engine, InferenceError, Query};

/// Default bound on the number of full assignments enumerated.
pub const DEFAULT_STATE_CAP: u128 = 10_000_000;

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn assignment_count(bn: &BayesianNetwork) -> u128 {
    bn.variables()
        .iter()
        .fold(1u128, |acc, v| acc.saturating_mul(v.card() as u128))
}

/// Visits every full assignment in mixed-radix order over variable ids
/// (highest id fastest).
pub fn for_each_assignment(bn: &BayesianNetwork, mut f: impl FnMut(&[usize])) {
    let cards: Vec<usize> = bn.variables().iter().map(|v| v.card()).collect();
    if cards.contains(&0) {
        return;
    }
    let mut values = vec![0usize; cards.len()];
    loop {
        f(&values);
        let mut i = cards.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            values[i] += 1;
            if values[i] < cards[i] {
                break;
            }
            values[i] = 0;
        }
    }
}

/// `(Pr(H = h, F = f), Pr(F = f))` by direct summation.
pub fn oracle_terms(
    bn: &BayesianNetwork,
    query: &Query,
    cap: u128,
) -> Result<(f64, f64), InferenceError> {
    query.check(bn)?;
    let count = assignment_count(bn);
    if count > cap {
        return Err(InferenceError::Cap(format!(
            "{count} full assignments exceed the enumeration cap {cap}"
        )));
    }
    let both = query.conjunction();
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    for_each_assignment(bn, |values| {
        if query.evidence().is_consistent_with(values) {
            let p = bn.joint_of_values(values);
            den.add(p);
            if both.is_consistent_with(values) {
                num.add(p);
            }
        }
    });
    Ok((num.value(), den.value()))
}

pub fn oracle_infer(bn: &BayesianNetwork, query: &Query) -> Result<f64, InferenceError> {
    let (num, den) = oracle_terms(bn, query, DEFAULT_STATE_CAP)?;
    ratio(num, den)
}

/// [`oracle_infer`] as an [`Engine`].
pub struct Oracle<'a> {
    pub bn: &'a BayesianNetwork,
    pub cap: u128,
}

impl<'a> Oracle<'a> {
    pub fn new(bn: &'a BayesianNetwork) -> Self {
        Oracle {
            bn,
            cap: DEFAULT_STATE_CAP,
        }
    }
}

impl Engine for Oracle<'_> {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn conditional(&mut self, query: &Query) -> Result<f64, InferenceError> {
        let (num, den) = oracle_terms(self.bn, query, self.cap)?;
        ratio(num, den)
    }
}
