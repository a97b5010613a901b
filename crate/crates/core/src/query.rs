//! Conditional queries `Pr(H = h | F = f)` shared by every engine.

use thiserror::Error;

use crate::bn::{Assignment, BayesianNetwork, BnError, VarId};

/// Evidence probabilities below this are treated as zero.
pub const ILL_CONDITIONED_THRESHOLD: f64 = 1e-300;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum InferenceError {
    #[error("ill-conditioned query: evidence has probability {0}")]
    IllConditioned(f64),
    #[error("variable {var} bound to {hypothesis} in the hypothesis but {evidence} in the evidence")]
    Conflict {
        var: VarId,
        hypothesis: usize,
        evidence: usize,
    },
    #[error(transparent)]
    Network(#[from] BnError),
    #[error("resource cap exceeded: {0}")]
    Cap(String),
    #[error("{0}")]
    Engine(String),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Query {
    evidence: Assignment,
    hypothesis: Assignment,
}

impl Query {
    /// Rejects a variable bound to two different values. Binding the same
    /// value on both sides is allowed.
    pub fn new(evidence: Assignment, hypothesis: Assignment) -> Result<Self, InferenceError> {
        for (var, h) in hypothesis.iter() {
            if let Some(e) = evidence.get(var) {
                if e != h {
                    return Err(InferenceError::Conflict {
                        var,
                        hypothesis: h,
                        evidence: e,
                    });
                }
            }
        }
        Ok(Query {
            evidence,
            hypothesis,
        })
    }

    pub fn evidence(&self) -> &Assignment {
        &self.evidence
    }

    pub fn hypothesis(&self) -> &Assignment {
        &self.hypothesis
    }

    /// `H = h` and `F = f` merged into one assignment.
    pub fn conjunction(&self) -> Assignment {
        self.evidence
            .iter()
            .chain(self.hypothesis.iter())
            .collect()
    }

    pub fn check(&self, bn: &BayesianNetwork) -> Result<(), InferenceError> {
        self.evidence.check(bn)?;
        self.hypothesis.check(bn)?;
        Ok(())
    }
}

/// Turns numerator/denominator into the conditional, applying the shared
/// ill-conditioned rule.
pub fn ratio(numerator: f64, denominator: f64) -> Result<f64, InferenceError> {
    if denominator < ILL_CONDITIONED_THRESHOLD {
        Err(InferenceError::IllConditioned(denominator))
    } else {
        Ok(numerator / denominator)
    }
}

/// Index of `name` in `names`: an exact match, otherwise the unique entry
/// starting with `name`.
pub fn resolve_name<'a, I>(names: I, name: &str) -> Result<usize, BnError>
where
    I: IntoIterator<Item = &'a str>,
{
    let names: Vec<&str> = names.into_iter().collect();
    if let Some(i) = names.iter().position(|n| *n == name) {
        return Ok(i);
    }
    let matches: Vec<usize> = (0..names.len()).filter(|&i| names[i].starts_with(name)).collect();
    match matches.as_slice() {
        [i] => Ok(*i),
        [] => Err(BnError::UnknownVariable(name.to_string())),
        many => Err(BnError::Binding(format!(
            "{name} is ambiguous: {}",
            many.iter().map(|&i| names[i]).collect::<Vec<_>>().join(", ")
        ))),
    }
}

/// Splits `var=value`, trimming both sides.
pub fn split_binding(binding: &str) -> Result<(&str, &str), BnError> {
    binding
        .split_once('=')
        .map(|(a, b)| (a.trim(), b.trim()))
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .ok_or_else(|| BnError::Binding(format!("binding {binding:?} is not of the form var=value")))
}

/// Parses `var=label` bindings against `bn`. Names resolve through
/// [`resolve_name`]; values must be domain labels.
pub fn parse_assignment<S: AsRef<str>>(bn: &BayesianNetwork, bindings: &[S]) -> Result<Assignment, BnError> {
    let mut a = Assignment::new();
    for b in bindings {
        let (name, label) = split_binding(b.as_ref())?;
        let var = VarId(resolve_name(bn.variables().iter().map(|v| v.name.as_str()), name)?);
        let v = bn.variable(var);
        let value = v.value_index(label).ok_or_else(|| {
            BnError::Binding(format!(
                "{} has no value {label:?} (values: {})",
                v.name,
                v.domain.join(", ")
            ))
        })?;
        if a.bind(var, value).is_some_and(|old| old != value) {
            return Err(BnError::Binding(format!("{} bound twice", v.name)));
        }
    }
    Ok(a)
}

/// Anything that answers conditional queries over one network.
pub trait Engine {
    fn name(&self) -> &'static str;
    fn conditional(&mut self, query: &Query) -> Result<f64, InferenceError>;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::student_mood;

    #[test]
    fn prefix_resolution() {
        let names = ["Dif", "Prep", "Grade", "Mood"];
        assert_eq!(resolve_name(names, "P").unwrap(), 1);
        assert_eq!(resolve_name(names, "Grade").unwrap(), 2);
        assert!(resolve_name(["ab", "ac"], "a").is_err());
        assert_eq!(resolve_name(["a", "ab"], "a").unwrap(), 0);
        assert!(resolve_name(names, "X").is_err());
    }

    #[test]
    fn label_bindings() {
        let bn = student_mood();
        let a = parse_assignment(&bn, &["P=1", " Dif = 0 "]).unwrap();
        assert_eq!(a.get(VarId(1)), Some(1));
        assert_eq!(a.get(VarId(0)), Some(0));
        assert!(parse_assignment(&bn, &["P=2"]).is_err());
        assert!(parse_assignment(&bn, &["P"]).is_err());
        assert!(parse_assignment(&bn, &["P=1", "Prep=0"]).is_err());
        assert!(parse_assignment(&bn, &["P=1", "Prep=1"]).is_ok());
    }

    #[test]
    fn conflicting_bindings_rejected() {
        let ev = Assignment::new().with(VarId(0), 1);
        let hyp = Assignment::new().with(VarId(0), 0);
        assert!(matches!(
            Query::new(ev.clone(), hyp),
            Err(InferenceError::Conflict { .. })
        ));
        let same = Assignment::new().with(VarId(0), 1);
        assert_eq!(Query::new(ev, same).unwrap().conjunction().len(), 1);
    }

    #[test]
    fn ratio_threshold() {
        assert!(matches!(ratio(0.0, 0.0), Err(InferenceError::IllConditioned(_))));
        assert!(matches!(ratio(0.0, 1e-301), Err(InferenceError::IllConditioned(_))));
        assert_eq!(ratio(0.25, 0.5).unwrap(), 0.5);
    }
}
