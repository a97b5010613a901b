//! Jani and Graphviz output for translated chains.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::chain::MarkovChain;

const AUTOMATON: &str = "bn";
const LOCATION: &str = "l";

fn eq(var: &str, value: usize) -> Value {
    json!({ "op": "=", "left": var, "right": value })
}

fn ne(var: &str, value: usize) -> Value {
    json!({ "op": "≠", "left": var, "right": value })
}

fn and(parts: Vec<Value>) -> Value {
    parts
        .into_iter()
        .reduce(|left, right| json!({ "op": "∧", "left": left, "right": right }))
        .unwrap_or(Value::Bool(true))
}

/// Jani DTMC equivalent to `mc`. Each network variable becomes a bounded
/// integer whose extra value `|D|` stands for "not yet set". One edge per
/// CPT row sets the next variable in order; a final self-loop keeps the
/// model free of deadlocks. Output is deterministic.
pub fn export_jani(mc: &MarkovChain) -> String {
    let rules = mc.rules();
    let unset = |i: usize| rules[i].labels.len();
    let variables: Vec<Value> = rules
        .iter()
        .enumerate()
        .map(|(i, r)| {
            json!({
                "name": r.name,
                "type": {
                    "kind": "bounded",
                    "base": "int",
                    "lower-bound": 0,
                    "upper-bound": unset(i),
                },
                "initial-value": unset(i),
            })
        })
        .collect();

    let mut edges = Vec::new();
    for (i, rule) in rules.iter().enumerate() {
        for row in 0..rule.cpt.row_count() {
            let mut guard = Vec::new();
            if i > 0 {
                guard.push(ne(&rules[i - 1].name, unset(i - 1)));
            }
            guard.push(eq(&rule.name, unset(i)));
            for (&pos, &value) in rule.parent_positions.iter().zip(&rule.cpt.row_values(row)) {
                guard.push(eq(&rules[pos].name, value));
            }
            let destinations: Vec<Value> = rule
                .cpt
                .row(row)
                .iter()
                .enumerate()
                .filter(|&(_, &p)| p > 0.0 || mc.keeps_zero_edges())
                .map(|(d, &p)| {
                    json!({
                        "location": LOCATION,
                        "probability": { "exp": p },
                        "assignments": [{ "ref": rule.name, "value": d }],
                    })
                })
                .collect();
            if destinations.is_empty() {
                continue;
            }
            edges.push(json!({
                "location": LOCATION,
                "guard": { "exp": and(guard) },
                "destinations": destinations,
            }));
        }
    }
    let done = match rules.last() {
        Some(last) => ne(&last.name, unset(rules.len() - 1)),
        None => Value::Bool(true),
    };
    edges.push(json!({
        "location": LOCATION,
        "guard": { "exp": done },
        "destinations": [{ "location": LOCATION, "probability": { "exp": 1.0 } }],
    }));

    let description = format!(
        "Markov chain of Bayesian network {}. Variables are set one at a time in the order {}; value |D| of a variable means it is not set yet.",
        mc.network_name,
        rules.iter().map(|r| r.name.as_str()).collect::<Vec<_>>().join(", ")
    );
    let model = json!({
        "jani-version": 1,
        "name": mc.network_name,
        "type": "dtmc",
        "metadata": { "description": description },
        "variables": variables,
        "properties": [],
        "automata": [{
            "name": AUTOMATON,
            "locations": [{ "name": LOCATION }],
            "initial-locations": [LOCATION],
            "edges": edges,
        }],
        "system": { "elements": [{ "automaton": AUTOMATON }] },
    });
    let mut text = serde_json::to_string_pretty(&model).expect("json values always serialize");
    text.push('\n');
    text
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz digraph of the explicit chain; final states are double circles.
pub fn export_dot(mc: &MarkovChain) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", dot_escape(&mc.network_name));
    out.push_str("  node [shape=circle];\n");
    for s in 0..mc.len() {
        let shape = if mc.state(s).is_final() { ", shape=doublecircle" } else { "" };
        let _ = writeln!(out, "  s{s} [label=\"{}\"{shape}];", dot_escape(&mc.describe(s)));
    }
    for s in 0..mc.len() {
        for &(p, t) in mc.transitions(s) {
            let _ = writeln!(out, "  s{s} -> s{t} [label=\"{p}\"];");
        }
    }
    out.push_str("}\n");
    out
}
