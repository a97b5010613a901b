//! Browser bindings. The logic lives in plain functions returning
//! `Result<String, String>` so it runs and is tested natively; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use std::fmt::Write as _;

use bnmc::chain::{build_mc, BuildOptions, MarkovChain};
use bnmc::oracle::oracle_terms;
use bnmc::query::{parse_assignment, ratio};
use bnmc::reach;
use bnmc::{compile, parse_bif, BayesianNetwork, CompileOptions, InferenceError, Query};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest chain the demo draws.
pub const MAX_DRAWN_STATES: u128 = 511;
/// Largest state or assignment count the demo enumerates.
pub const DEMO_CAP: u128 = 1_000_000;

fn load(bif: &str) -> Result<BayesianNetwork, String> {
    parse_bif(bif).map_err(|e| e.to_string())
}

fn bindings(text: &str) -> Vec<&str> {
    text.split([',', ';', '\n'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_query(bn: &BayesianNetwork, evidence: &str, hypothesis: &str) -> Result<Query, String> {
    let ev = parse_assignment(bn, &bindings(evidence)).map_err(|e| e.to_string())?;
    let hyp = parse_assignment(bn, &bindings(hypothesis)).map_err(|e| e.to_string())?;
    Query::new(ev, hyp).map_err(|e| e.to_string())
}

/// Variables, domains, parents and statistics as JSON.
pub fn network_summary(bif: &str) -> Result<String, String> {
    let bn = load(bif)?;
    let s = bn.stats();
    let variables: Vec<Value> = bn
        .variables()
        .iter()
        .map(|v| {
            json!({
                "name": v.name,
                "domain": v.domain,
                "parents": bn.parents(v.id).iter().map(|p| &bn.variable(*p).name).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(json!({
        "name": bn.name,
        "variables": variables,
        "stats": {
            "vertices": s.vertex_count,
            "edges": s.edge_count,
            "in_degree_max": s.max_in_degree,
            "domain_max": s.max_domain_size,
            "avg_markov_blanket": s.avg_markov_blanket,
            "parameters": s.parameter_count,
        },
    })
    .to_string())
}

fn outcome(r: Result<(f64, f64), InferenceError>) -> Result<Value, String> {
    let (num, den) = r.map_err(|e| e.to_string())?;
    Ok(match ratio(num, den) {
        Ok(p) => json!(p),
        Err(_) => json!("ill-conditioned"),
    })
}

/// `Pr(hypothesis | evidence)` on all three engines. Bindings are
/// comma-separated `var=value` pairs.
pub fn run_query(bif: &str, evidence: &str, hypothesis: &str) -> Result<String, String> {
    let bn = load(bif)?;
    let q = parse_query(&bn, evidence, hypothesis)?;
    let order = bn.topological_order().map_err(|e| e.to_string())?;
    let options = BuildOptions {
        state_cap: DEMO_CAP,
        ..BuildOptions::default()
    };
    let mc = build_mc(&bn, &order, options).map_err(|e| e.to_string())?;
    let explicit = outcome(reach::query_terms(&mc, &q))?;
    let mut sym = compile(&bn, &order, CompileOptions::default()).map_err(|e| e.to_string())?;
    let symbolic = outcome(sym.query_terms(&q))?;
    let oracle = outcome(oracle_terms(&bn, &q, DEMO_CAP))?;
    let numbers: Vec<f64> = [&explicit, &symbolic, &oracle].iter().filter_map(|v| v.as_f64()).collect();
    let deviation = match numbers.len() {
        3 => {
            let max = numbers.iter().cloned().fold(f64::MIN, f64::max);
            let min = numbers.iter().cloned().fold(f64::MAX, f64::min);
            json!(max - min)
        }
        _ => Value::Null,
    };
    Ok(json!({
        "explicit": explicit,
        "symbolic": symbolic,
        "oracle": oracle,
        "deviation": deviation,
        "states": mc.len(),
        "diagram_nodes": sym.joint_node_count(),
    })
    .to_string())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn last_binding(mc: &MarkovChain, s: usize) -> String {
    let depth = mc.state(s).depth();
    if depth == 0 {
        return "init".into();
    }
    let rule = &mc.rules()[depth - 1];
    let value = mc.state(s).values()[depth - 1].expect("prefix is bound") as usize;
    format!("{}={}", rule.name, rule.labels[value])
}

/// SVG drawing of the chain as a tree; final states are drawn with a
/// double outline.
pub fn chain_svg(bif: &str, keep_zero_edges: bool) -> Result<String, String> {
    let bn = load(bif)?;
    let order = bn.topological_order().map_err(|e| e.to_string())?;
    let options = BuildOptions {
        keep_zero_edges,
        state_cap: MAX_DRAWN_STATES,
    };
    let mc = build_mc(&bn, &order, options).map_err(|e| e.to_string())?;
    let (dx, dy, r) = (64.0, 90.0, 22.0);
    let mut x = vec![0.0f64; mc.len()];
    let mut next_leaf = 0.0;
    let children = |s: usize| -> Vec<usize> {
        mc.transitions(s).iter().map(|&(_, t)| t).filter(|&t| t != s).collect()
    };
    fn place(
        s: usize,
        children: &dyn Fn(usize) -> Vec<usize>,
        x: &mut [f64],
        next_leaf: &mut f64,
        dx: f64,
    ) {
        let kids = children(s);
        if kids.is_empty() {
            x[s] = *next_leaf;
            *next_leaf += dx;
            return;
        }
        for &k in &kids {
            place(k, children, x, next_leaf, dx);
        }
        x[s] = (x[kids[0]] + x[kids[kids.len() - 1]]) / 2.0;
    }
    place(mc.initial(), &children, &mut x, &mut next_leaf, dx);
    let depth = mc.rules().len() as f64;
    let width = next_leaf.max(dx) + dx;
    let height = depth * dy + 3.0 * r + 20.0;
    let pos = |s: usize| (x[s] + dx, mc.state(s).depth() as f64 * dy + r + 10.0);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    for s in 0..mc.len() {
        let (x1, y1) = pos(s);
        for &(p, t) in mc.transitions(s) {
            if t == s {
                continue;
            }
            let (x2, y2) = pos(t);
            let _ = writeln!(
                out,
                r##"<line x1="{x1}" y1="{}" x2="{x2}" y2="{}" stroke="#888"/><text x="{}" y="{}" text-anchor="middle" fill="#a33">{p}</text>"##,
                y1 + r,
                y2 - r,
                (x1 + x2) / 2.0,
                (y1 + y2) / 2.0
            );
        }
    }
    for s in 0..mc.len() {
        let (cx, cy) = pos(s);
        let title = xml_escape(&mc.describe(s));
        let _ = write!(
            out,
            r##"<g><title>{title}</title><circle cx="{cx}" cy="{cy}" r="{r}" fill="#fff" stroke="#333"/>"##
        );
        if mc.state(s).is_final() {
            let _ = write!(
                out,
                r##"<circle cx="{cx}" cy="{cy}" r="{}" fill="none" stroke="#333"/>"##,
                r - 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{cx}" y="{}" text-anchor="middle">{}</text></g>"#,
            cy + 4.0,
            xml_escape(&last_binding(&mc, s))
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Node count, total mass and Graphviz text of the compiled joint diagram.
pub fn diagram_summary(bif: &str) -> Result<String, String> {
    let bn = load(bif)?;
    let mut sym = compile(&bn, &bn.topological_order().map_err(|e| e.to_string())?, CompileOptions::default())
        .map_err(|e| e.to_string())?;
    let mass = sym.total_mass();
    let dot = sym.manager.to_dot(sym.joint);
    Ok(json!({
        "nodes": sym.joint_node_count(),
        "bits": sym.encoding.total_bits(),
        "mass": mass,
        "dot": dot,
    })
    .to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = networkSummary)]
pub fn network_summary_js(bif: &str) -> Result<String, JsError> {
    js(network_summary(bif))
}

#[wasm_bindgen(js_name = runQuery)]
pub fn run_query_js(bif: &str, evidence: &str, hypothesis: &str) -> Result<String, JsError> {
    js(run_query(bif, evidence, hypothesis))
}

#[wasm_bindgen(js_name = chainSvg)]
pub fn chain_svg_js(bif: &str, keep_zero_edges: bool) -> Result<String, JsError> {
    js(chain_svg(bif, keep_zero_edges))
}

#[wasm_bindgen(js_name = diagramSummary)]
pub fn diagram_summary_js(bif: &str) -> Result<String, JsError> {
    js(diagram_summary(bif))
}

#[wasm_bindgen(js_name = studentMoodBif)]
pub fn student_mood_bif() -> String {
    bnmc::fixtures::STUDENT_MOOD_BIF.to_string()
}
