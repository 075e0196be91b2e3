//! Browser bindings. Every export takes text and returns a JSON string; a
//! failure comes back as `{"error": "..."}`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use reltrack::currents::rational_current;
use reltrack::freegroup::CyclicWord;
use reltrack::graphmap::{collapse_to_a_traintrack, parse_document, parse_rep, transition_matrix};
use reltrack::reltrees::{tree_ns_experiment, GrushkoTreePoint};
use reltrack::whitehead::{connectivity_report, relative_whitehead_graph, whitehead_graph, WhiteheadGraph};

type Result<T> = std::result::Result<T, String>;

fn wrap(r: Result<Value>) -> String {
    r.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn graph_json(g: &WhiteheadGraph) -> Value {
    let c = connectivity_report(g);
    json!({
        "vertex": g.vertex,
        "nodes": g.labels,
        "edges": g.edges,
        "components": c.components,
        "connected": c.connected,
    })
}

fn cyclic(basis: &reltrack::freegroup::RelativeBasis, text: &str) -> Result<CyclicWord> {
    let c = CyclicWord::new(&basis.parse_word(text).map_err(err)?);
    if c.is_empty() {
        return Err(format!("`{text}` is trivial"));
    }
    Ok(c)
}

pub fn analyze_value(spec: &str) -> Result<Value> {
    let rep = parse_rep(spec).map_err(err)?;
    let strata = rep.strata().len();
    let top = transition_matrix(&rep, strata - 1).map_err(err)?;
    let graphs = (0..rep.graph().vertex_count())
        .map(|v| whitehead_graph(&rep, v).map(|g| graph_json(&g)))
        .collect::<reltrack::Result<Vec<_>>>()
        .map_err(err)?;
    let relative = match collapse_to_a_traintrack(&rep) {
        Ok(q) => (0..q.graph().vertex_count())
            .map(|v| relative_whitehead_graph(&q, &rep, v).map(|g| graph_json(&g)))
            .collect::<reltrack::Result<Vec<_>>>()
            .map_err(err)?,
        Err(_) => Vec::new(),
    };
    Ok(json!({
        "strata": strata,
        "top_matrix": top.matrix,
        "lambda": top.pf.map(|p| p.lambda),
        "whitehead": graphs,
        "relative_whitehead": relative,
    }))
}

pub fn current_value(group: &str, word: &str, depth: usize) -> Result<Value> {
    let basis = parse_document(group).map_err(err)?.basis;
    let alpha = cyclic(&basis, word)?;
    let eta = rational_current(&basis, &alpha, depth).map_err(err)?;
    let rows: Vec<Value> = eta
        .weights()
        .iter()
        .map(|(w, q)| json!({ "word": basis.format_letters(w), "weight": q.to_string() }))
        .collect();
    Ok(json!({ "alpha": alpha.format(&basis), "depth": depth, "consistent": eta.is_consistent(), "weights": rows }))
}

pub fn spectra_value(spec: &str, sample: &str, p_max: usize) -> Result<Value> {
    let rep = parse_rep(spec).map_err(err)?;
    let words = sample
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| cyclic(rep.basis(), s))
        .collect::<Result<Vec<_>>>()?;
    let t = GrushkoTreePoint::pf_tree(&rep).map_err(err)?;
    let r = tree_ns_experiment(&rep, &t, &words, p_max, 1e-6).map_err(err)?;
    Ok(json!({
        "lambda": r.lambda,
        "sample": r.sample,
        "spectra": r.spectra,
        "sup_differences": r.sup_differences,
        "cauchy": r.cauchy,
    }))
}

/// Strata count, top λ, and Whitehead graphs of a representative.
#[wasm_bindgen]
pub fn analyze(spec: &str) -> String {
    wrap(analyze_value(spec))
}

/// The rational current of a word, up to `depth`, in the basis of a `group`/`factor` text.
#[wasm_bindgen]
pub fn current(group: &str, word: &str, depth: usize) -> String {
    wrap(current_value(group, word, depth))
}

/// Normalized translation lengths `l(φ^p g)/λ^p` on the eigenvector-metric tree.
#[wasm_bindgen]
pub fn spectra(spec: &str, sample: &str, p_max: usize) -> String {
    wrap(spectra_value(spec, sample, p_max))
}
