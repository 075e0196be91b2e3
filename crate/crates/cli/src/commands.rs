use std::fmt::Write as _;

use anyhow::{bail, Result};
use clap::ValueEnum;
use serde_json::{json, Value};

use reltrack::currents::{ns_experiment, rational_current, RelativeCurrent};
use reltrack::freegroup::{CyclicWord, FreeFactorSystem, RelativeBasis};
use reltrack::graphmap::{
    collapse_to_a_traintrack, rep_to_dot, transition_matrix, verify_rtt, GraphMapRep, DEFAULT_PATH_BOUND,
};
use reltrack::lamination::{attracting_language, dual_language_simplicial, recurrence_gap, LeafLanguage, Recurrence};
use reltrack::reltrees::{
    eta_infinity, is_dual_at_depth, rational_dual, translation_length, tree_ns_experiment, GrushkoTreePoint,
};
use reltrack::whitehead::{
    connectivity_report, irreducibility_certificate, leaf_classes_at_vertex, relative_whitehead_graph,
    whitehead_graph, Verdict, WhiteheadGraph,
};

use crate::specfile::SpecFile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Dot,
}

/// Rendered output and whether every verification passed.
pub struct Outcome {
    pub text: String,
    pub ok: bool,
}

fn json_out(v: &Value, ok: bool) -> Result<Outcome> {
    Ok(Outcome { text: serde_json::to_string_pretty(v)? + "\n", ok })
}

fn unsupported(cmd: &str, fmt: Format) -> anyhow::Error {
    anyhow::anyhow!("`{cmd}` has no {fmt:?} output")
}

pub fn cyclic(basis: &RelativeBasis, text: &str) -> Result<CyclicWord> {
    let c = CyclicWord::new(&basis.parse_word(text)?);
    if c.is_empty() {
        bail!("`{text}` is trivial");
    }
    Ok(c)
}

pub fn current_rows(eta: &RelativeCurrent) -> Vec<Value> {
    let b = eta.basis();
    eta.weights()
        .iter()
        .map(|(w, q)| json!({ "word": b.format_letters(w), "weight": q.to_string() }))
        .collect()
}

fn wh_json(g: &WhiteheadGraph) -> Value {
    let c = connectivity_report(g);
    json!({
        "vertex": g.vertex,
        "nodes": g.labels,
        "edges": g.label_edges(),
        "connected": c.connected,
        "components": c.components,
    })
}

struct Relative {
    collapsed: GraphMapRep,
    graphs: Vec<WhiteheadGraph>,
}

fn relative(rep: &GraphMapRep) -> Result<Relative> {
    let collapsed = collapse_to_a_traintrack(rep)?;
    let graphs = (0..collapsed.graph().vertex_count())
        .map(|v| relative_whitehead_graph(&collapsed, rep, v))
        .collect::<reltrack::Result<Vec<_>>>()?;
    Ok(Relative { collapsed, graphs })
}

fn absolute(rep: &GraphMapRep) -> Result<Vec<WhiteheadGraph>> {
    Ok((0..rep.graph().vertex_count()).map(|v| whitehead_graph(rep, v)).collect::<reltrack::Result<Vec<_>>>()?)
}

pub fn analyze(spec: &SpecFile, fmt: Format) -> Result<Outcome> {
    let rep = &spec.rep;
    let basis = rep.basis();
    let strata = (0..rep.strata().len()).map(|r| transition_matrix(rep, r)).collect::<reltrack::Result<Vec<_>>>()?;
    let rtt = verify_rtt(rep, DEFAULT_PATH_BOUND)?;
    let wh = absolute(rep)?;
    let rel = relative(rep);
    match fmt {
        Format::Csv => {
            let mut s = String::from("stratum,edges,class,growth,lambda\n");
            for d in &strata {
                let lambda = d.pf.as_ref().map_or(String::new(), |p| format!("{:.12}", p.lambda));
                let growth = serde_json::to_value(d.growth)?;
                let _ = writeln!(s, "{},{},{},{},{}", d.stratum, d.edge_names.join(" "), d.class.name(), growth.as_str().unwrap_or(""), lambda);
            }
            return Ok(Outcome { text: s, ok: rtt.passed });
        }
        Format::Dot => {
            let mut s = rep_to_dot(rep);
            for g in wh.iter().chain(rel.iter().flat_map(|r| r.graphs.iter())) {
                s.push_str(&g.to_dot());
            }
            return Ok(Outcome { text: s, ok: rtt.passed });
        }
        Format::Json => {}
    }
    let a = FreeFactorSystem::from_basis(basis);
    let (collapse, relative_graphs, certificate, cert_ok) = match &rel {
        Ok(r) => {
            let q = &r.collapsed;
            let info = q.collapse_info().expect("collapsed representative");
            let g = rep.graph();
            let qg = q.graph();
            let top = transition_matrix(q, q.strata().len() - 1)?;
            let cert = irreducibility_certificate(q, rep, &a)?;
            let ok = cert.verdict == Verdict::CertifiedNecessaryConditions;
            let summary = json!({
                "forest": info.forest.iter().map(|&e| g.edge_name(e)).collect::<Vec<_>>(),
                "vertices": qg.vertex_names(),
                "map": (0..qg.edge_count()).map(|e| q.format_image(e)).collect::<Vec<_>>(),
                "top_stratum": top,
            });
            (summary, r.graphs.iter().map(wh_json).collect::<Vec<_>>(), serde_json::to_value(cert)?, ok)
        }
        Err(e) => (json!({ "error": e.to_string() }), Vec::new(), Value::Null, false),
    };
    let report = json!({
        "basis": basis.names(),
        "peripheral": a.describe(basis),
        "strata": strata,
        "rtt": rtt,
        "collapse": collapse,
        "whitehead": wh.iter().map(wh_json).collect::<Vec<_>>(),
        "relative_whitehead": relative_graphs,
        "certificate": certificate,
    });
    json_out(&report, rtt.passed && cert_ok)
}

pub fn whitehead(spec: &SpecFile, vertex: Option<&str>, fmt: Format) -> Result<Outcome> {
    let rep = &spec.rep;
    let g = rep.graph();
    let keep = |name: &str| vertex.is_none_or(|v| v == name);
    if let Some(v) = vertex {
        if g.vertex_index(v).is_none() {
            bail!("unknown vertex `{v}`");
        }
    }
    let wh: Vec<WhiteheadGraph> = absolute(rep)?.into_iter().filter(|w| keep(&w.vertex)).collect();
    let rel = relative(rep)?;
    let rel_graphs: Vec<&WhiteheadGraph> = rel.graphs.iter().collect();
    match fmt {
        Format::Dot => {
            let text = wh.iter().chain(rel_graphs.iter().copied()).map(|g| g.to_dot()).collect();
            Ok(Outcome { text, ok: true })
        }
        Format::Csv => Err(unsupported("whitehead", fmt)),
        Format::Json => {
            let mut leaves = Vec::new();
            for v in (0..g.vertex_count()).filter(|&v| keep(g.vertex_name(v))) {
                let classes = match leaf_classes_at_vertex(rep, v) {
                    Ok(c) => json!(c),
                    Err(e) => json!({ "error": e.to_string() }),
                };
                leaves.push(json!({ "vertex": g.vertex_name(v), "classes": classes }));
            }
            let report = json!({
                "whitehead": wh.iter().map(wh_json).collect::<Vec<_>>(),
                "relative_whitehead": rel_graphs.iter().map(|g| wh_json(g)).collect::<Vec<_>>(),
                "leaf_classes": leaves,
            });
            json_out(&report, true)
        }
    }
}

fn language_out(lang: &LeafLanguage, extra: Value, fmt: Format, ok: bool) -> Result<Outcome> {
    match fmt {
        Format::Csv => Ok(Outcome { text: format!("word\n{}", lang.to_text()), ok }),
        Format::Dot => Err(unsupported("lamination", fmt)),
        Format::Json => {
            let mut v = json!({ "depth": lang.depth, "words": lang.format_words(), "source": lang.generator });
            if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
                m.extend(e);
            }
            json_out(&v, ok)
        }
    }
}

pub fn lamination_rep(spec: &SpecFile, m: usize, window: usize, fmt: Format) -> Result<Outcome> {
    let rep = &spec.rep;
    let lang = attracting_language(rep, m)?;
    let recurrence = recurrence_gap(rep, m, window)?;
    let ok = matches!(recurrence, Recurrence::Bounded { .. });
    let basis_words = lang.to_basis(rep).ok().map(|l| l.format_words());
    let extra = json!({ "rounds": lang.rounds, "basis_words": basis_words, "recurrence": recurrence });
    language_out(&lang, extra, fmt, ok)
}

pub fn lamination_tree(t: &GrushkoTreePoint, m: usize, fmt: Format) -> Result<Outcome> {
    let lang = dual_language_simplicial(t, m)?;
    language_out(&lang, json!({}), fmt, true)
}

pub fn currents(spec: &SpecFile, alpha: &str, n_max: usize, m: usize, fmt: Format) -> Result<Outcome> {
    let basis = spec.rep.basis();
    let alpha = cyclic(basis, alpha)?;
    let report = ns_experiment(&spec.rep, &alpha, n_max, m)?;
    let ok = report.ratio_converged;
    match fmt {
        Format::Csv => {
            let mut s = String::from("n,mode,ratio,distance\n");
            for (i, mode) in report.modes.iter().enumerate() {
                let cell = |v: Option<&f64>| v.map_or(String::new(), |x| format!("{x:.12}"));
                let _ = writeln!(s, "{},{},{},{}", i + 1, mode, cell(report.ratios.get(i)), cell(report.distances.get(i)));
            }
            Ok(Outcome { text: s, ok })
        }
        Format::Dot => Err(unsupported("currents", fmt)),
        Format::Json => {
            let eta = rational_current(basis, &alpha, m)?;
            let v = json!({
                "report": report,
                "ratio_error": report.ratios.last().map(|r| (r - report.lambda).abs()),
                "eta_alpha": current_rows(&eta),
            });
            json_out(&v, ok)
        }
    }
}

pub fn trees(
    spec: &SpecFile,
    tree: Option<GrushkoTreePoint>,
    sample: &[String],
    p_max: usize,
    tol: f64,
    fmt: Format,
) -> Result<Outcome> {
    if sample.is_empty() {
        bail!("empty sample: give --sample or a `sample` line");
    }
    let basis = spec.rep.basis();
    let words = sample.iter().map(|s| cyclic(basis, s)).collect::<Result<Vec<_>>>()?;
    let t = match tree {
        Some(t) => t,
        None => GrushkoTreePoint::pf_tree(&spec.rep)?,
    };
    let report = tree_ns_experiment(&spec.rep, &t, &words, p_max, tol)?;
    let ok = p_max == 0 || report.cauchy;
    match fmt {
        Format::Csv => Ok(Outcome { text: report.to_csv(), ok }),
        Format::Dot => Err(unsupported("trees", fmt)),
        Format::Json => json_out(&serde_json::to_value(&report)?, ok),
    }
}

pub fn pairing(t: &GrushkoTreePoint, alpha: Option<&str>, eta_inf: bool, m: usize, fmt: Format) -> Result<Outcome> {
    let mut rows: Vec<(&str, Value)> = Vec::new();
    if let Some(text) = alpha {
        let w = cyclic(t.basis(), text)?;
        rows.push(("alpha", json!(w.format(t.basis()))));
        rows.push(("translation_length", json!(translation_length(t, &w).to_string())));
        rows.push(("rational_dual", json!(rational_dual(t, &w))));
        let eta = rational_current(t.basis(), &w, m)?;
        rows.push(("dual_at_depth", json!(is_dual_at_depth(t, &eta, m)?)));
    }
    if eta_inf {
        let eta = eta_infinity(m)?;
        rows.push(("eta_infinity_dual_at_depth", json!(is_dual_at_depth(t, &eta, m)?)));
    }
    if rows.is_empty() {
        bail!("nothing to pair: give --alpha or --eta-infinity");
    }
    rows.insert(0, ("depth", json!(m)));
    match fmt {
        Format::Csv => {
            let mut s = String::from("quantity,value\n");
            for (k, v) in &rows {
                let v = v.as_str().map_or_else(|| v.to_string(), String::from);
                let _ = writeln!(s, "{k},{v}");
            }
            Ok(Outcome { text: s, ok: true })
        }
        Format::Dot => Err(unsupported("pairing", fmt)),
        Format::Json => {
            let map: serde_json::Map<String, Value> = rows.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            json_out(&Value::Object(map), true)
        }
    }
}
