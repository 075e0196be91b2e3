//! The line-oriented text format for representatives and tree points.
//!
//! ```text
//! group  rank=4 basis=a,b,c,d
//! factor A1=a,b
//! graph  vertices=v  edges=a(v,v),b(v,v),c(v,v),d(v,v)
//! marking a=a b=b c=c d=d
//! map    a->a b ; b->b ; c->c a d ; d->d c a d
//! filtration G1=a,b
//! ```
//!
//! Tree points add `collapse=x,y` and `lengths=e:1,f:1/2`. Without a `graph`
//! line the rose on the basis with identity marking is used.

use std::fmt::Write as _;

use num_rational::BigRational;

use super::{GraphMapRep, MarkedGraph};
use crate::error::{Error, Result};
use crate::freegroup::{Letter, RelativeBasis};

/// A parsed file before it is turned into a representative or a tree point.
#[derive(Clone, Debug)]
pub struct Document {
    pub basis: RelativeBasis,
    pub graph: MarkedGraph,
    pub map: Option<Vec<Vec<Letter>>>,
    pub filtration: Option<Vec<Vec<usize>>>,
    pub collapse: Option<Vec<usize>>,
    pub lengths: Option<Vec<(usize, BigRational)>>,
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Splits `key=value` tokens, allowing values with embedded spaces: a token
/// without `=` continues the previous value.
fn key_values(rest: &str, line: usize) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for tok in rest.split_whitespace() {
        match tok.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => match out.last_mut() {
                Some((_, v)) => {
                    v.push(' ');
                    v.push_str(tok);
                }
                None => return Err(perr(line, format!("expected key=value, found `{tok}`"))),
            },
        }
    }
    Ok(out)
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

/// Parses `name(u,w),...`.
fn parse_edges(v: &str, line: usize) -> Result<Vec<(String, String, String)>> {
    let mut out = Vec::new();
    let mut rest = v.trim();
    while !rest.is_empty() {
        let open = rest.find('(').ok_or_else(|| perr(line, format!("malformed edge list at `{rest}`")))?;
        let close = rest.find(')').ok_or_else(|| perr(line, format!("malformed edge list at `{rest}`")))?;
        let name = rest[..open].trim().trim_start_matches(',').trim();
        let (a, b) = rest[open + 1..close]
            .split_once(',')
            .ok_or_else(|| perr(line, format!("edge `{name}` needs two endpoints")))?;
        if name.is_empty() {
            return Err(perr(line, "edge without a name"));
        }
        out.push((name.to_string(), a.trim().to_string(), b.trim().to_string()));
        rest = rest[close + 1..].trim_start_matches(',').trim();
    }
    Ok(out)
}

/// Parses any file in the format; unknown keywords are rejected.
pub fn parse_document(text: &str) -> Result<Document> {
    let mut group: Option<(usize, RelativeBasis, usize)> = None;
    let mut factors: Vec<(Vec<String>, usize)> = Vec::new();
    let mut graph_line: Option<(String, usize)> = None;
    let mut marking_line: Option<(String, usize)> = None;
    let mut map_line: Option<(String, usize)> = None;
    let mut filtration_line: Option<(String, usize)> = None;
    let mut collapse_line: Option<(String, usize)> = None;
    let mut lengths_line: Option<(String, usize)> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let split = content.find(|c: char| c.is_whitespace() || c == '=').unwrap_or(content.len());
        let keyword = &content[..split];
        let rest = content[split..].trim_start().trim_start_matches('=').trim().to_string();
        let slot = match keyword {
            "group" => {
                let kv = key_values(&rest, line)?;
                let mut rank = None;
                let mut names = None;
                for (k, v) in kv {
                    match k.as_str() {
                        "rank" => rank = Some(v.parse::<usize>().map_err(|_| perr(line, "rank must be an integer"))?),
                        "basis" => names = Some(list(&v)),
                        other => return Err(perr(line, format!("unknown group key `{other}`"))),
                    }
                }
                let names = names.ok_or_else(|| perr(line, "group needs basis="))?;
                if let Some(r) = rank {
                    if r != names.len() {
                        return Err(perr(line, format!("rank={r} but the basis has {} letters", names.len())));
                    }
                }
                let basis = RelativeBasis::new(&names, Vec::new()).map_err(|e| perr(line, e.to_string()))?;
                group = Some((names.len(), basis, line));
                continue;
            }
            "factor" => {
                let kv = key_values(&rest, line)?;
                for (_, v) in kv {
                    factors.push((list(&v), line));
                }
                continue;
            }
            "graph" => &mut graph_line,
            "marking" => &mut marking_line,
            "map" => &mut map_line,
            "filtration" => &mut filtration_line,
            "collapse" => &mut collapse_line,
            "lengths" => &mut lengths_line,
            other => return Err(perr(line, format!("unknown keyword `{other}`"))),
        };
        if slot.is_some() {
            return Err(perr(line, format!("duplicate `{keyword}` line")));
        }
        *slot = Some((rest, line));
    }

    let (_, mut basis, _) = group.ok_or_else(|| perr(1, "missing `group` line"))?;
    if !factors.is_empty() {
        let mut blocks = Vec::new();
        for (names, line) in &factors {
            let block = names
                .iter()
                .map(|n| basis.generator(n).ok_or_else(|| perr(*line, format!("unknown symbol `{n}`"))))
                .collect::<Result<Vec<_>>>()?;
            blocks.push(block);
        }
        let line = factors[0].1;
        basis = basis.with_blocks(blocks).map_err(|e| perr(line, e.to_string()))?;
    }

    let graph = match &graph_line {
        None => {
            if let Some((_, line)) = &marking_line {
                return Err(perr(*line, "a marking needs a `graph` line"));
            }
            MarkedGraph::rose(&basis)
        }
        Some((rest, line)) => {
            let line = *line;
            let kv = key_values(rest, line)?;
            let mut vertices = None;
            let mut edges = None;
            for (k, v) in kv {
                match k.as_str() {
                    "vertices" => vertices = Some(list(&v)),
                    "edges" => edges = Some(parse_edges(&v, line)?),
                    other => return Err(perr(line, format!("unknown graph key `{other}`"))),
                }
            }
            let vertices = vertices.ok_or_else(|| perr(line, "graph needs vertices="))?;
            let edges = edges.ok_or_else(|| perr(line, "graph needs edges="))?;
            let vid = |n: &str| {
                vertices.iter().position(|x| x == n).ok_or_else(|| perr(line, format!("unknown vertex `{n}`")))
            };
            let ends = edges.iter().map(|(_, a, b)| Ok((vid(a)?, vid(b)?))).collect::<Result<Vec<_>>>()?;
            let names: Vec<String> = edges.iter().map(|e| e.0.clone()).collect();
            let alphabet = RelativeBasis::new(&names, Vec::new()).map_err(|e| perr(line, e.to_string()))?;
            let (mrest, mline) = marking_line.as_ref().ok_or_else(|| perr(line, "a `graph` needs a `marking` line"))?;
            let mut marking = vec![None; basis.rank()];
            for (k, v) in key_values(mrest, *mline)? {
                let g = basis.generator(&k).ok_or_else(|| perr(*mline, format!("unknown symbol `{k}`")))?;
                let p = alphabet.parse_letters(&v).map_err(|e| perr(*mline, e.to_string()))?;
                marking[g] = Some(p);
            }
            let marking = marking
                .into_iter()
                .enumerate()
                .map(|(g, m)| m.ok_or_else(|| perr(*mline, format!("no marking path for `{}`", basis.name(g)))))
                .collect::<Result<Vec<_>>>()?;
            MarkedGraph::new(vertices.clone(), names, ends, marking).map_err(|e| perr(line, e.to_string()))?
        }
    };
    let edge_id = |n: &str, line: usize| {
        graph.edge_alphabet().generator(n).ok_or_else(|| perr(line, format!("unknown edge `{n}`")))
    };

    let map = match &map_line {
        None => None,
        Some((rest, line)) => {
            let mut images = vec![None; graph.edge_count()];
            for entry in rest.split(';') {
                let entry = entry.trim();
                if entry.is_empty() {
                    continue;
                }
                let (lhs, rhs) =
                    entry.split_once("->").ok_or_else(|| perr(*line, format!("expected `edge->path`, found `{entry}`")))?;
                let e = edge_id(lhs.trim(), *line)?;
                if images[e].is_some() {
                    return Err(perr(*line, format!("edge `{}` mapped twice", lhs.trim())));
                }
                images[e] = Some(graph.parse_path(rhs).map_err(|err| perr(*line, err.to_string()))?);
            }
            let images = images
                .into_iter()
                .enumerate()
                .map(|(e, m)| m.ok_or_else(|| perr(*line, format!("no image for edge `{}`", graph.edge_name(e)))))
                .collect::<Result<Vec<_>>>()?;
            Some(images)
        }
    };

    let filtration = match &filtration_line {
        None => None,
        Some((rest, line)) => Some(
            key_values(rest, *line)?
                .into_iter()
                .map(|(_, v)| list(&v).iter().map(|n| edge_id(n, *line)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?,
        ),
    };

    let collapse = match &collapse_line {
        None => None,
        Some((rest, line)) => Some(list(rest).iter().map(|n| edge_id(n, *line)).collect::<Result<Vec<_>>>()?),
    };

    let lengths = match &lengths_line {
        None => None,
        Some((rest, line)) => Some(
            list(rest)
                .iter()
                .map(|item| {
                    let (n, v) = item.split_once(':').ok_or_else(|| perr(*line, format!("expected edge:length, found `{item}`")))?;
                    let q: BigRational = v.trim().parse().map_err(|_| perr(*line, format!("bad length `{v}`")))?;
                    Ok((edge_id(n.trim(), *line)?, q))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };

    Ok(Document { basis, graph, map, filtration, collapse, lengths })
}

/// Parses a representative; a `map` line is required.
pub fn parse_rep(text: &str) -> Result<GraphMapRep> {
    let doc = parse_document(text)?;
    let map_line = text
        .lines()
        .position(|l| l.trim_start().starts_with("map"))
        .map_or(1, |i| i + 1);
    if doc.collapse.is_some() || doc.lengths.is_some() {
        return Err(perr(1, "`collapse`/`lengths` belong to tree files"));
    }
    let images = doc.map.ok_or_else(|| perr(1, "missing `map` line"))?;
    GraphMapRep::new(doc.basis, doc.graph, images, doc.filtration.unwrap_or_default())
        .map_err(|e| perr(map_line, e.to_string()))
}

pub(crate) fn graph_lines(basis: &RelativeBasis, g: &MarkedGraph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "group rank={} basis={}", basis.rank(), basis.names().join(","));
    for (i, b) in basis.blocks().iter().enumerate() {
        let names: Vec<&str> = b.iter().map(|&x| basis.name(x)).collect();
        let _ = writeln!(s, "factor A{}={}", i + 1, names.join(","));
    }
    let edges: Vec<String> = (0..g.edge_count())
        .map(|e| {
            let (a, b) = g.ends(e);
            format!("{}({},{})", g.edge_name(e), g.vertex_name(a), g.vertex_name(b))
        })
        .collect();
    let _ = writeln!(s, "graph vertices={} edges={}", g.vertex_names().join(","), edges.join(","));
    let marks: Vec<String> =
        (0..basis.rank()).map(|x| format!("{}={}", basis.name(x), g.format_path(&g.marking()[x]))).collect();
    let _ = writeln!(s, "marking {}", marks.join(" "));
    s
}

/// Writes a representative back in the text format (uncollapsed form).
pub fn format_rep(rep: &GraphMapRep) -> String {
    let rep = rep.collapse_info().map_or(rep, |i| &i.original);
    let g = rep.graph();
    let mut s = graph_lines(rep.basis(), g);
    let images: Vec<String> = (0..g.edge_count()).map(|e| format!("{}->{}", g.edge_name(e), rep.format_image(e))).collect();
    let _ = writeln!(s, "map {}", images.join(" ; "));
    let filt = rep.filtration();
    if filt.len() > 1 {
        let parts: Vec<String> = filt[..filt.len() - 1]
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let names: Vec<&str> = f.iter().map(|&e| g.edge_name(e)).collect();
                format!("G{}={}", i + 1, names.join(","))
            })
            .collect();
        let _ = writeln!(s, "filtration {}", parts.join(" "));
    }
    s
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\\\""))
}

/// DOT rendering: vertices, edges labeled `name: image`.
pub fn rep_to_dot(rep: &GraphMapRep) -> String {
    let g = rep.graph();
    let mut s = String::from("digraph rep {\n");
    for v in 0..g.vertex_count() {
        let shape = if g.vertex_group(v).is_some() { "doublecircle" } else { "circle" };
        let _ = writeln!(s, "  {} [shape={shape}];", dot_id(g.vertex_name(v)));
    }
    for e in 0..g.edge_count() {
        let (a, b) = g.ends(e);
        let _ = writeln!(
            s,
            "  {} -> {} [label={}];",
            dot_id(g.vertex_name(a)),
            dot_id(g.vertex_name(b)),
            dot_id(&format!("{}: {}", g.edge_name(e), rep.format_image(e)))
        );
    }
    s.push_str("}\n");
    s
}
