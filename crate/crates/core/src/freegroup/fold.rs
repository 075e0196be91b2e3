//! Folding of labeled graphs whose edges also carry group-valued weights.
//!
//! Labels are indices with `label ^ 1` the reverse orientation. The invariant
//! maintained is that every closed path at the base vertex has a weight word
//! determined by its label word, so a fold of two equally labeled edges can
//! always be prepared by re-weighting one endpoint.

use std::collections::HashMap;

use super::Word;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub(crate) struct WeightedGraph {
    pub vertex_count: usize,
    pub base: usize,
    /// `(from, label, to, weight)` with even labels.
    pub edges: Vec<(usize, usize, usize, Word)>,
}

/// Folds a bouquet of closed label paths at a common base.
pub(crate) fn fold_petals(petals: &[(Vec<usize>, Word)]) -> Result<WeightedGraph> {
    let mut vertex_count = 1;
    let mut edges: Vec<Option<(usize, usize, usize, Word)>> = Vec::new();
    for (labels, weight) in petals {
        if labels.is_empty() {
            if !weight.is_empty() {
                return Err(Error::InvalidMap("a non-trivial element has an empty image".into()));
            }
            continue;
        }
        let mut cur = 0;
        for (i, &l) in labels.iter().enumerate() {
            let next = if i + 1 == labels.len() {
                0
            } else {
                vertex_count += 1;
                vertex_count - 1
            };
            let w = if i == 0 { weight.clone() } else { Word::identity() };
            edges.push(Some(normalize(cur, l, next, w)));
            cur = next;
        }
    }
    let base = 0;
    loop {
        let Some((_, (e1, u1, w1), (e2, u2, w2))) = find_conflict(&edges) else { break };
        let ((_, u1, w1), (e2, u2, w2)) = if u2 == base {
            ((e2, u2, w2), (e1, u1, w1))
        } else {
            ((e1, u1, w1), (e2, u2, w2))
        };
        if u1 == u2 {
            if w1 != w2 {
                return Err(Error::InvalidMap("images are not free (a rank-reducing fold occurred)".into()));
            }
            edges[e2] = None;
            continue;
        }
        // re-weight u2 so the outward weights agree, then identify u2 with u1
        let h = w1.inverse().concat(&w2);
        for e in edges.iter_mut().flatten() {
            let mut w = e.3.clone();
            if e.0 == u2 {
                w = h.concat(&w);
            }
            if e.2 == u2 {
                w = w.concat(&h.inverse());
            }
            e.3 = w;
        }
        edges[e2] = None;
        for e in edges.iter_mut().flatten() {
            if e.0 == u2 {
                e.0 = u1;
            }
            if e.2 == u2 {
                e.2 = u1;
            }
        }
    }
    let live: Vec<(usize, usize, usize, Word)> = edges.into_iter().flatten().collect();
    let mut ids = vec![usize::MAX; vertex_count];
    ids[base] = 0;
    let mut next = 1;
    for e in &live {
        for x in [e.0, e.2] {
            if ids[x] == usize::MAX {
                ids[x] = next;
                next += 1;
            }
        }
    }
    Ok(WeightedGraph {
        vertex_count: next,
        base: 0,
        edges: live.into_iter().map(|(a, l, b, w)| (ids[a], l, ids[b], w)).collect(),
    })
}

fn normalize(from: usize, label: usize, to: usize, w: Word) -> (usize, usize, usize, Word) {
    if label & 1 == 1 {
        (to, label ^ 1, from, w.inverse())
    } else {
        (from, label, to, w)
    }
}

type End = (usize, usize, Word);

/// Two edge ends leaving the same vertex with the same label, each seen as
/// `(edge, far endpoint, outward weight)`.
fn find_conflict(edges: &[Option<(usize, usize, usize, Word)>]) -> Option<(usize, End, End)> {
    let mut seen: HashMap<(usize, usize), End> = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        let Some((a, l, b, w)) = e else { continue };
        let ends = [((*a, *l), (i, *b, w.clone())), ((*b, *l ^ 1), (i, *a, w.inverse()))];
        for (key, end) in ends {
            if let Some(prev) = seen.get(&key) {
                if prev.0 != end.0 {
                    return Some((key.0, prev.clone(), end));
                }
            } else {
                seen.insert(key, end);
            }
        }
    }
    None
}
