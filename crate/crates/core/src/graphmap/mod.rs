//! Marked graphs, topological representatives, transition matrices,
//! relative train track verification and the collapse to an A-train track.
//!
//! Oriented edges are [`Letter`]s over the graph's edge alphabet: generator
//! index = edge index, inverse flag = reversed orientation. An edge path is a
//! letter sequence together with its start vertex, so empty paths are valid.

pub(crate) mod collapse;
mod format;
mod matrix;
mod rtt;

pub use collapse::{collapse_to_a_traintrack, realized_ffs, CollapseInfo, VertexGroupAction};
pub use format::{format_rep, parse_document, parse_rep, rep_to_dot, Document};
pub(crate) use format::graph_lines;
pub use matrix::{
    classify, count_edges, dominant_eigen, explicit_counts, is_irreducible, is_primitive, matrix_power, occurrence_vector, pf_data,
    transition_matrix, Growth, MatrixClass, OccurrenceVector, PfData, StratumData,
};
pub use rtt::{
    closure, direction_map, is_illegal, maximal_invariant_subgraph, verify_rtt, RttReport, StratumCheck,
    DEFAULT_PATH_BOUND,
};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freegroup::{fold_petals, Automorphism, CoreGraph, CyclicWord, Letter, RelativeBasis, Word};

/// An edge path with an explicit start vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    start: usize,
    edges: Vec<Letter>,
}

impl Path {
    /// Checks that consecutive edges share endpoints.
    pub fn new(graph: &MarkedGraph, start: usize, edges: Vec<Letter>) -> Result<Self> {
        if start >= graph.vertex_count() {
            return Err(Error::InvalidGraph(format!("no vertex {start}")));
        }
        let mut at = start;
        for (i, &d) in edges.iter().enumerate() {
            if d.generator() >= graph.edge_count() || graph.origin(d) != at {
                return Err(Error::NotComposable { position: i });
            }
            at = graph.terminus(d);
        }
        Ok(Path { start, edges })
    }

    /// A path given only by edges (must be non-empty).
    pub fn from_edges(graph: &MarkedGraph, edges: Vec<Letter>) -> Result<Self> {
        let start = match edges.first() {
            Some(&d) if d.generator() < graph.edge_count() => graph.origin(d),
            Some(_) => return Err(Error::NotComposable { position: 0 }),
            None => return Err(Error::InvalidArgument("empty path needs a start vertex".into())),
        };
        Path::new(graph, start, edges)
    }

    pub fn trivial(vertex: usize) -> Self {
        Path { start: vertex, edges: Vec::new() }
    }

    pub(crate) fn from_parts(start: usize, edges: Vec<Letter>) -> Self {
        Path { start, edges }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn edges(&self) -> &[Letter] {
        &self.edges
    }

    pub fn into_edges(self) -> Vec<Letter> {
        self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn end(&self, graph: &MarkedGraph) -> usize {
        self.edges.last().map_or(self.start, |&d| graph.terminus(d))
    }

    pub fn inverse(&self, graph: &MarkedGraph) -> Path {
        Path { start: self.end(graph), edges: self.edges.iter().rev().map(|d| d.inverse()).collect() }
    }
}

/// Freely reduces a path; the start vertex is kept so a full collapse
/// leaves the trivial path at the origin.
pub fn tighten(graph: &MarkedGraph, path: &Path) -> Result<Path> {
    let checked = Path::new(graph, path.start, path.edges.clone())?;
    Ok(Path { start: checked.start, edges: Word::reduce(checked.edges).into_letters() })
}

/// A finite graph with a homotopy equivalence from the rose on the basis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarkedGraph {
    vertex_names: Vec<String>,
    edge_alphabet: RelativeBasis,
    ends: Vec<(usize, usize)>,
    base: usize,
    marking: Vec<Vec<Letter>>,
    inverse_marking: Option<Vec<Word>>,
    vertex_groups: Vec<Option<Vec<Word>>>,
}

impl MarkedGraph {
    /// Validates the graph and computes the inverse marking (edge → basis word)
    /// by weighted folding of the marking loops.
    pub fn new(
        vertex_names: Vec<String>,
        edge_names: Vec<String>,
        ends: Vec<(usize, usize)>,
        marking: Vec<Vec<Letter>>,
    ) -> Result<Self> {
        let edge_alphabet = RelativeBasis::new(&edge_names, Vec::new())
            .map_err(|e| Error::InvalidGraph(format!("edge names: {e}")))?;
        if ends.len() != edge_names.len() {
            return Err(Error::InvalidGraph("edge endpoint list length".into()));
        }
        let nv = vertex_names.len();
        if ends.iter().any(|&(a, b)| a >= nv || b >= nv) {
            return Err(Error::InvalidGraph("edge endpoint out of range".into()));
        }
        let mut valence = vec![0usize; nv];
        for &(a, b) in &ends {
            valence[a] += 1;
            valence[b] += 1;
        }
        if let Some(v) = (0..nv).find(|&v| valence[v] < 2) {
            return Err(Error::InvalidGraph(format!("vertex `{}` has valence {}", vertex_names[v], valence[v])));
        }
        let mut graph = MarkedGraph {
            vertex_names,
            edge_alphabet,
            ends,
            base: 0,
            marking: Vec::new(),
            inverse_marking: None,
            vertex_groups: vec![None; nv],
        };
        if marking.is_empty() {
            return Err(Error::InvalidGraph("empty marking".into()));
        }
        let mut base = None;
        let mut tight = Vec::new();
        for m in marking {
            let p = Path::from_edges(&graph, m).map_err(|e| Error::InvalidGraph(format!("marking path: {e}")))?;
            if p.end(&graph) != p.start {
                return Err(Error::InvalidGraph("marking path is not closed".into()));
            }
            match base {
                None => base = Some(p.start),
                Some(b) if b != p.start => {
                    return Err(Error::InvalidGraph("marking paths start at different vertices".into()))
                }
                _ => {}
            }
            tight.push(Word::reduce(p.edges).into_letters());
        }
        graph.base = base.unwrap();
        graph.marking = tight;
        if graph.edge_count() + 1 != graph.vertex_count() + graph.marking.len() {
            return Err(Error::InvalidGraph(format!(
                "graph rank {} differs from basis rank {}",
                (graph.edge_count() + 1).saturating_sub(graph.vertex_count()),
                graph.marking.len()
            )));
        }
        graph.inverse_marking = Some(graph.compute_inverse_marking()?);
        Ok(graph)
    }

    /// The rose on the basis with identity marking.
    pub fn rose(basis: &RelativeBasis) -> Self {
        let n = basis.rank();
        MarkedGraph::new(
            vec!["v".into()],
            basis.names().to_vec(),
            vec![(0, 0); n],
            (0..n).map(|g| vec![Letter::new(g, false)]).collect(),
        )
        .expect("a rose is a valid marked graph")
    }

    /// A quotient graph carrying vertex groups; no inverse marking.
    pub(crate) fn quotient(
        vertex_names: Vec<String>,
        edge_names: Vec<String>,
        ends: Vec<(usize, usize)>,
        base: usize,
        marking: Vec<Vec<Letter>>,
        vertex_groups: Vec<Option<Vec<Word>>>,
    ) -> Self {
        MarkedGraph {
            vertex_names,
            edge_alphabet: RelativeBasis::new(&edge_names, Vec::new()).expect("names come from a valid graph"),
            ends,
            base,
            marking,
            inverse_marking: None,
            vertex_groups,
        }
    }

    fn compute_inverse_marking(&self) -> Result<Vec<Word>> {
        let petals: Vec<(Vec<usize>, Word)> = self
            .marking
            .iter()
            .enumerate()
            .map(|(i, m)| (m.iter().map(|d| d.index()).collect(), Word::letter(i)))
            .collect();
        let bad = || Error::InvalidGraph("marking is not a homotopy equivalence".into());
        let folded = fold_petals(&petals).map_err(|_| bad())?;
        if folded.edges.len() != self.edge_count() || folded.vertex_count != self.vertex_count() {
            return Err(bad());
        }
        // the folded graph must be this graph, matched from the base
        let mut vmap = vec![usize::MAX; folded.vertex_count];
        vmap[folded.base] = self.base;
        let mut tau = vec![None; self.edge_count()];
        let mut changed = true;
        while changed {
            changed = false;
            for (a, label, b, w) in &folded.edges {
                let e = label / 2;
                let (o, t) = self.ends[e];
                let known_a = vmap[*a] != usize::MAX;
                let known_b = vmap[*b] != usize::MAX;
                if !known_a && !known_b {
                    continue;
                }
                if known_a && vmap[*a] != o || known_b && vmap[*b] != t {
                    return Err(bad());
                }
                if !known_a {
                    vmap[*a] = o;
                    changed = true;
                }
                if !known_b {
                    vmap[*b] = t;
                    changed = true;
                }
                if tau[e].is_none() {
                    tau[e] = Some(w.clone());
                    changed = true;
                }
            }
        }
        tau.into_iter().collect::<Option<Vec<Word>>>().ok_or_else(bad)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.ends.len()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertex_names[v]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertex_names
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertex_names.iter().position(|n| n == name)
    }

    pub fn edge_alphabet(&self) -> &RelativeBasis {
        &self.edge_alphabet
    }

    pub fn edge_name(&self, e: usize) -> &str {
        self.edge_alphabet.name(e)
    }

    pub fn ends(&self, e: usize) -> (usize, usize) {
        self.ends[e]
    }

    pub fn origin(&self, d: Letter) -> usize {
        let (a, b) = self.ends[d.generator()];
        if d.is_inverse() {
            b
        } else {
            a
        }
    }

    pub fn terminus(&self, d: Letter) -> usize {
        self.origin(d.inverse())
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn marking(&self) -> &[Vec<Letter>] {
        &self.marking
    }

    pub fn vertex_group(&self, v: usize) -> Option<&[Word]> {
        self.vertex_groups[v].as_deref()
    }

    pub fn vertex_group_graph(&self, v: usize) -> Option<CoreGraph> {
        self.vertex_groups[v].as_ref().map(|g| crate::freegroup::core_graph(g))
    }

    /// Outgoing directions at a vertex, in letter order.
    pub fn directions_at(&self, v: usize) -> Vec<Letter> {
        (0..2 * self.edge_count()).map(Letter::from_index).filter(|&d| self.origin(d) == v).collect()
    }

    pub fn all_directions(&self) -> impl Iterator<Item = Letter> {
        (0..2 * self.edge_count()).map(Letter::from_index)
    }

    pub fn format_direction(&self, d: Letter) -> String {
        self.edge_alphabet.format_letter(d)
    }

    pub fn format_path(&self, edges: &[Letter]) -> String {
        self.edge_alphabet.format_letters(edges)
    }

    pub fn parse_path(&self, text: &str) -> Result<Vec<Letter>> {
        self.edge_alphabet.parse_letters(text)
    }

    /// Edge → basis word such that every closed path at the base reads its
    /// group element.
    pub fn inverse_marking(&self) -> Result<&[Word]> {
        self.inverse_marking
            .as_deref()
            .ok_or_else(|| Error::Unsupported("quotient graphs carry no inverse marking".into()))
    }

    pub fn path_word(&self, edges: &[Letter]) -> Result<Word> {
        let tau = self.inverse_marking()?;
        Ok(Word::reduce(edges.iter().flat_map(|d| {
            let w = &tau[d.generator()];
            if d.is_inverse() {
                w.inverse().into_letters()
            } else {
                w.letters().to_vec()
            }
        })))
    }

    /// Breadth-first spanning tree paths from the base.
    pub fn tree_paths(&self) -> Vec<Vec<Letter>> {
        self.tree_paths_within(self.base, |_| true).into_iter().map(|p| p.unwrap_or_default()).collect()
    }

    /// Spanning-forest paths from `root` using only edges accepted by `allow`.
    pub(crate) fn tree_paths_within(&self, root: usize, allow: impl Fn(usize) -> bool) -> Vec<Option<Vec<Letter>>> {
        let mut paths: Vec<Option<Vec<Letter>>> = vec![None; self.vertex_count()];
        paths[root] = Some(Vec::new());
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for d in self.directions_at(v) {
                if !allow(d.generator()) {
                    continue;
                }
                let t = self.terminus(d);
                if paths[t].is_none() {
                    let mut p = paths[v].clone().unwrap();
                    p.push(d);
                    paths[t] = Some(p);
                    queue.push_back(t);
                }
            }
        }
        paths
    }

    /// The tightened loop at the base representing `w`.
    pub fn realize(&self, w: &Word) -> Vec<Letter> {
        Word::reduce(w.letters().iter().flat_map(|l| {
            let m = &self.marking[l.generator()];
            if l.is_inverse() {
                m.iter().rev().map(|d| d.inverse()).collect::<Vec<_>>()
            } else {
                m.clone()
            }
        }))
        .into_letters()
    }

    /// The cyclically tightened loop representing a conjugacy class.
    pub fn realize_cyclic(&self, g: &CyclicWord) -> Vec<Letter> {
        cyclic_core(&self.realize(&g.to_word())).to_vec()
    }

    pub fn rank(&self) -> usize {
        (self.edge_count() + 1).saturating_sub(self.vertex_count())
    }
}

/// The cyclically reduced middle of a reduced letter sequence.
pub(crate) fn cyclic_core(l: &[Letter]) -> &[Letter] {
    let mut i = 0;
    let mut j = l.len();
    while j >= i + 2 && l[i] == l[j - 1].inverse() {
        i += 1;
        j -= 1;
    }
    &l[i..j]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Explicit,
    /// Fail with [`Error::Overflow`] once an intermediate path exceeds the cap.
    Capped(usize),
}

/// A topological representative with a filtration by invariant subgraphs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphMapRep {
    basis: RelativeBasis,
    graph: MarkedGraph,
    edge_images: Vec<Vec<Letter>>,
    vertex_images: Vec<usize>,
    filtration: Vec<Vec<usize>>,
    peripheral_index: Option<usize>,
    collapse: Option<Box<CollapseInfo>>,
}

impl GraphMapRep {
    /// `filtration` lists increasing edge sets; the whole graph is appended
    /// when missing. Images are tightened.
    pub fn new(
        basis: RelativeBasis,
        graph: MarkedGraph,
        edge_images: Vec<Vec<Letter>>,
        filtration: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if graph.marking().len() != basis.rank() {
            return Err(Error::RankMismatch(graph.marking().len(), basis.rank()));
        }
        if edge_images.len() != graph.edge_count() {
            return Err(Error::InvalidMap("one image per edge is required".into()));
        }
        let mut vertex_images = vec![usize::MAX; graph.vertex_count()];
        let mut images = Vec::with_capacity(edge_images.len());
        for (e, img) in edge_images.into_iter().enumerate() {
            let name = graph.edge_name(e).to_string();
            let p = Path::from_edges(&graph, img)
                .map_err(|err| Error::InvalidMap(format!("image of `{name}`: {err}")))?;
            let tight = Word::reduce(p.edges.clone()).into_letters();
            if tight.is_empty() {
                return Err(Error::InvalidMap(format!("image of `{name}` is trivial")));
            }
            let (o, t) = graph.ends(e);
            for (v, img_v) in [(o, p.start), (t, p.end(&graph))] {
                if vertex_images[v] == usize::MAX {
                    vertex_images[v] = img_v;
                } else if vertex_images[v] != img_v {
                    return Err(Error::InvalidMap(format!(
                        "image of `{name}` disagrees on the image of vertex `{}`",
                        graph.vertex_name(v)
                    )));
                }
            }
            images.push(tight);
        }
        let mut filtration: Vec<Vec<usize>> = filtration
            .into_iter()
            .map(|mut f| {
                f.sort_unstable();
                f.dedup();
                f
            })
            .filter(|f| !f.is_empty())
            .collect();
        let all: Vec<usize> = (0..graph.edge_count()).collect();
        if filtration.last() != Some(&all) {
            filtration.push(all);
        }
        for w in filtration.windows(2) {
            if !w[0].iter().all(|e| w[1].contains(e)) || w[0] == w[1] {
                return Err(Error::InvalidMap("filtration is not strictly increasing".into()));
            }
        }
        let mut rep = GraphMapRep {
            basis,
            graph,
            edge_images: images,
            vertex_images,
            filtration,
            peripheral_index: None,
            collapse: None,
        };
        for (i, f) in rep.filtration.iter().enumerate() {
            for &e in f {
                if let Some(d) = rep.edge_images[e].iter().find(|d| !f.contains(&d.generator())) {
                    return Err(Error::InvalidMap(format!(
                        "filtration element G{} is not invariant: image of `{}` crosses `{}`",
                        i + 1,
                        rep.graph.edge_name(e),
                        rep.graph.edge_name(d.generator())
                    )));
                }
            }
        }
        rep.outer_automorphism()?;
        let target = crate::freegroup::FreeFactorSystem::from_basis(&rep.basis);
        if !target.is_empty() {
            rep.peripheral_index = (0..rep.filtration.len()).find(|&i| {
                let sys = realized_ffs(&rep.graph, rep.basis.rank(), &rep.filtration[i]);
                matches!(sys, Ok(s) if crate::freegroup::ffs_partial_order(&s, &target) == Ok(crate::freegroup::FactorOrder::Equal))
            });
        }
        Ok(rep)
    }

    /// The automorphism on the rose with identity marking.
    pub fn from_automorphism(basis: RelativeBasis, phi: &Automorphism) -> Result<Self> {
        let graph = MarkedGraph::rose(&basis);
        let images = phi.images().iter().map(|w| w.letters().to_vec()).collect();
        GraphMapRep::new(basis, graph, images, Vec::new())
    }

    pub(crate) fn collapsed(
        basis: RelativeBasis,
        graph: MarkedGraph,
        edge_images: Vec<Vec<Letter>>,
        vertex_images: Vec<usize>,
        info: CollapseInfo,
    ) -> Self {
        let all = (0..graph.edge_count()).collect();
        GraphMapRep {
            basis,
            graph,
            edge_images,
            vertex_images,
            filtration: vec![all],
            peripheral_index: None,
            collapse: Some(Box::new(info)),
        }
    }

    pub fn basis(&self) -> &RelativeBasis {
        &self.basis
    }

    pub fn graph(&self) -> &MarkedGraph {
        &self.graph
    }

    pub fn edge_image(&self, e: usize) -> &[Letter] {
        &self.edge_images[e]
    }

    pub fn edge_images(&self) -> &[Vec<Letter>] {
        &self.edge_images
    }

    pub fn vertex_image(&self, v: usize) -> usize {
        self.vertex_images[v]
    }

    pub fn filtration(&self) -> &[Vec<usize>] {
        &self.filtration
    }

    /// Index into [`filtration`](Self::filtration) of the element realizing `A`.
    pub fn peripheral_index(&self) -> Option<usize> {
        self.peripheral_index
    }

    pub fn collapse_info(&self) -> Option<&CollapseInfo> {
        self.collapse.as_deref()
    }

    pub fn is_collapsed(&self) -> bool {
        self.collapse.is_some()
    }

    /// `H_r = G_r \ G_{r-1}` for r = 1..K.
    pub fn strata(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut prev: &[usize] = &[];
        for f in &self.filtration {
            out.push(f.iter().copied().filter(|e| !prev.contains(e)).collect());
            prev = f;
        }
        out
    }

    pub fn top_stratum(&self) -> Vec<usize> {
        self.strata().pop().unwrap_or_default()
    }

    /// Edges of `G_{r-1}` for stratum index `r` (0-based).
    pub fn lower_edges(&self, r: usize) -> Vec<usize> {
        if r == 0 {
            Vec::new()
        } else {
            self.filtration[r - 1].clone()
        }
    }

    pub fn direction_image(&self, d: Letter) -> Vec<Letter> {
        let img = &self.edge_images[d.generator()];
        if d.is_inverse() {
            img.iter().rev().map(|x| x.inverse()).collect()
        } else {
            img.clone()
        }
    }

    /// One application to a letter sequence starting at `start`, tightened.
    fn apply_once(&self, start: usize, edges: &[Letter], cap: Option<usize>) -> Result<Path> {
        let mut out: Vec<Letter> = Vec::new();
        for &d in edges {
            let img = &self.edge_images[d.generator()];
            let mut push = |x: Letter| {
                if out.last() == Some(&x.inverse()) {
                    out.pop();
                } else {
                    out.push(x);
                }
            };
            if d.is_inverse() {
                img.iter().rev().for_each(|x| push(x.inverse()));
            } else {
                img.iter().for_each(|&x| push(x));
            }
            if let Some(cap) = cap {
                if out.len() > cap {
                    return Err(Error::Overflow(cap));
                }
            }
        }
        Ok(Path { start: self.vertex_images[start], edges: out })
    }

    /// `[φ^p(path)]`. On a collapsed representative the path is lifted to the
    /// uncollapsed graph through spanning trees of the collapsed components.
    pub fn apply_map(&self, path: &Path, p: usize, mode: Mode) -> Result<Path> {
        if let Some(info) = &self.collapse {
            let lifted = info.lift(self, path)?;
            let image = info.original.apply_map(&lifted, p, mode)?;
            return Ok(info.project(&image));
        }
        let mut cur = tighten(&self.graph, path)?;
        let cap = match mode {
            Mode::Explicit => None,
            Mode::Capped(c) => Some(c),
        };
        for _ in 0..p {
            cur = self.apply_once(cur.start, &cur.edges, cap)?;
        }
        Ok(cur)
    }

    /// `[φ^p(e)]` for a single oriented edge.
    pub fn iterate_edge(&self, d: Letter, p: usize, mode: Mode) -> Result<Vec<Letter>> {
        let path = Path { start: self.graph.origin(d), edges: vec![d] };
        Ok(self.apply_map(&path, p, mode)?.edges)
    }

    /// The automorphism of the basis induced through the marking, well
    /// defined up to conjugation (the base is moved back along a tree path).
    pub fn outer_automorphism(&self) -> Result<Automorphism> {
        if let Some(info) = &self.collapse {
            return info.original.outer_automorphism();
        }
        let g = &self.graph;
        let back = &g.tree_paths()[self.vertex_images[g.base()]];
        let gamma = Path { start: g.base(), edges: back.clone() };
        let images = g
            .marking()
            .iter()
            .map(|m| {
                let img = self.apply_once(g.base(), m, None)?;
                let mut full = gamma.edges.clone();
                full.extend(img.edges);
                full.extend(back.iter().rev().map(|d| d.inverse()));
                g.path_word(&full)
            })
            .collect::<Result<Vec<Word>>>()?;
        Automorphism::new(images).map_err(|_| Error::InvalidMap("the map is not a homotopy equivalence".into()))
    }

    /// The representative `f^k` on the same graph and filtration.
    pub fn power(&self, k: usize) -> Result<GraphMapRep> {
        if self.is_collapsed() {
            return Err(Error::Unsupported("powers of collapsed representatives".into()));
        }
        let images = (0..self.graph.edge_count())
            .map(|e| self.iterate_edge(Letter::new(e, false), k, Mode::Explicit))
            .collect::<Result<Vec<_>>>()?;
        GraphMapRep::new(self.basis.clone(), self.graph.clone(), images, self.filtration.clone())
    }

    pub fn format_image(&self, e: usize) -> String {
        self.graph.format_path(&self.edge_images[e])
    }
}
