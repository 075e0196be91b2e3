use serde::{Deserialize, Serialize};

use super::rtt::maximal_invariant_subgraph;
use super::{GraphMapRep, MarkedGraph, Path};
use crate::error::{Error, Result};
use crate::freegroup::{core_graph, ffs_partial_order, FactorOrder, FreeFactorSystem, Letter, Word};

/// How a collapsed representative sits over the original one.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollapseInfo {
    pub original: GraphMapRep,
    /// Collapsed edges of the original graph.
    pub forest: Vec<usize>,
    /// Original edge → quotient edge.
    pub edge_map: Vec<Option<usize>>,
    /// Quotient edge → original edge.
    pub edge_lift: Vec<usize>,
    /// Original vertex → quotient vertex.
    pub vertex_map: Vec<usize>,
    /// Quotient vertex → chosen original vertex of its component.
    pub roots: Vec<usize>,
    /// Paths inside the collapsed subgraph from each component root.
    pub root_paths: Vec<Vec<Letter>>,
    pub vertex_group_actions: Vec<VertexGroupAction>,
}

/// The restriction of the automorphism to one peripheral block, up to an inner
/// automorphism of the block.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexGroupAction {
    pub vertex: usize,
    pub block: usize,
    pub images: Vec<Word>,
}

impl CollapseInfo {
    /// Lifts a quotient path by joining consecutive edges through spanning
    /// trees of the collapsed components, from root to root.
    pub(crate) fn lift(&self, collapsed: &GraphMapRep, path: &Path) -> Result<Path> {
        let q = collapsed.graph();
        let g = self.original.graph();
        let start = self.roots[path.start()];
        let mut at = start;
        let mut out: Vec<Letter> = Vec::new();
        let walk = |from: usize, to: usize, out: &mut Vec<Letter>| {
            out.extend(self.root_paths[from].iter().rev().map(|d| d.inverse()));
            out.extend(self.root_paths[to].iter().copied());
        };
        for (i, &d) in path.edges().iter().enumerate() {
            if d.generator() >= q.edge_count() {
                return Err(Error::NotComposable { position: i });
            }
            let lifted = Letter::new(self.edge_lift[d.generator()], d.is_inverse());
            walk(at, g.origin(lifted), &mut out);
            out.push(lifted);
            at = g.terminus(lifted);
        }
        let end_root = self.roots[self.vertex_map[at]];
        walk(at, end_root, &mut out);
        Ok(Path::from_parts(start, Word::reduce(out).into_letters()))
    }

    /// Deletes collapsed edges.
    pub(crate) fn project(&self, path: &Path) -> Path {
        let edges = path
            .edges()
            .iter()
            .filter_map(|d| self.edge_map[d.generator()].map(|e| Letter::new(e, d.is_inverse())))
            .collect();
        Path::from_parts(self.vertex_map[path.start()], edges)
    }
}

/// Components of `k` (by vertex) together with basis words generating the
/// fundamental group of each component, conjugated to the base along a
/// spanning tree of the whole graph.
pub(crate) fn component_generators(graph: &MarkedGraph, k: &[usize]) -> Result<Vec<(Vec<usize>, Vec<Word>)>> {
    let in_k = |e: usize| k.contains(&e);
    let to_root = graph.tree_paths();
    let mut assigned = vec![false; graph.vertex_count()];
    let mut out = Vec::new();
    for &e in k {
        let (root, _) = graph.ends(e);
        if assigned[root] {
            continue;
        }
        let inner = graph.tree_paths_within(root, in_k);
        let vertices: Vec<usize> = (0..graph.vertex_count()).filter(|&v| inner[v].is_some()).collect();
        let tree_edges: Vec<usize> =
            inner.iter().flatten().filter_map(|p| p.last().map(|d| d.generator())).collect();
        let mut gens = Vec::new();
        for &f in k {
            let (o, t) = graph.ends(f);
            if inner[o].is_none() || tree_edges.contains(&f) {
                continue;
            }
            let mut path = to_root[root].clone();
            path.extend(inner[o].as_ref().unwrap());
            path.push(Letter::new(f, false));
            path.extend(inner[t].as_ref().unwrap().iter().rev().map(|d| d.inverse()));
            path.extend(to_root[root].iter().rev().map(|d| d.inverse()));
            gens.push(graph.path_word(&path)?);
        }
        for &v in &vertices {
            assigned[v] = true;
        }
        out.push((vertices, gens));
    }
    Ok(out)
}

/// One factor per non-contractible component of the subgraph `k`.
pub fn realized_ffs(graph: &MarkedGraph, ambient_rank: usize, k: &[usize]) -> Result<FreeFactorSystem> {
    let comps = component_generators(graph, k)?;
    let gens: Vec<Vec<Word>> = comps.into_iter().map(|(_, g)| g).filter(|g| !g.is_empty()).collect();
    FreeFactorSystem::from_generators(ambient_rank, &gens)
}

/// Collapses the maximal invariant subgraph, which must realize `A`.
pub fn collapse_to_a_traintrack(rep: &GraphMapRep) -> Result<GraphMapRep> {
    if rep.is_collapsed() {
        return Ok(rep.clone());
    }
    let g = rep.graph();
    let basis = rep.basis();
    let k = maximal_invariant_subgraph(rep);
    let realized = realized_ffs(g, basis.rank(), &k)?;
    let target = FreeFactorSystem::from_basis(basis);
    if ffs_partial_order(&realized, &target)? != FactorOrder::Equal {
        let names: Vec<&str> = k.iter().map(|&e| g.edge_name(e)).collect();
        return Err(Error::CollapseMismatch(format!(
            "maximal invariant subgraph {{{}}} realizes {} but the declared system is {}",
            names.join(","),
            realized.describe(basis),
            target.describe(basis)
        )));
    }
    let comps = component_generators(g, &k)?;
    let nv = g.vertex_count();
    let mut vertex_map = vec![usize::MAX; nv];
    let mut names = Vec::new();
    let mut roots = Vec::new();
    let mut groups = Vec::new();
    let mut root_paths = vec![Vec::new(); nv];
    for (vertices, gens) in &comps {
        let id = names.len();
        for &v in vertices {
            vertex_map[v] = id;
        }
        let root = vertices[0];
        let inner = g.tree_paths_within(root, |e| k.contains(&e));
        for &v in vertices {
            root_paths[v] = inner[v].clone().unwrap();
        }
        names.push(vertices.iter().map(|&v| g.vertex_name(v)).collect::<Vec<_>>().join("+"));
        roots.push(root);
        groups.push((!gens.is_empty()).then(|| gens.clone()));
    }
    for v in 0..nv {
        if vertex_map[v] == usize::MAX {
            vertex_map[v] = names.len();
            names.push(g.vertex_name(v).to_string());
            roots.push(v);
            groups.push(None);
        }
    }
    let mut edge_map = vec![None; g.edge_count()];
    let mut edge_lift = Vec::new();
    let mut edge_names = Vec::new();
    let mut ends = Vec::new();
    for e in 0..g.edge_count() {
        if k.contains(&e) {
            continue;
        }
        edge_map[e] = Some(edge_lift.len());
        edge_lift.push(e);
        edge_names.push(g.edge_name(e).to_string());
        let (o, t) = g.ends(e);
        ends.push((vertex_map[o], vertex_map[t]));
    }
    let project = |p: &[Letter]| -> Vec<Letter> {
        p.iter().filter_map(|d| edge_map[d.generator()].map(|e| Letter::new(e, d.is_inverse()))).collect()
    };
    let marking: Vec<Vec<Letter>> = g.marking().iter().map(|m| project(m)).collect();
    let images: Vec<Vec<Letter>> = edge_lift.iter().map(|&e| project(rep.edge_image(e))).collect();
    let vertex_images: Vec<usize> = roots.iter().map(|&r| vertex_map[rep.vertex_image(r)]).collect();
    let quotient = MarkedGraph::quotient(names, edge_names, ends, vertex_map[g.base()], marking, groups.clone());

    let phi = rep.outer_automorphism()?;
    let mut actions = Vec::new();
    for (v, grp) in groups.iter().enumerate() {
        let Some(gens) = grp else { continue };
        let here = core_graph(gens);
        let Some(block) = basis.blocks().iter().position(|b| {
            core_graph(&b.iter().map(|&x| Word::letter(x)).collect::<Vec<_>>()).is_conjugate_to(&here)
        }) else {
            continue;
        };
        let letters = &basis.blocks()[block];
        let imgs: Vec<Word> = letters.iter().map(|&x| phi.image(x).clone()).collect();
        let c = core_graph(&imgs).base_to_core();
        let images = imgs.iter().map(|w| w.conjugate_by(&c.inverse())).collect();
        actions.push(VertexGroupAction { vertex: v, block, images });
    }

    let info = CollapseInfo {
        original: rep.clone(),
        forest: k,
        edge_map,
        edge_lift,
        vertex_map,
        roots,
        root_paths,
        vertex_group_actions: actions,
    };
    Ok(GraphMapRep::collapsed(basis.clone(), quotient, images, vertex_images, info))
}
