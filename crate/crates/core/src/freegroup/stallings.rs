use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{cyclic_reduce, CyclicWord, Letter, RelativeBasis, Word};

/// A folded graph with edges labeled by basis generators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreGraph {
    vertex_count: usize,
    /// `(from, generator, to)`; reading the edge backwards reads the inverse letter.
    edges: Vec<(usize, usize, usize)>,
    base: Option<usize>,
    #[serde(skip)]
    adjacency: Vec<BTreeMap<Letter, usize>>,
}

struct Folder {
    parent: Vec<usize>,
    adj: Vec<BTreeMap<Letter, usize>>,
}

impl Folder {
    fn new() -> Self {
        Folder { parent: Vec::new(), adj: Vec::new() }
    }

    fn add_vertex(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.adj.push(BTreeMap::new());
        self.parent.len() - 1
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn add_edge(&mut self, from: usize, label: Letter, to: usize) {
        let mut pending = VecDeque::new();
        pending.push_back((from, label, to));
        while let Some((u, l, v)) = pending.pop_front() {
            let u = self.find(u);
            let v = self.find(v);
            let mut merge = Vec::new();
            match self.adj[u].get(&l).copied() {
                Some(w) => {
                    let w = self.find(w);
                    if w != v {
                        merge.push((w, v));
                    }
                }
                None => {
                    self.adj[u].insert(l, v);
                }
            }
            match self.adj[v].get(&l.inverse()).copied() {
                Some(w) => {
                    let w = self.find(w);
                    if w != u {
                        merge.push((w, u));
                    }
                }
                None => {
                    self.adj[v].insert(l.inverse(), u);
                }
            }
            for (x, y) in merge {
                let x = self.find(x);
                let y = self.find(y);
                if x == y {
                    continue;
                }
                let (keep, gone) = if self.adj[x].len() >= self.adj[y].len() { (x, y) } else { (y, x) };
                self.parent[gone] = keep;
                let moved = std::mem::take(&mut self.adj[gone]);
                for (lab, target) in moved {
                    pending.push_back((keep, lab, target));
                }
            }
        }
    }
}

impl CoreGraph {
    fn from_folder(mut f: Folder, base: usize) -> Self {
        let n = f.parent.len();
        let mut ids = vec![usize::MAX; n];
        let mut order = Vec::new();
        let base_root = f.find(base);
        // breadth-first numbering from the base keeps output deterministic
        let mut queue = VecDeque::from([base_root]);
        ids[base_root] = 0;
        order.push(base_root);
        while let Some(v) = queue.pop_front() {
            let targets: Vec<usize> = f.adj[v].values().copied().collect();
            for t in targets {
                let t = f.find(t);
                if ids[t] == usize::MAX {
                    ids[t] = order.len();
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }
        let mut edges = Vec::new();
        for &v in &order {
            let entries: Vec<(Letter, usize)> = f.adj[v].iter().map(|(l, t)| (*l, *t)).collect();
            for (l, t) in entries {
                if !l.is_inverse() {
                    let t = f.find(t);
                    edges.push((ids[v], l.generator(), ids[t]));
                }
            }
        }
        let mut g = CoreGraph { vertex_count: order.len(), edges, base: Some(0), adjacency: Vec::new() };
        g.rebuild();
        g.prune(true);
        g
    }

    fn rebuild(&mut self) {
        self.edges.sort_unstable();
        self.edges.dedup();
        let mut adj = vec![BTreeMap::new(); self.vertex_count];
        for &(u, g, v) in &self.edges {
            adj[u].insert(Letter::new(g, false), v);
            adj[v].insert(Letter::new(g, true), u);
        }
        self.adjacency = adj;
    }

    /// Removes valence-one vertices (keeping the base when `keep_base`).
    fn prune(&mut self, keep_base: bool) {
        loop {
            let mut valence = vec![0usize; self.vertex_count];
            for &(u, _, v) in &self.edges {
                valence[u] += 1;
                valence[v] += 1;
            }
            let dead: Vec<usize> = (0..self.vertex_count)
                .filter(|&v| valence[v] <= 1 && !(keep_base && self.base == Some(v)))
                .filter(|&v| valence[v] == 1 || self.vertex_count > 1)
                .collect();
            if dead.is_empty() || self.vertex_count <= 1 {
                break;
            }
            let mut ids = vec![usize::MAX; self.vertex_count];
            let mut next = 0;
            for v in 0..self.vertex_count {
                if !dead.contains(&v) {
                    ids[v] = next;
                    next += 1;
                }
            }
            if next == 0 {
                // a tree collapses to a single vertex
                self.vertex_count = 1;
                self.edges.clear();
                self.base = self.base.map(|_| 0);
                self.rebuild();
                return;
            }
            self.edges = self
                .edges
                .iter()
                .filter(|(u, _, v)| ids[*u] != usize::MAX && ids[*v] != usize::MAX)
                .map(|&(u, g, v)| (ids[u], g, ids[v]))
                .collect();
            self.base = self.base.and_then(|b| (ids[b] != usize::MAX).then_some(ids[b]));
            self.vertex_count = next;
            self.rebuild();
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize, usize)] {
        &self.edges
    }

    pub fn base(&self) -> Option<usize> {
        self.base
    }

    pub fn rank(&self) -> usize {
        (self.edges.len() + 1).saturating_sub(self.vertex_count)
    }

    pub fn step(&self, v: usize, l: Letter) -> Option<usize> {
        self.adjacency[v].get(&l).copied()
    }

    pub fn outgoing(&self, v: usize) -> impl Iterator<Item = (Letter, usize)> + '_ {
        self.adjacency[v].iter().map(|(l, t)| (*l, *t))
    }

    pub fn read(&self, start: usize, letters: &[Letter]) -> Option<usize> {
        letters.iter().try_fold(start, |v, &l| self.step(v, l))
    }

    /// Subgroup membership, read from the base vertex.
    pub fn contains(&self, w: &Word) -> bool {
        match self.base {
            Some(b) => self.read(b, w.letters()) == Some(b),
            None => false,
        }
    }

    /// Whether a cyclic word labels a closed path somewhere in the graph.
    pub fn carries_cyclic(&self, letters: &[Letter]) -> bool {
        if letters.is_empty() {
            return true;
        }
        (0..self.vertex_count).any(|v| self.read(v, letters) == Some(v))
    }

    /// Basepoint-free core: every vertex has valence at least two.
    pub fn trimmed(&self) -> CoreGraph {
        let mut g = self.clone();
        g.prune(false);
        g.base = None;
        g
    }

    /// Label of the path from the base to the nearest vertex of the trimmed core.
    pub fn base_to_core(&self) -> Word {
        let Some(base) = self.base else { return Word::identity() };
        let mut valence = vec![0usize; self.vertex_count];
        for &(u, _, v) in &self.edges {
            valence[u] += 1;
            valence[v] += 1;
        }
        let mut alive = vec![true; self.vertex_count];
        let mut changed = true;
        while changed {
            changed = false;
            for v in 0..self.vertex_count {
                if alive[v] && valence[v] <= 1 && self.edges.len() + 1 > self.vertex_count {
                    alive[v] = false;
                    changed = true;
                    for &(a, _, b) in &self.edges {
                        if a == v && alive[b] {
                            valence[b] -= 1;
                        } else if b == v && alive[a] {
                            valence[a] -= 1;
                        }
                    }
                }
            }
        }
        let mut prev: Vec<Option<(usize, Letter)>> = vec![None; self.vertex_count];
        let mut seen = vec![false; self.vertex_count];
        seen[base] = true;
        let mut queue = VecDeque::from([base]);
        while let Some(v) = queue.pop_front() {
            if alive[v] {
                let mut letters = Vec::new();
                let mut at = v;
                while let Some((p, l)) = prev[at] {
                    letters.push(l);
                    at = p;
                }
                letters.reverse();
                return Word::reduce(letters);
            }
            for (l, t) in self.outgoing(v) {
                if !seen[t] {
                    seen[t] = true;
                    prev[t] = Some((v, l));
                    queue.push_back(t);
                }
            }
        }
        Word::identity()
    }

    pub fn is_trivial(&self) -> bool {
        self.edges.is_empty()
    }

    /// Finds a label-preserving morphism from the trimmed core of `self` into
    /// the trimmed core of `other`; returns the vertex map.
    fn morphism_into(&self, other: &CoreGraph) -> Option<Vec<usize>> {
        let src = self.trimmed();
        let dst = other.trimmed();
        if src.is_trivial() {
            return Some(vec![0; src.vertex_count]);
        }
        for target in 0..dst.vertex_count {
            let mut map = vec![usize::MAX; src.vertex_count];
            map[0] = target;
            let mut queue = VecDeque::from([0usize]);
            let mut ok = true;
            'bfs: while let Some(v) = queue.pop_front() {
                for (l, t) in src.outgoing(v) {
                    match dst.step(map[v], l) {
                        None => {
                            ok = false;
                            break 'bfs;
                        }
                        Some(img) => {
                            if map[t] == usize::MAX {
                                map[t] = img;
                                queue.push_back(t);
                            } else if map[t] != img {
                                ok = false;
                                break 'bfs;
                            }
                        }
                    }
                }
            }
            if ok {
                return Some(map);
            }
        }
        None
    }

    /// Some conjugate of `self` lies in `other`.
    pub fn is_conjugate_into(&self, other: &CoreGraph) -> bool {
        self.morphism_into(other).is_some()
    }

    /// The two subgroups are conjugate (trimmed cores are isomorphic).
    pub fn is_conjugate_to(&self, other: &CoreGraph) -> bool {
        let a = self.trimmed();
        let b = other.trimmed();
        if a.vertex_count != b.vertex_count || a.edges.len() != b.edges.len() {
            return false;
        }
        match a.morphism_into(&b) {
            Some(map) => {
                let mut seen = map.clone();
                seen.sort_unstable();
                seen.dedup();
                seen.len() == map.len()
            }
            None => false,
        }
    }

    /// A free basis of the subgroup read from the base (spanning tree method).
    pub fn generators(&self) -> Vec<Word> {
        let Some(base) = self.base else {
            return self.with_base(0).generators();
        };
        let mut path: Vec<Option<Vec<Letter>>> = vec![None; self.vertex_count];
        path[base] = Some(Vec::new());
        let mut tree = std::collections::BTreeSet::new();
        let mut queue = VecDeque::from([base]);
        while let Some(v) = queue.pop_front() {
            for (l, t) in self.outgoing(v) {
                if path[t].is_none() {
                    let mut p = path[v].clone().unwrap();
                    p.push(l);
                    path[t] = Some(p);
                    let key = if l.is_inverse() { (t, l.generator(), v) } else { (v, l.generator(), t) };
                    tree.insert(key);
                    queue.push_back(t);
                }
            }
        }
        self.edges
            .iter()
            .filter(|e| !tree.contains(e))
            .map(|&(u, g, v)| {
                let mut letters = path[u].clone().unwrap();
                letters.push(Letter::new(g, false));
                letters.extend(path[v].as_ref().unwrap().iter().rev().map(|l| l.inverse()));
                Word::reduce(letters)
            })
            .collect()
    }

    fn with_base(&self, base: usize) -> CoreGraph {
        let mut g = self.clone();
        g.base = Some(base);
        g
    }

    pub fn to_dot(&self, basis: &RelativeBasis, name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph {name} {{");
        for v in 0..self.vertex_count {
            let shape = if self.base == Some(v) { "doublecircle" } else { "circle" };
            let _ = writeln!(s, "  v{v} [shape={shape}];");
        }
        for &(u, g, v) in &self.edges {
            let _ = writeln!(s, "  v{u} -> v{v} [label=\"{}\"];", basis.name(g));
        }
        s.push_str("}\n");
        s
    }
}

/// Stallings folding of the bouquet of generator loops.
pub fn core_graph(generators: &[Word]) -> CoreGraph {
    let mut f = Folder::new();
    let base = f.add_vertex();
    for w in generators {
        let letters = w.letters();
        if letters.is_empty() {
            continue;
        }
        let mut cur = base;
        for (i, &l) in letters.iter().enumerate() {
            let next = if i + 1 == letters.len() { base } else { f.add_vertex() };
            if l.is_inverse() {
                f.add_edge(next, l.inverse(), cur);
            } else {
                f.add_edge(cur, l, next);
            }
            cur = next;
        }
    }
    CoreGraph::from_folder(f, base)
}

/// Decides whether some conjugate of `g` lies in the subgroup carried by `h`.
pub fn is_conjugate_into(g: &CyclicWord, h: &CoreGraph) -> bool {
    let (core, _) = cyclic_reduce(&g.to_word());
    h.carries_cyclic(core.letters())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freegroup::RelativeBasis;

    fn f3() -> RelativeBasis {
        RelativeBasis::from_names(&["a", "b", "c"], &[]).unwrap()
    }

    #[test]
    fn single_loop() {
        let b = f3();
        let g = core_graph(&[b.parse_word("a").unwrap()]);
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.rank(), 1);
    }

    #[test]
    fn rose() {
        let b = f3();
        let g = core_graph(&[b.parse_word("a").unwrap(), b.parse_word("b").unwrap()]);
        assert_eq!(g.rank(), 2);
        assert_eq!(g.vertex_count(), 1);
    }

    #[test]
    fn empty_generators_trivial() {
        let g = core_graph(&[]);
        assert_eq!(g.vertex_count(), 1);
        assert!(g.is_trivial());
        assert_eq!(g.rank(), 0);
    }

    #[test]
    fn folding_merges_prefixes() {
        let b = f3();
        let g = core_graph(&[b.parse_word("a a").unwrap(), b.parse_word("a b").unwrap()]);
        assert_eq!(g.rank(), 2);
        assert_eq!(g.vertex_count(), 2);
        assert!(g.contains(&b.parse_word("a b a a").unwrap()));
        assert!(g.contains(&b.parse_word("b' a").unwrap()));
        assert!(!g.contains(&b.parse_word("a").unwrap()));
        assert!(!g.contains(&b.parse_word("a b a").unwrap()));
    }

    #[test]
    fn conjugacy_into_examples() {
        let b = f3();
        let ab = core_graph(&[b.parse_word("a").unwrap(), b.parse_word("b").unwrap()]);
        let a = core_graph(&[b.parse_word("a").unwrap()]);
        let cw = |s: &str| CyclicWord::new(&b.parse_word(s).unwrap());
        assert!(is_conjugate_into(&cw("a"), &ab));
        assert!(!is_conjugate_into(&cw("c"), &ab));
        assert!(is_conjugate_into(&cw("b a b'"), &a));
    }

    #[test]
    fn conjugate_subgroups_detected() {
        let b = f3();
        let a = core_graph(&[b.parse_word("a").unwrap()]);
        let ca = core_graph(&[b.parse_word("c a c'").unwrap()]);
        assert!(a.is_conjugate_to(&ca));
        assert!(ca.is_conjugate_into(&a));
        let ab = core_graph(&[b.parse_word("a").unwrap(), b.parse_word("b").unwrap()]);
        assert!(a.is_conjugate_into(&ab));
        assert!(!ab.is_conjugate_into(&a));
        assert!(!a.is_conjugate_to(&ab));
    }

    #[test]
    fn hair_to_core() {
        let b = f3();
        let g = core_graph(&[b.parse_word("c a b c'").unwrap(), b.parse_word("c b c'").unwrap()]);
        assert_eq!(b.format_word(&g.base_to_core()), "c");
        let h = core_graph(&[b.parse_word("a").unwrap()]);
        assert!(h.base_to_core().is_empty());
    }

    #[test]
    fn generators_round_trip() {
        let b = f3();
        let g = core_graph(&[b.parse_word("a a").unwrap(), b.parse_word("a b").unwrap(), b.parse_word("c b c'").unwrap()]);
        let h = core_graph(&g.generators());
        assert_eq!(g.rank(), h.rank());
        assert!(g.is_conjugate_to(&h));
        for w in g.generators() {
            assert!(g.contains(&w));
        }
    }

    use proptest::prelude::*;
    use std::collections::HashSet;

    /// Subgroup elements reachable through products whose partial products
    /// never exceed `cap` letters.
    fn elements_up_to(gens: &[Word], cap: usize) -> HashSet<Word> {
        let mut steps: Vec<Word> = gens.iter().cloned().collect();
        steps.extend(gens.iter().map(|g| g.inverse()));
        let mut seen: HashSet<Word> = HashSet::new();
        seen.insert(Word::identity());
        let mut frontier = vec![Word::identity()];
        while let Some(h) = frontier.pop() {
            for s in &steps {
                let next = h.concat(s);
                if next.len() <= cap && seen.insert(next.clone()) {
                    frontier.push(next);
                }
            }
        }
        seen
    }

    fn all_words(rank: usize, max: usize) -> Vec<Word> {
        let mut out = vec![Word::identity()];
        let mut layer = vec![Word::identity()];
        for _ in 0..max {
            let mut next = Vec::new();
            for w in &layer {
                for i in 0..2 * rank {
                    let l = Letter::from_index(i);
                    if w.letters().last() != Some(&l.inverse()) {
                        next.push(w.concat(&Word::reduce([l])));
                    }
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    fn arb_gen() -> impl Strategy<Value = Word> {
        proptest::collection::vec(0usize..6, 2..=3)
            .prop_map(|v| Word::reduce(v.into_iter().map(Letter::from_index)))
            .prop_filter("non-trivial", |w| !w.is_empty())
    }

    #[test]
    fn brute_force_example() {
        let b = f3();
        let gens = [b.parse_word("a a").unwrap(), b.parse_word("a b").unwrap()];
        let g = core_graph(&gens);
        let found = elements_up_to(&gens, 8);
        for w in all_words(3, 4) {
            assert_eq!(g.contains(&w), found.contains(&w), "{}", b.format_word(&w));
        }
        assert!(!g.contains(&b.parse_word("a").unwrap()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn membership_matches_enumeration(g1 in arb_gen(), g2 in arb_gen()) {
            let gens = [g1, g2];
            let core = core_graph(&gens);
            let found = elements_up_to(&gens, 10);
            for w in all_words(3, 6) {
                prop_assert_eq!(core.contains(&w), found.contains(&w));
            }
        }
    }
}
