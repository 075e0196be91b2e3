//! Finite-depth leaf languages of attracting laminations and of the dual
//! laminations of simplicial trees.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freegroup::{core_graph, Letter, RelativeBasis};
use crate::graphmap::{transition_matrix, GraphMapRep, MatrixClass, Mode, Path};
use crate::reltrees::GrushkoTreePoint;

const ITERATE_CAP: usize = 1 << 22;

/// Reduced words of length at most `depth`, over the edge alphabet of a graph
/// or over the group basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafLanguage {
    pub alphabet: RelativeBasis,
    pub over_basis: bool,
    pub depth: usize,
    pub words: BTreeSet<Vec<Letter>>,
    /// Substitution rounds until the stabilization certificate held.
    pub rounds: usize,
    pub generator: String,
}

impl LeafLanguage {
    pub fn contains(&self, w: &[Letter]) -> bool {
        self.words.contains(w)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn truncate(&self, m: usize) -> Result<LeafLanguage> {
        if m > self.depth {
            return Err(Error::DepthExceeded { requested: m, available: self.depth });
        }
        Ok(LeafLanguage {
            depth: m,
            words: self.words.iter().filter(|w| w.len() <= m).cloned().collect(),
            ..self.clone()
        })
    }

    /// Every proper subword of a member is a member.
    pub fn is_subword_closed(&self) -> bool {
        self.words.iter().all(|w| w.len() < 2 || (self.contains(&w[1..]) && self.contains(&w[..w.len() - 1])))
    }

    pub fn is_inversion_closed(&self) -> bool {
        self.words.iter().all(|w| self.contains(&invert(w)))
    }

    /// Sorted word list, shortest first.
    pub fn format_words(&self) -> Vec<String> {
        let mut v: Vec<&Vec<Letter>> = self.words.iter().collect();
        v.sort_by_key(|w| w.len());
        v.into_iter().map(|w| self.alphabet.format_letters(w)).collect()
    }

    pub fn to_text(&self) -> String {
        self.format_words().into_iter().map(|w| w + "\n").collect()
    }

    /// Rewrites an edge language in the basis. Needs a rose on which every
    /// edge reads a single basis letter.
    pub fn to_basis(&self, rep: &GraphMapRep) -> Result<LeafLanguage> {
        if self.over_basis {
            return Ok(self.clone());
        }
        let letters = edge_letters(rep)?;
        let words = self.words.iter().map(|w| w.iter().map(|d| translate(&letters, *d)).collect()).collect();
        Ok(LeafLanguage { alphabet: rep.basis().clone(), over_basis: true, words, ..self.clone() })
    }
}

pub(crate) fn invert(w: &[Letter]) -> Vec<Letter> {
    w.iter().rev().map(|l| l.inverse()).collect()
}

fn translate(letters: &[Letter], d: Letter) -> Letter {
    let l = letters[d.generator()];
    if d.is_inverse() {
        l.inverse()
    } else {
        l
    }
}

/// Basis letter read by each edge of a rose whose inverse marking is letter to letter.
pub(crate) fn edge_letters(rep: &GraphMapRep) -> Result<Vec<Letter>> {
    let g = rep.graph();
    let unsupported = || Error::Unsupported("basis translation needs a rose whose edges read single letters".into());
    if g.vertex_count() != 1 || rep.is_collapsed() {
        return Err(unsupported());
    }
    g.inverse_marking()?
        .iter()
        .map(|w| if w.len() == 1 { Ok(w.letters()[0]) } else { Err(unsupported()) })
        .collect()
}

/// All subwords of length `1..=m`.
pub(crate) fn subwords(path: &[Letter], m: usize, out: &mut BTreeSet<Vec<Letter>>) {
    for i in 0..path.len() {
        for l in 1..=m.min(path.len() - i) {
            out.insert(path[i..i + l].to_vec());
        }
    }
}

pub(crate) fn require_primitive_top(rep: &GraphMapRep) -> Result<Vec<usize>> {
    let strata = rep.strata();
    let data = transition_matrix(rep, strata.len() - 1)?;
    let eg = data.pf.as_ref().is_some_and(|p| p.lambda > 1.0);
    if data.class != MatrixClass::Primitive || !eg {
        return Err(Error::NotPrimitive(format!(
            "top stratum {{{}}} has class {} and is not exponentially growing with primitive matrix",
            data.edge_names.join(","),
            data.class.name()
        )));
    }
    Ok(data.edges)
}

/// Per-round subword sets of `[φ^n(e)]` over top-stratum seeds, closed under
/// inversion, up to the round where `extra` further rounds changed nothing.
pub fn language_rounds(rep: &GraphMapRep, m: usize, extra: usize) -> Result<Vec<BTreeSet<Vec<Letter>>>> {
    let top = require_primitive_top(rep)?;
    let g = rep.graph();
    let mut paths: Vec<Path> =
        top.iter().map(|&e| Path::new(g, g.ends(e).0, vec![Letter::new(e, false)])).collect::<Result<_>>()?;
    let mut rounds: Vec<BTreeSet<Vec<Letter>>> = Vec::new();
    let mut unchanged = 0;
    loop {
        let mut set = BTreeSet::new();
        for p in &mut paths {
            *p = rep.apply_map(p, 1, Mode::Capped(ITERATE_CAP))?;
            subwords(p.edges(), m, &mut set);
        }
        let inv: Vec<Vec<Letter>> = set.iter().map(|w| invert(w)).collect();
        set.extend(inv);
        if rounds.last() == Some(&set) {
            unchanged += 1;
        } else {
            unchanged = 0;
        }
        rounds.push(set);
        if unchanged == extra {
            return Ok(rounds);
        }
    }
}

/// The attracting lamination's words of length at most `m`, certified by two
/// further substitution rounds that add nothing.
pub fn attracting_language(rep: &GraphMapRep, m: usize) -> Result<LeafLanguage> {
    let g = rep.graph();
    let generator = format!("iterates of the top stratum of a {}-edge representative", g.edge_count());
    if m == 0 {
        require_primitive_top(rep)?;
        return Ok(LeafLanguage {
            alphabet: g.edge_alphabet().clone(),
            over_basis: false,
            depth: 0,
            words: BTreeSet::new(),
            rounds: 0,
            generator,
        });
    }
    let rounds = language_rounds(rep, m, 2)?;
    Ok(LeafLanguage {
        alphabet: g.edge_alphabet().clone(),
        over_basis: false,
        depth: m,
        rounds: rounds.len(),
        words: rounds.into_iter().last().unwrap_or_default(),
        generator,
    })
}

pub fn languages_equal_at_depth(l1: &LeafLanguage, l2: &LeafLanguage, m: usize) -> Result<bool> {
    let available = l1.depth.min(l2.depth);
    if m > available {
        return Err(Error::DepthExceeded { requested: m, available });
    }
    if l1.alphabet.names() != l2.alphabet.names() || l1.over_basis != l2.over_basis {
        return Err(Error::InvalidArgument("languages over different alphabets".into()));
    }
    Ok(l1.truncate(m)?.words == l2.truncate(m)?.words)
}

/// Words read along non-backtracking paths in the trimmed core graphs of the
/// vertex groups, that is, subwords of lines carried by vertex stabilizers.
pub fn dual_language_simplicial(t: &GrushkoTreePoint, m: usize) -> Result<LeafLanguage> {
    let mut words = BTreeSet::new();
    for gens in t.vertex_groups()? {
        let core = core_graph(&gens).trimmed();
        let mut stack: Vec<(usize, Vec<Letter>)> = (0..core.vertex_count()).map(|v| (v, Vec::new())).collect();
        while let Some((v, w)) = stack.pop() {
            if w.len() == m {
                continue;
            }
            for (l, next) in core.outgoing(v) {
                if w.last() == Some(&l.inverse()) {
                    continue;
                }
                let mut w2 = w.clone();
                w2.push(l);
                words.insert(w2.clone());
                stack.push((next, w2));
            }
        }
    }
    Ok(LeafLanguage {
        alphabet: t.basis().clone(),
        over_basis: true,
        depth: m,
        words,
        rounds: 0,
        generator: "vertex groups of a simplicial tree".into(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Recurrence {
    Bounded { gap: usize, window: usize },
    Unbounded { word: String, diagnostic: String },
}

/// Largest gap between consecutive occurrences of a length-`m` leaf word in
/// the first `window` letters of the leaf through the first top-stratum edge.
pub fn recurrence_gap(rep: &GraphMapRep, m: usize, window: usize) -> Result<Recurrence> {
    if m == 0 || window == 0 {
        return Err(Error::InvalidArgument("depth and window must be positive".into()));
    }
    let g = rep.graph();
    let seed = rep.top_stratum()[0];
    let mut path = Path::new(g, g.ends(seed).0, vec![Letter::new(seed, false)])?;
    let mut stalled = 0;
    while path.len() < window && stalled < 3 {
        let next = rep.apply_map(&path, 1, Mode::Capped(ITERATE_CAP.max(window * 64)))?;
        if next.len() <= path.len() {
            stalled += 1;
        }
        path = next;
    }
    let prefix = &path.edges()[..window.min(path.len())];
    let candidates: BTreeSet<Vec<Letter>> = match language_rounds(rep, m, 2) {
        Ok(_) => {
            // forward words of the seed's own iterates at the stabilized round
            let mut set = BTreeSet::new();
            let mut p = Path::new(g, g.ends(seed).0, vec![Letter::new(seed, false)])?;
            let mut prev = BTreeSet::new();
            loop {
                p = rep.apply_map(&p, 1, Mode::Capped(ITERATE_CAP))?;
                set.clear();
                subwords(p.edges(), m, &mut set);
                if set == prev {
                    break;
                }
                prev = set.clone();
            }
            set.into_iter().filter(|w| w.len() == m).collect()
        }
        Err(Error::NotPrimitive(_)) => {
            let mut set = BTreeSet::new();
            subwords(&prefix[..prefix.len() / 2], m, &mut set);
            set.into_iter().filter(|w| w.len() == m).collect()
        }
        Err(e) => return Err(e),
    };
    let mut gap = 0;
    for w in &candidates {
        let pos: Vec<usize> = (0..prefix.len().saturating_sub(m - 1)).filter(|&i| prefix[i..i + m] == w[..]).collect();
        if pos.len() < 2 {
            return Ok(Recurrence::Unbounded {
                word: g.format_path(w),
                diagnostic: format!("occurs {} time(s) in the first {} letters", pos.len(), prefix.len()),
            });
        }
        gap = gap.max(pos.windows(2).map(|p| p[1] - p[0]).max().unwrap_or(0));
    }
    Ok(Recurrence::Bounded { gap, window: prefix.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freegroup::Word;
    use crate::graphmap::tests::example;
    use crate::graphmap::{collapse_to_a_traintrack, parse_rep};
    use proptest::prelude::*;

    fn words(l: &LeafLanguage) -> BTreeSet<String> {
        l.format_words().into_iter().collect()
    }

    #[test]
    fn example_letters_and_pairs() {
        let rep = example();
        let l1 = attracting_language(&rep, 1).unwrap();
        assert_eq!(l1.len(), 8);
        let l2 = words(&attracting_language(&rep, 2).unwrap());
        for w in ["c a", "a d", "d c", "d a", "a b", "b d", "a' c'", "d' a'"] {
            assert!(l2.contains(w), "{w}");
        }
        // oracle: subwords of an explicit iterate
        let iter = rep.iterate_edge(Letter::new(2, false), 4, Mode::Explicit).unwrap();
        let s = rep.graph().format_path(&iter);
        for w in ["c a", "a d", "d c", "d a", "a b", "b d"] {
            assert!(s.contains(w));
        }
        assert!(attracting_language(&rep, 0).unwrap().is_empty());
    }

    #[test]
    fn closure_properties() {
        let rep = example();
        for m in 1..=6 {
            let l = attracting_language(&rep, m).unwrap();
            assert!(l.is_subword_closed() && l.is_inversion_closed(), "m={m}");
        }
    }

    #[test]
    fn invariance_under_the_map() {
        let rep = example();
        let m = 3;
        let buffer = rep.edge_images().iter().map(|i| i.len()).max().unwrap();
        let lm = attracting_language(&rep, m).unwrap();
        let big = attracting_language(&rep, m + buffer).unwrap();
        let g = rep.graph();
        let mut image = BTreeSet::new();
        for w in &big.words {
            let p = Path::new(g, g.origin(w[0]), w.clone()).unwrap();
            subwords(rep.apply_map(&p, 1, Mode::Explicit).unwrap().edges(), m, &mut image);
        }
        assert_eq!(image, lm.words);
    }

    #[test]
    fn monotone_stabilization() {
        let rounds = language_rounds(&example(), 3, 3).unwrap();
        for w in rounds.windows(2) {
            assert!(w[0].is_subset(&w[1]));
        }
        let n = rounds.len();
        assert!(rounds[n - 4..].windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn power_has_same_language() {
        let rep = example();
        let sq = rep.power(2).unwrap();
        let a = attracting_language(&rep, 3).unwrap();
        let b = attracting_language(&sq, 3).unwrap();
        assert!(languages_equal_at_depth(&a, &b, 3).unwrap());
        assert!(languages_equal_at_depth(&a, &a, 2).unwrap());
        assert!(matches!(languages_equal_at_depth(&a, &b, 4), Err(Error::DepthExceeded { .. })));
    }

    #[test]
    fn repelling_language_differs() {
        let rep = example();
        let psi = rep.outer_automorphism().unwrap().inverse().unwrap();
        let b = rep.basis();
        assert_eq!(psi.format(b), "a->a b' ; b->b ; c->c c d' b a' ; d->d c'");
        let text = format!(
            "group rank=4 basis=a,b,c,d\nfactor A1=a,b\nmap {}\nfiltration G1=b G2=a,b\n",
            psi.format(b)
        );
        let inv = parse_rep(&text).unwrap();
        let plus = attracting_language(&rep, 2).unwrap();
        let minus = attracting_language(&inv, 2).unwrap();
        assert!(!languages_equal_at_depth(&plus, &minus, 2).unwrap());
        assert!(words(&minus).contains("c c"));
        assert!(!words(&plus).contains("c c"));
    }

    #[test]
    fn non_primitive_rejected() {
        let rep = parse_rep("group rank=2 basis=a,b\nmap a->a b ; b->b\n").unwrap();
        assert!(matches!(attracting_language(&rep, 2), Err(Error::NotPrimitive(_))));
    }

    #[test]
    fn collapsed_language_and_basis() {
        let rep = example();
        let c = collapse_to_a_traintrack(&rep).unwrap();
        let l = attracting_language(&c, 2).unwrap();
        assert!(words(&l).contains("d d"));
        assert!(l.to_basis(&c).is_err());
        let lb = attracting_language(&rep, 2).unwrap().to_basis(&rep).unwrap();
        assert!(lb.over_basis);
        assert_eq!(lb.len(), attracting_language(&rep, 2).unwrap().len());
    }

    #[test]
    fn recurrence() {
        let rep = example();
        let r = recurrence_gap(&rep, 1, 10_000).unwrap();
        // oracle: direct scan of the formatted prefix
        let iter = rep.iterate_edge(Letter::new(2, false), 10, Mode::Explicit).unwrap();
        let prefix = &iter[..10_000];
        let mut want = 0;
        for x in 0..4 {
            let pos: Vec<usize> = (0..prefix.len()).filter(|&i| prefix[i].generator() == x).collect();
            want = want.max(pos.windows(2).map(|p| p[1] - p[0]).max().unwrap());
        }
        assert_eq!(r, Recurrence::Bounded { gap: want, window: 10_000 });
        assert_eq!(want, 14);
        let np = parse_rep("group rank=2 basis=a,b\nmap a->a b ; b->b\n").unwrap();
        assert!(matches!(recurrence_gap(&np, 1, 100).unwrap(), Recurrence::Unbounded { ref word, .. } if word == "a"));
        assert!(matches!(recurrence_gap(&rep, 3, 2).unwrap(), Recurrence::Unbounded { .. }));
    }

    #[test]
    fn dual_languages() {
        let hnn = GrushkoTreePoint::hnn_limit();
        let l = dual_language_simplicial(&hnn, 4).unwrap();
        let w = words(&l);
        assert_eq!(w.len(), 8);
        assert!(w.contains("a a a a") && w.contains("a' a'"));
        for k in 1..=3 {
            let t = GrushkoTreePoint::limit_tree(k).unwrap();
            let l = dual_language_simplicial(&t, k + 1).unwrap();
            let b = t.basis();
            let akb = b.format_word(&Word::letter(0).pow(k).concat(&Word::letter(1)));
            assert!(words(&l).contains(&akb));
            assert!(words(&l).contains(&b.format_word(&Word::letter(0).pow(k + 1))));
            assert!(!words(&l).contains("b b"));
        }
    }

    proptest! {
        #[test]
        fn dual_language_truncates(m in 1usize..6) {
            let t = GrushkoTreePoint::limit_tree(2).unwrap();
            let small = dual_language_simplicial(&t, m).unwrap();
            let big = dual_language_simplicial(&t, m + 1).unwrap();
            prop_assert_eq!(big.truncate(m).unwrap().words, small.words);
        }
    }
}
