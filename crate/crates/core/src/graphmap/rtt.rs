use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::matrix::{transition_matrix, Growth, MatrixClass};
use super::GraphMapRep;
use crate::error::Result;
use crate::freegroup::Letter;

pub const DEFAULT_PATH_BOUND: usize = 12;

/// `Dφ`: each direction maps to the first direction of its tightened image.
pub fn direction_map(rep: &GraphMapRep) -> Vec<Letter> {
    rep.graph().all_directions().map(|d| rep.direction_image(d)[0]).collect()
}

/// Two directions are eventually identified by `Dφ` (an illegal turn).
pub fn is_illegal(dmap: &[Letter], a: Letter, b: Letter) -> bool {
    let (mut x, mut y) = (a, b);
    for _ in 0..=dmap.len() {
        if x == y {
            return true;
        }
        x = dmap[x.index()];
        y = dmap[y.index()];
    }
    x == y
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StratumCheck {
    pub stratum: usize,
    pub edges: Vec<String>,
    pub class: MatrixClass,
    pub growth: Growth,
    pub lambda: Option<f64>,
    /// First and last edges of each image lie in the stratum.
    pub boundary_edges: Option<bool>,
    pub boundary_witness: Option<String>,
    /// Non-trivial lower paths with endpoints on the stratum keep non-trivial images.
    pub lower_paths: Option<bool>,
    pub lower_witness: Option<String>,
    /// Legal paths of length at most two in the stratum have legal images.
    pub legality: Option<bool>,
    pub legality_witness: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RttReport {
    pub path_bound: usize,
    pub strata: Vec<StratumCheck>,
    pub filtration_invariant: bool,
    pub homotopy_equivalence: bool,
    pub strata_irreducible: bool,
    /// All checked conditions hold on every EG stratum.
    pub passed: bool,
}

/// Whether a path crosses only legal turns between two edges of `stratum`.
fn first_illegal_turn(path: &[Letter], stratum: &[usize], dmap: &[Letter]) -> Option<usize> {
    (1..path.len()).find(|&i| {
        let (x, y) = (path[i - 1], path[i]);
        stratum.contains(&x.generator()) && stratum.contains(&y.generator()) && is_illegal(dmap, x.inverse(), y)
    })
}

struct ImageStack {
    stack: Vec<Letter>,
}

impl ImageStack {
    /// Pushes with free reduction; returns an undo record.
    fn push(&mut self, img: &[Letter]) -> (Vec<Letter>, usize) {
        let mut popped = Vec::new();
        let mut pushed = 0;
        for &x in img {
            if pushed == 0 && self.stack.last() == Some(&x.inverse()) {
                popped.push(self.stack.pop().unwrap());
            } else if pushed > 0 && self.stack.last() == Some(&x.inverse()) {
                self.stack.pop();
                pushed -= 1;
            } else {
                self.stack.push(x);
                pushed += 1;
            }
        }
        (popped, pushed)
    }

    fn undo(&mut self, record: (Vec<Letter>, usize)) {
        let (popped, pushed) = record;
        self.stack.truncate(self.stack.len() - pushed);
        self.stack.extend(popped.into_iter().rev());
    }
}

fn lower_path_witness(rep: &GraphMapRep, lower: &[usize], ends: &BTreeSet<usize>, bound: usize) -> Option<Vec<Letter>> {
    let g = rep.graph();
    let dirs: Vec<Vec<Letter>> = (0..g.vertex_count())
        .map(|v| g.directions_at(v).into_iter().filter(|d| lower.contains(&d.generator())).collect())
        .collect();
    let images: Vec<Vec<Letter>> = g.all_directions().map(|d| rep.direction_image(d)).collect();
    fn dfs(
        at: usize,
        path: &mut Vec<Letter>,
        stack: &mut ImageStack,
        ctx: (&super::MarkedGraph, &[Vec<Letter>], &[Vec<Letter>], &BTreeSet<usize>, usize),
    ) -> bool {
        let (g, dirs, images, ends, bound) = ctx;
        if !path.is_empty() && ends.contains(&at) && stack.stack.is_empty() {
            return true;
        }
        if path.len() == bound {
            return false;
        }
        for &d in &dirs[at] {
            if path.last() == Some(&d.inverse()) {
                continue;
            }
            let rec = stack.push(&images[d.index()]);
            path.push(d);
            if dfs(g.terminus(d), path, stack, ctx) {
                return true;
            }
            path.pop();
            stack.undo(rec);
        }
        false
    }
    for &s in ends {
        let mut path = Vec::new();
        let mut stack = ImageStack { stack: Vec::new() };
        if dfs(s, &mut path, &mut stack, (g, &dirs, &images, ends, bound)) {
            return Some(path);
        }
    }
    None
}

/// Checks the relative train track conditions on every EG stratum.
pub fn verify_rtt(rep: &GraphMapRep, bound: usize) -> Result<RttReport> {
    let g = rep.graph();
    let dmap = direction_map(rep);
    let strata = rep.strata();
    let mut checks = Vec::new();
    let mut passed = true;
    let mut irreducible = true;
    for (r, h) in strata.iter().enumerate() {
        let data = transition_matrix(rep, r)?;
        if !matches!(data.class, MatrixClass::Primitive | MatrixClass::IrreducibleNonPrimitive) {
            irreducible = false;
        }
        let mut check = StratumCheck {
            stratum: r + 1,
            edges: data.edge_names.clone(),
            class: data.class,
            growth: data.growth,
            lambda: data.pf.as_ref().map(|p| p.lambda),
            boundary_edges: None,
            boundary_witness: None,
            lower_paths: None,
            lower_witness: None,
            legality: None,
            legality_witness: None,
        };
        if data.growth == Growth::Eg {
            let bad = h.iter().find(|&&e| {
                let img = rep.edge_image(e);
                !h.contains(&img[0].generator()) || !h.contains(&img[img.len() - 1].generator())
            });
            check.boundary_edges = Some(bad.is_none());
            check.boundary_witness = bad.map(|&e| g.edge_name(e).to_string());

            let lower = rep.lower_edges(r);
            let mut on_h = BTreeSet::new();
            let mut on_l = BTreeSet::new();
            for e in 0..g.edge_count() {
                let (a, b) = g.ends(e);
                if h.contains(&e) {
                    on_h.extend([a, b]);
                }
                if lower.contains(&e) {
                    on_l.extend([a, b]);
                }
            }
            let ends: BTreeSet<usize> = on_h.intersection(&on_l).copied().collect();
            let w = lower_path_witness(rep, &lower, &ends, bound);
            check.lower_paths = Some(w.is_none());
            check.lower_witness = w.map(|p| g.format_path(&p));

            let mut witness = None;
            'legal: for &e in h {
                if first_illegal_turn(rep.edge_image(e), h, &dmap).is_some() {
                    witness = Some(g.edge_name(e).to_string());
                    break;
                }
                for d1 in [Letter::new(e, false), Letter::new(e, true)] {
                    for d2 in g.directions_at(g.terminus(d1)) {
                        if d2 == d1.inverse() || !h.contains(&d2.generator()) || is_illegal(&dmap, d1.inverse(), d2) {
                            continue;
                        }
                        let mut img = rep.direction_image(d1);
                        img.extend(rep.direction_image(d2));
                        let img = crate::freegroup::reduce(&img).into_letters();
                        if first_illegal_turn(&img, h, &dmap).is_some() {
                            witness = Some(g.format_path(&[d1, d2]));
                            break 'legal;
                        }
                    }
                }
            }
            check.legality = Some(witness.is_none());
            check.legality_witness = witness;
            passed &= check.boundary_edges == Some(true) && check.lower_paths == Some(true) && check.legality == Some(true);
        }
        checks.push(check);
    }
    Ok(RttReport {
        path_bound: bound,
        strata: checks,
        filtration_invariant: true,
        homotopy_equivalence: true,
        strata_irreducible: irreducible,
        passed,
    })
}

/// Smallest invariant edge set containing `edges`.
pub fn closure(rep: &GraphMapRep, edges: &[usize]) -> Vec<usize> {
    let mut set: BTreeSet<usize> = edges.iter().copied().collect();
    let mut todo: Vec<usize> = set.iter().copied().collect();
    while let Some(e) = todo.pop() {
        for d in rep.edge_image(e) {
            if set.insert(d.generator()) {
                todo.push(d.generator());
            }
        }
    }
    set.into_iter().collect()
}

/// Union of the closures of single edges that avoid the top stratum.
pub fn maximal_invariant_subgraph(rep: &GraphMapRep) -> Vec<usize> {
    let top = rep.top_stratum();
    let mut out = BTreeSet::new();
    for e in 0..rep.graph().edge_count() {
        let cl = closure(rep, &[e]);
        if cl.iter().all(|x| !top.contains(x)) {
            out.extend(cl);
        }
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphmap::parse_rep;
    use crate::graphmap::tests::example;

    #[test]
    fn example_passes() {
        for filt in ["G1=b G2=a,b", "G1=a,b"] {
            let text = format!("group rank=4 basis=a,b,c,d\nfactor A1=a,b\nmap a->a b ; b->b ; c->c a d ; d->d c a d\nfiltration {filt}\n");
            let rep = parse_rep(&text).unwrap();
            let report = verify_rtt(&rep, DEFAULT_PATH_BOUND).unwrap();
            assert!(report.passed, "{filt}");
            assert_eq!(report.path_bound, 12);
            let top = report.strata.last().unwrap();
            assert_eq!((top.boundary_edges, top.lower_paths, top.legality), (Some(true), Some(true), Some(true)));
        }
        let coarse = parse_rep("group rank=4 basis=a,b,c,d\nmap a->a b ; b->b ; c->c a d ; d->d c a d\nfiltration G1=a,b\n").unwrap();
        assert!(!verify_rtt(&coarse, 12).unwrap().strata_irreducible);
    }

    #[test]
    fn boundary_violation_has_witness() {
        // the image of e ends in the lower edge f
        let rep = parse_rep("group rank=3 basis=e,g,f\nmap e->e g f ; g->g e g f ; f->f\nfiltration G1=f\n").unwrap();
        let report = verify_rtt(&rep, 12).unwrap();
        let top = report.strata.last().unwrap();
        assert_eq!(top.growth, Growth::Eg);
        assert_eq!(top.boundary_edges, Some(false));
        assert_eq!(top.boundary_witness.as_deref(), Some("e"));
        assert!(!report.passed);
    }

    #[test]
    fn image_stack_undo_restores() {
        let l = |i| Letter::from_index(i);
        let mut st = ImageStack { stack: vec![l(0), l(2)] };
        let rec = st.push(&[l(3), l(1), l(4)]);
        assert_eq!(st.stack, vec![l(4)]);
        st.undo(rec);
        assert_eq!(st.stack, vec![l(0), l(2)]);
        let rec = st.push(&[l(4), l(5), l(3)]);
        assert_eq!(st.stack, vec![l(0)]);
        st.undo(rec);
        assert_eq!(st.stack, vec![l(0), l(2)]);
    }

    #[test]
    fn rose_legality() {
        let rep = parse_rep("group rank=2 basis=a,b\nmap a->a b ; b->b a b\n").unwrap();
        let dmap = direction_map(&rep);
        // independent scan: no image crosses an illegal turn
        for e in 0..2 {
            let img = rep.edge_image(e);
            for w in img.windows(2) {
                assert!(!is_illegal(&dmap, w[0].inverse(), w[1]));
            }
        }
        let report = verify_rtt(&rep, 12).unwrap();
        assert_eq!(report.strata[0].legality, Some(true));
    }

    #[test]
    fn invariant_subgraphs() {
        let rep = example();
        let k = maximal_invariant_subgraph(&rep);
        let names: Vec<&str> = k.iter().map(|&e| rep.graph().edge_name(e)).collect();
        assert_eq!(names, ["a", "b"]);
        let irr = parse_rep("group rank=2 basis=a,b\nmap a->a b ; b->b a b\n").unwrap();
        assert!(maximal_invariant_subgraph(&irr).is_empty());
        let fixed = parse_rep("group rank=3 basis=e,a,b\nmap e->e ; a->a b ; b->b a b\nfiltration G1=e\n").unwrap();
        assert_eq!(maximal_invariant_subgraph(&fixed), vec![0]);
    }
}
