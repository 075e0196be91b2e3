//! Simplicial (F,A)-trees given as marked graphs with a collapsed subgraph and
//! edge lengths, their length functions, and stable-length estimates.

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::currents::{support_at_depth, RelativeCurrent};
use crate::error::{Error, Result};
use crate::freegroup::{ffs_partial_order, Automorphism, CyclicWord, FactorOrder, FreeFactorSystem, Letter, RelativeBasis, Word};
use crate::graphmap::collapse::component_generators;
use crate::graphmap::{
    collapse_to_a_traintrack, direction_map, graph_lines, is_illegal, parse_document, realized_ffs, transition_matrix,
    Document, GraphMapRep, MarkedGraph, Mode, Path,
};
use crate::lamination::{dual_language_simplicial, require_primitive_top};

/// A simplicial tree: the universal cover of `graph` with the lifts of
/// `collapsed` crushed to points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrushkoTreePoint {
    basis: RelativeBasis,
    graph: MarkedGraph,
    collapsed: Vec<usize>,
    /// Per edge; zero exactly on collapsed edges.
    lengths: Vec<BigRational>,
}

impl GrushkoTreePoint {
    /// `lengths` lists every non-collapsed edge once with a positive length.
    /// The realized system must lie above the peripheral system of `basis`.
    pub fn new(
        basis: RelativeBasis,
        graph: MarkedGraph,
        collapsed: Vec<usize>,
        lengths: Vec<(usize, BigRational)>,
    ) -> Result<Self> {
        if graph.marking().len() != basis.rank() {
            return Err(Error::RankMismatch(basis.rank(), graph.marking().len()));
        }
        let ne = graph.edge_count();
        let mut collapsed: Vec<usize> = collapsed;
        collapsed.sort_unstable();
        collapsed.dedup();
        if collapsed.iter().any(|&e| e >= ne) {
            return Err(Error::InvalidGraph("collapsed edge out of range".into()));
        }
        let mut table: Vec<Option<BigRational>> = vec![None; ne];
        for (e, l) in lengths {
            if e >= ne {
                return Err(Error::InvalidGraph("length for an unknown edge".into()));
            }
            if collapsed.contains(&e) {
                return Err(Error::InvalidGraph(format!("collapsed edge `{}` has a length", graph.edge_name(e))));
            }
            if !l.is_positive() {
                return Err(Error::InvalidGraph(format!("edge `{}` needs a positive length", graph.edge_name(e))));
            }
            if table[e].replace(l).is_some() {
                return Err(Error::InvalidGraph(format!("edge `{}` has two lengths", graph.edge_name(e))));
            }
        }
        let mut lens = Vec::with_capacity(ne);
        for (e, l) in table.into_iter().enumerate() {
            match (l, collapsed.contains(&e)) {
                (Some(l), _) => lens.push(l),
                (None, true) => lens.push(BigRational::zero()),
                (None, false) => {
                    return Err(Error::InvalidGraph(format!("edge `{}` has no length", graph.edge_name(e))))
                }
            }
        }
        let t = GrushkoTreePoint { basis, graph, collapsed, lengths: lens };
        let a = FreeFactorSystem::from_basis(&t.basis);
        if !a.is_below(&t.realized_ffs()?) {
            return Err(Error::InvalidFactorSystem(format!(
                "the collapsed subgraph realizes {} which does not contain {}",
                t.realized_ffs()?.describe(&t.basis),
                a.describe(&t.basis)
            )));
        }
        Ok(t)
    }

    fn with_unit_lengths(basis: RelativeBasis, graph: MarkedGraph, collapsed: Vec<usize>) -> Result<Self> {
        let lengths = (0..graph.edge_count()).filter(|e| !collapsed.contains(e)).map(|e| (e, BigRational::one())).collect();
        GrushkoTreePoint::new(basis, graph, collapsed, lengths)
    }

    /// A tree file: the graph-map format with `collapse=` and optional
    /// `lengths=` (default 1 on every non-collapsed edge).
    pub fn from_document(doc: Document) -> Result<Self> {
        let collapsed = doc.collapse.unwrap_or_default();
        match doc.lengths {
            None => GrushkoTreePoint::with_unit_lengths(doc.basis, doc.graph, collapsed),
            Some(l) => GrushkoTreePoint::new(doc.basis, doc.graph, collapsed, l),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc = parse_document(text)?;
        if doc.map.is_some() || doc.filtration.is_some() {
            return Err(Error::Parse { line: 1, message: "tree files carry no `map` or `filtration`".into() });
        }
        GrushkoTreePoint::from_document(doc)
    }

    pub fn to_text(&self) -> String {
        let g = &self.graph;
        let mut s = graph_lines(&self.basis, g);
        let names: Vec<&str> = self.collapsed.iter().map(|&e| g.edge_name(e)).collect();
        if !names.is_empty() {
            let _ = writeln!(s, "collapse={}", names.join(","));
        }
        let lens: Vec<String> = (0..g.edge_count())
            .filter(|e| !self.collapsed.contains(e))
            .map(|e| format!("{}:{}", g.edge_name(e), self.lengths[e]))
            .collect();
        let _ = writeln!(s, "lengths={}", lens.join(","));
        s
    }

    /// Central vertex with one edge to a vertex per peripheral block carrying
    /// the block loops (collapsed); cofactor loops at the centre. Unit lengths.
    pub fn basis_aligned(basis: &RelativeBasis) -> Result<Self> {
        let blocks = basis.blocks();
        let cof = basis.cofactor_letters();
        if blocks.len() <= 1 && cof.is_empty() || blocks.is_empty() {
            let g = MarkedGraph::rose(basis);
            let k = blocks.first().cloned().unwrap_or_default();
            return GrushkoTreePoint::with_unit_lengths(basis.clone(), g, k);
        }
        let mut vertices = vec!["u".to_string()];
        let mut names: Vec<String> = basis.names().to_vec();
        let mut ends = vec![(0, 0); basis.rank()];
        let mut marking: Vec<Vec<Letter>> = (0..basis.rank()).map(|x| vec![Letter::new(x, false)]).collect();
        for (i, block) in blocks.iter().enumerate() {
            let w = vertices.len();
            let mut vname = format!("w{}", i + 1);
            while vertices.contains(&vname) {
                vname.insert(0, 'w');
            }
            vertices.push(vname);
            let mut ename = format!("t{}", i + 1);
            while names.contains(&ename) {
                ename.insert(0, 't');
            }
            names.push(ename);
            let t = Letter::new(names.len() - 1, false);
            ends.push((0, w));
            for &x in block {
                ends[x] = (w, w);
                marking[x] = vec![t, Letter::new(x, false), t.inverse()];
            }
        }
        let g = MarkedGraph::new(vertices, names, ends, marking)?;
        let k: Vec<usize> = blocks.iter().flatten().copied().collect();
        GrushkoTreePoint::with_unit_lengths(basis.clone(), g, k)
    }

    fn ab_basis() -> RelativeBasis {
        RelativeBasis::from_names(&["a", "b"], &[vec!["a"]]).expect("valid basis")
    }

    /// Loop `y` at `u`, edge `e` from `u` to `w`, loop `x` at `w`, with
    /// `a = e x ē` and `b = e x̄^k ē y`; so `a^k b` reads `y`.
    fn two_vertex(k: usize) -> Result<MarkedGraph> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be positive".into()));
        }
        let xs = vec!["x'"; k].join(" ");
        let text = format!(
            "group rank=2 basis=a,b\nfactor A1=a\ngraph vertices=u,w edges=y(u,u),e(u,w),x(w,w)\nmarking a=e x e' b=e {xs} e' y\n"
        );
        Ok(parse_document(&text)?.graph)
    }

    /// `x` collapsed, unit lengths on `y` and `e`.
    pub fn counterexample_tree(k: usize) -> Result<Self> {
        GrushkoTreePoint::with_unit_lengths(GrushkoTreePoint::ab_basis(), GrushkoTreePoint::two_vertex(k)?, vec![2])
    }

    /// `x` and `y` collapsed: vertex groups `⟨a⟩` and `⟨a^k b⟩`.
    pub fn limit_tree(k: usize) -> Result<Self> {
        GrushkoTreePoint::with_unit_lengths(GrushkoTreePoint::ab_basis(), GrushkoTreePoint::two_vertex(k)?, vec![0, 2])
    }

    /// One vertex with group `⟨a⟩` and a unit loop reading `b`.
    pub fn hnn_limit() -> Self {
        let b = GrushkoTreePoint::ab_basis();
        GrushkoTreePoint::with_unit_lengths(b.clone(), MarkedGraph::rose(&b), vec![0]).expect("valid tree")
    }

    /// The original graph of a representative with the collapse forest crushed.
    pub fn from_collapse(rep: &GraphMapRep) -> Result<Self> {
        let m = PfMetric::new(rep)?;
        GrushkoTreePoint::with_unit_lengths(m.rep.basis().clone(), m.rep.graph().clone(), m.forest)
    }

    /// As [`from_collapse`](Self::from_collapse) with left PF eigenvector lengths.
    pub fn pf_tree(rep: &GraphMapRep) -> Result<Self> {
        let m = PfMetric::new(rep)?;
        let lengths = (0..m.lengths.len())
            .filter(|e| !m.forest.contains(e))
            .map(|e| {
                let q = BigRational::from_float(m.lengths[e])
                    .ok_or_else(|| Error::InvalidArgument("non-finite eigenvector entry".into()))?;
                Ok((e, q))
            })
            .collect::<Result<Vec<_>>>()?;
        GrushkoTreePoint::new(m.rep.basis().clone(), m.rep.graph().clone(), m.forest, lengths)
    }

    pub fn basis(&self) -> &RelativeBasis {
        &self.basis
    }

    pub fn graph(&self) -> &MarkedGraph {
        &self.graph
    }

    pub fn collapsed(&self) -> &[usize] {
        &self.collapsed
    }

    pub fn length(&self, e: usize) -> &BigRational {
        &self.lengths[e]
    }

    /// Sum of the edge lengths (the covolume).
    pub fn volume(&self) -> BigRational {
        self.lengths.iter().fold(BigRational::zero(), |s, l| s + l)
    }

    /// Generators of the non-trivial vertex groups, as basis words.
    pub fn vertex_groups(&self) -> Result<Vec<Vec<Word>>> {
        Ok(component_generators(&self.graph, &self.collapsed)?
            .into_iter()
            .map(|(_, g)| g)
            .filter(|g| !g.is_empty())
            .collect())
    }

    pub fn realized_ffs(&self) -> Result<FreeFactorSystem> {
        realized_ffs(&self.graph, self.basis.rank(), &self.collapsed)
    }

    pub fn scale(&self, t: &BigRational) -> Result<Self> {
        if !t.is_positive() {
            return Err(Error::InvalidArgument("scale factor must be positive".into()));
        }
        Ok(GrushkoTreePoint { lengths: self.lengths.iter().map(|l| l * t).collect(), ..self.clone() })
    }

    fn loop_length(&self, edges: &[Letter]) -> BigRational {
        edges.iter().fold(BigRational::zero(), |s, d| s + &self.lengths[d.generator()])
    }
}

/// Length of the tightened loop of `g` with collapsed edges counting zero.
pub fn translation_length(t: &GrushkoTreePoint, g: &CyclicWord) -> BigRational {
    t.loop_length(&t.graph.realize_cyclic(g))
}

/// The tree with marking precomposed by `φ`: `l_{Tφ}(g) = l_T(φ(g))`.
pub fn act(t: &GrushkoTreePoint, phi: &Automorphism) -> Result<GrushkoTreePoint> {
    phi.check_relative(&t.basis)?;
    let g = &t.graph;
    let marking: Vec<Vec<Letter>> = (0..t.basis.rank()).map(|x| g.realize(phi.image(x))).collect();
    let ends = (0..g.edge_count()).map(|e| g.ends(e)).collect();
    let graph = MarkedGraph::new(g.vertex_names().to_vec(), g.edge_alphabet().names().to_vec(), ends, marking)?;
    Ok(GrushkoTreePoint { graph, ..t.clone() })
}

/// The line of `α` lies in the dual lamination exactly when `α` is elliptic.
pub fn rational_dual(t: &GrushkoTreePoint, alpha: &CyclicWord) -> bool {
    translation_length(t, alpha).is_zero()
}

/// `supp(η) ⊆ L(T)` up to depth `m`. A `true` answer only holds up to that depth.
pub fn is_dual_at_depth(t: &GrushkoTreePoint, eta: &RelativeCurrent, m: usize) -> Result<bool> {
    if m > eta.depth() {
        return Err(Error::DepthExceeded { requested: m, available: eta.depth() });
    }
    if eta.basis().names() != t.basis.names() {
        return Err(Error::InvalidArgument("current and tree use different bases".into()));
    }
    let dual = dual_language_simplicial(t, m)?;
    Ok(support_at_depth(eta, m).iter().all(|w| dual.contains(w)))
}

/// Weight 1 on every non-peripheral subword of the line `…aaa b aaa…` and of
/// its inverse, up to length `m`: the limit of the currents of `a^k b` scaled by `1/k`.
pub fn eta_infinity(m: usize) -> Result<RelativeCurrent> {
    let basis = GrushkoTreePoint::ab_basis();
    let (a, b) = (Letter::new(0, false), Letter::new(1, false));
    let mut weights = std::collections::BTreeMap::new();
    for len in 1..=m {
        for n in 0..len {
            let mut w = vec![a; n];
            w.push(b);
            w.extend(std::iter::repeat_n(a, len - 1 - n));
            weights.insert(crate::lamination::invert(&w), BigRational::one());
            weights.insert(w, BigRational::one());
        }
    }
    RelativeCurrent::from_weights(&basis, m, weights)
}

/// Lengths on the uncollapsed graph of an A-train track representative: the
/// left PF eigenvector of the collapsed map on surviving edges, zero on the
/// collapse forest.
struct PfMetric {
    rep: GraphMapRep,
    forest: Vec<usize>,
    lengths: Vec<f64>,
    lambda: f64,
    dmap: Vec<Letter>,
}

impl PfMetric {
    fn new(rep: &GraphMapRep) -> Result<Self> {
        let rep = rep.collapse_info().map_or(rep, |i| &i.original).clone();
        let collapsed = collapse_to_a_traintrack(&rep)?;
        require_primitive_top(&collapsed)?;
        let info = collapsed.collapse_info().expect("collapse info");
        let data = transition_matrix(&collapsed, 0)?;
        let pf = data.pf.ok_or(Error::Reducible)?;
        let mut lengths = vec![0.0; rep.graph().edge_count()];
        for (e, q) in info.edge_map.iter().enumerate() {
            if let Some(q) = q {
                let i = data.edges.iter().position(|x| x == q).expect("collapsed edge in stratum");
                lengths[e] = pf.left[i];
            }
        }
        let dmap = direction_map(&rep);
        Ok(PfMetric { forest: info.forest.clone(), lengths, lambda: pf.lambda, dmap, rep })
    }

    fn is_top(&self, d: Letter) -> bool {
        !self.forest.contains(&d.generator())
    }

    fn length(&self, edges: &[Letter]) -> f64 {
        edges.iter().map(|d| self.lengths[d.generator()]).sum()
    }

    /// Illegal turns between consecutive surviving edges of a cyclic loop.
    fn illegal_turns(&self, lp: &[Letter]) -> usize {
        let n = lp.len();
        (0..n)
            .filter(|&i| {
                let (x, y) = (lp[i], lp[(i + 1) % n]);
                self.is_top(x) && self.is_top(y) && (n > 1 || x.inverse() != y) && is_illegal(&self.dmap, x.inverse(), y)
            })
            .count()
    }

    /// Largest PF length lost on one side when tightening `φ(d̄₁)φ(d₂)` over
    /// turns `{d₁, d₂}` of surviving directions.
    fn cancellation_bound(&self) -> f64 {
        let g = self.rep.graph();
        let dirs: Vec<Letter> = g.all_directions().filter(|&d| self.is_top(d)).collect();
        let mut c: f64 = 0.0;
        for &d1 in &dirs {
            for &d2 in &dirs {
                if d1 == d2 || g.origin(d1) != g.origin(d2) {
                    continue;
                }
                let mut img = self.rep.direction_image(d1.inverse());
                img.extend(self.rep.direction_image(d2));
                let before = self.length(&img);
                let after = self.length(Word::reduce(img).letters());
                c = c.max(0.5 * (before - after));
            }
        }
        c
    }

    fn realize(&self, g: &CyclicWord) -> Vec<Letter> {
        self.rep.graph().realize_cyclic(g)
    }

    /// `[φ(loop)]` cyclically tightened.
    fn step(&self, lp: &[Letter], cap: usize) -> Result<Vec<Letter>> {
        if lp.is_empty() {
            return Ok(Vec::new());
        }
        let g = self.rep.graph();
        let p = Path::new(g, g.origin(lp[0]), lp.to_vec())?;
        let img = self.rep.apply_map(&p, 1, Mode::Capped(cap))?;
        Ok(crate::graphmap::cyclic_core(img.edges()).to_vec())
    }
}

const LOOP_CAP: usize = 1 << 21;

/// An interval containing the stable length `lim l(φ^p g)/λ^p` in the PF metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthEnclosure {
    pub lower: f64,
    pub upper: f64,
    pub power_used: usize,
    /// Illegal turns left in the loop at `power_used`.
    pub illegal_turns: usize,
    pub converged: bool,
}

impl LengthEnclosure {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.lower - slack && x <= self.upper + slack
    }
}

fn enclosure(m: &PfMetric, c: f64, lp: &[Letter], p: usize) -> LengthEnclosure {
    let scale = m.lambda.powi(p as i32);
    let upper = m.length(lp) / scale;
    let illegal = m.illegal_turns(lp);
    let lower = (upper - 2.0 * c * illegal as f64 / (scale * (m.lambda - 1.0))).max(0.0);
    LengthEnclosure { lower, upper, power_used: p, illegal_turns: illegal, converged: false }
}

/// Iterates the loop of `g` until the enclosure is narrower than `tol` or
/// `p_max` is reached. Loops without illegal turns give exact values.
pub fn stable_length(rep: &GraphMapRep, g: &CyclicWord, tol: f64, p_max: usize) -> Result<LengthEnclosure> {
    let m = PfMetric::new(rep)?;
    if FreeFactorSystem::from_basis(m.rep.basis()).carries(g) {
        return Ok(LengthEnclosure { lower: 0.0, upper: 0.0, power_used: 0, illegal_turns: 0, converged: true });
    }
    let c = m.cancellation_bound();
    stable_from(&m, c, m.realize(g), 0, tol, p_max)
}

fn stable_from(m: &PfMetric, c: f64, mut lp: Vec<Letter>, p0: usize, tol: f64, p_max: usize) -> Result<LengthEnclosure> {
    let mut p = p0;
    loop {
        let mut e = enclosure(m, c, &lp, p);
        if e.illegal_turns == 0 || e.width() <= tol {
            e.converged = true;
            return Ok(e);
        }
        if p >= p_max {
            return Ok(e);
        }
        match m.step(&lp, LOOP_CAP) {
            Ok(next) => lp = next,
            Err(Error::Overflow(_)) => return Ok(e),
            Err(err) => return Err(err),
        }
        p += 1;
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeNsReport {
    pub lambda: f64,
    pub sample: Vec<String>,
    /// `spectra[i][p] = l_T(φ^p g_i) / λ^p`.
    pub spectra: Vec<Vec<f64>>,
    /// Sup over the sample of `|spectra[·][p] - spectra[·][p-1]|`, p = 1..
    pub sup_differences: Vec<f64>,
    pub cauchy: bool,
    pub enclosures: Vec<LengthEnclosure>,
    /// Whether the last spectrum value lies in the enclosure, per sample element.
    pub inside_enclosures: Vec<bool>,
    /// First power at which the loop had no illegal turns, per sample element.
    pub legal_from: Vec<Option<usize>>,
    pub warnings: Vec<String>,
}

impl TreeNsReport {
    /// Rows `g`, columns `p`, then the enclosure and whether the last value
    /// lies in it. A closing `sup_diff` row carries the Cauchy flag.
    pub fn to_csv(&self) -> String {
        let cols = self.spectra.iter().map(|r| r.len()).max().unwrap_or(0);
        let mut s = String::from("g");
        for p in 0..cols {
            let _ = write!(s, ",p{p}");
        }
        s.push_str(",lower,upper,flag\n");
        for (i, (g, row)) in self.sample.iter().zip(&self.spectra).enumerate() {
            s.push_str(g);
            for x in row {
                let _ = write!(s, ",{x:.12e}");
            }
            let e = &self.enclosures[i];
            let _ = writeln!(s, ",{:.12e},{:.12e},{}", e.lower, e.upper, self.inside_enclosures[i]);
        }
        s.push_str("sup_diff,");
        for d in &self.sup_differences {
            let _ = write!(s, ",{d:.3e}");
        }
        let _ = writeln!(s, ",,,{}", self.cauchy);
        s
    }
}

fn same_marked_graph(a: &MarkedGraph, b: &MarkedGraph) -> bool {
    a.vertex_names() == b.vertex_names()
        && a.edge_alphabet().names() == b.edge_alphabet().names()
        && (0..a.edge_count()).all(|e| a.ends(e) == b.ends(e))
        && a.marking() == b.marking()
}

/// `l_{Tφ^p}(g)/λ^p` for `p ≤ p_max` together with stable-length enclosures.
/// When `T` lives on the representative's graph with the forest collapsed,
/// legal loops are advanced by edge counts instead of explicit words.
pub fn tree_ns_experiment(
    rep: &GraphMapRep,
    t: &GrushkoTreePoint,
    sample: &[CyclicWord],
    p_max: usize,
    tol: f64,
) -> Result<TreeNsReport> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let m = PfMetric::new(rep)?;
    let basis = m.rep.basis();
    if t.basis.names() != basis.names() {
        return Err(Error::InvalidArgument("tree and representative use different bases".into()));
    }
    let a = FreeFactorSystem::from_basis(basis);
    for g in sample {
        if g.is_empty() || a.carries(g) {
            return Err(Error::Peripheral(g.format(basis)));
        }
    }
    let phi = m.rep.outer_automorphism()?;
    let shortcut = same_marked_graph(&t.graph, m.rep.graph()) && m.forest.iter().all(|e| t.collapsed.contains(e));
    let top: Vec<usize> = (0..m.lengths.len()).filter(|e| !m.forest.contains(e)).collect();
    let tlen: Vec<f64> = t.lengths.iter().map(|l| l.to_f64().unwrap_or(f64::NAN)).collect();
    let c = m.cancellation_bound();
    let mut report = TreeNsReport {
        lambda: m.lambda,
        sample: sample.iter().map(|g| g.format(basis)).collect(),
        spectra: Vec::new(),
        sup_differences: Vec::new(),
        cauchy: false,
        enclosures: Vec::new(),
        inside_enclosures: Vec::new(),
        legal_from: Vec::new(),
        warnings: Vec::new(),
    };
    for g in sample {
        let mut row = Vec::with_capacity(p_max + 1);
        let mut legal_from = None;
        let mut enc = None;
        if shortcut {
            let mut lp = m.realize(g);
            let mut counts: Option<Vec<BigUint>> = None;
            for p in 0..=p_max {
                if p > 0 {
                    match &mut counts {
                        Some(v) => *v = advance_counts(&m.rep, &top, v),
                        None => lp = m.step(&lp, LOOP_CAP)?,
                    }
                }
                if counts.is_none() && m.illegal_turns(&lp) == 0 {
                    legal_from = Some(p);
                    enc = Some(stable_from(&m, c, lp.clone(), p, tol, p)?);
                    counts = Some(count_top(&top, &lp));
                }
                let l: f64 = match &counts {
                    Some(v) => top.iter().zip(v).map(|(&e, n)| n.to_f64().unwrap_or(f64::INFINITY) * tlen[e]).sum(),
                    None => lp.iter().map(|d| tlen[d.generator()]).sum(),
                };
                row.push(l / m.lambda.powi(p as i32));
            }
        } else {
            let mut word = g.clone();
            for p in 0..=p_max {
                if p > 0 {
                    word = phi.apply_cyclic(&word);
                    if word.len() > LOOP_CAP {
                        report.warnings.push(format!(
                            "{}: stopped at p = {} after the word exceeded {} letters",
                            g.format(basis),
                            p,
                            LOOP_CAP
                        ));
                        break;
                    }
                }
                let l = translation_length(t, &word).to_f64().unwrap_or(f64::NAN);
                row.push(l / m.lambda.powi(p as i32));
            }
        }
        let enc = match enc {
            Some(e) => e,
            None => stable_length(&m.rep, g, tol, p_max.max(1) * 4)?,
        };
        if !enc.converged {
            report.warnings.push(format!("{}: enclosure width {:.3e} above tolerance", g.format(basis), enc.width()));
        }
        let last = *row.last().unwrap();
        report.inside_enclosures.push(enc.contains(last, 1e-9 * enc.upper.max(1.0)));
        report.enclosures.push(enc);
        report.legal_from.push(legal_from);
        report.spectra.push(row);
    }
    let cols = report.spectra.iter().map(|r| r.len()).min().unwrap_or(0);
    for p in 1..cols {
        let d = report.spectra.iter().map(|r| (r[p] - r[p - 1]).abs()).fold(0.0, f64::max);
        report.sup_differences.push(d);
    }
    report.cauchy = report.sup_differences.last().is_some_and(|&d| d <= tol);
    Ok(report)
}

fn count_top(top: &[usize], lp: &[Letter]) -> Vec<BigUint> {
    let mut v = vec![BigUint::zero(); top.len()];
    for d in lp {
        if let Some(i) = top.iter().position(|&e| e == d.generator()) {
            v[i] += 1u32;
        }
    }
    v
}

/// One application of the surviving-edge transition counts; exact for legal loops.
fn advance_counts(rep: &GraphMapRep, top: &[usize], v: &[BigUint]) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); top.len()];
    for (j, &e) in top.iter().enumerate() {
        if v[j].is_zero() {
            continue;
        }
        for d in rep.edge_image(e) {
            if let Some(i) = top.iter().position(|&x| x == d.generator()) {
                out[i] += &v[j];
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStep {
    pub smaller: usize,
    pub larger: usize,
    pub order: FactorOrder,
    pub witness: String,
    pub dual_in_smaller: bool,
    pub dual_in_larger: bool,
    pub trees_realize_systems: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainReport {
    pub steps: Vec<ChainStep>,
    pub passed: bool,
}

/// For consecutive comparable systems and a witness carried by the smaller
/// one, checks that the witness is elliptic in the trees of both.
pub fn duality_chain_check(
    chain: &[FreeFactorSystem],
    trees: &[GrushkoTreePoint],
    witnesses: &[CyclicWord],
) -> Result<ChainReport> {
    if chain.len() < 2 || trees.len() != chain.len() || witnesses.len() + 1 != chain.len() {
        return Err(Error::InvalidArgument(
            "a chain of n systems needs n trees and n - 1 witnesses, with n at least 2".into(),
        ));
    }
    let mut steps = Vec::new();
    for i in 0..witnesses.len() {
        let order = ffs_partial_order(&chain[i], &chain[i + 1])?;
        let (smaller, larger) = match order {
            FactorOrder::Incomparable => {
                return Err(Error::NotComparable(format!("systems {} and {} of the chain", i, i + 1)))
            }
            FactorOrder::Below | FactorOrder::Equal => (i, i + 1),
            FactorOrder::Above => (i + 1, i),
        };
        let basis = &trees[smaller].basis;
        let w = &witnesses[i];
        if !chain[smaller].carries(w) {
            return Err(Error::InvalidArgument(format!(
                "witness `{}` is not carried by system {}",
                w.format(basis),
                smaller
            )));
        }
        let realizes = |j: usize| -> Result<bool> {
            Ok(ffs_partial_order(&trees[j].realized_ffs()?, &chain[j])? == FactorOrder::Equal)
        };
        steps.push(ChainStep {
            smaller,
            larger,
            order,
            witness: w.format(basis),
            dual_in_smaller: rational_dual(&trees[smaller], w),
            dual_in_larger: rational_dual(&trees[larger], w),
            trees_realize_systems: realizes(smaller)? && realizes(larger)?,
        });
    }
    let passed = steps.iter().all(|s| s.dual_in_smaller && s.dual_in_larger && s.trees_realize_systems);
    Ok(ChainReport { steps, passed })
}
