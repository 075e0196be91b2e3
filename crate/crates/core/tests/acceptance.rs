//! One line per acceptance criterion. Runs without the test harness so the
//! lines always reach stdout; the process fails if any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reltrack::currents::{frequency_current, ns_experiment, rational_current, support_at_depth, NS_EXPLICIT_CAP};
use reltrack::freegroup::{
    basis_aligned_systems, classify_ffs, zeta, Automorphism, CyclicWord, FfsClass, FreeFactorSystem, Letter,
    RelativeBasis, Word,
};
use reltrack::graphmap::{collapse_to_a_traintrack, occurrence_vector, parse_rep, pf_data, GraphMapRep};
use reltrack::lamination::attracting_language;
use reltrack::reltrees::{
    duality_chain_check, eta_infinity, is_dual_at_depth, rational_dual, translation_length, tree_ns_experiment,
    GrushkoTreePoint,
};
use reltrack::whitehead::{connectivity_report, relative_whitehead_graph, whitehead_graph};

const EXAMPLE: &str = "group rank=4 basis=a,b,c,d
factor A1=a,b
map a->a b ; b->b ; c->c a d ; d->d c a d
filtration G1=b G2=a,b
";

const SEED: u64 = 0x5eed;

type Outcome = Result<String, String>;

fn example() -> GraphMapRep {
    parse_rep(EXAMPLE).expect("example parses")
}

fn lambda() -> f64 {
    (3.0 + 5f64.sqrt()) / 2.0
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn cyc(basis: &RelativeBasis, text: &str) -> CyclicWord {
    CyclicWord::new(&basis.parse_word(text).expect("word parses"))
}

fn akb(k: usize) -> CyclicWord {
    let mut letters = vec![Letter::new(0, false); k];
    letters.push(Letter::new(1, false));
    CyclicWord::new(&Word::reduce(letters))
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn criterion_1() -> Outcome {
    let basis = RelativeBasis::from_names(&["a", "b"], &[vec!["a"]]).map_err(e)?;
    let alpha = cyc(&basis, "a b a a b");
    let mut best = Duration::MAX;
    let mut eta = None;
    for _ in 0..5 {
        let t = Instant::now();
        let r = rational_current(&basis, &alpha, 4).map_err(e)?;
        best = best.min(t.elapsed());
        eta = Some(r);
    }
    let eta = eta.expect("ran");
    let got: Vec<BigRational> = ["b", "b a", "a b a b"].iter().map(|w| eta.weight_of(w)).collect::<Result<_, _>>().map_err(e)?;
    ensure(got == vec![q(2), q(2), q(1)], || format!("weights {got:?}"))?;
    within(best, Duration::from_millis(1))?;
    Ok(format!("eta(b)=2 eta(ba)=2 eta(abab)=1, best of 5 {best:?}"))
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let rep = example();
    let gates = connectivity_report(&whitehead_graph(&rep, 0).map_err(e)?).components;
    let collapsed = collapse_to_a_traintrack(&rep).map_err(e)?;
    let rel = relative_whitehead_graph(&collapsed, &rep, 0).map_err(e)?;
    let conn = connectivity_report(&rel);
    let elapsed = t.elapsed();
    let as_sets = |c: &[Vec<String>]| -> BTreeSet<BTreeSet<String>> { c.iter().map(|x| x.iter().cloned().collect()).collect() };
    let want: Vec<Vec<String>> = [vec!["c", "c'", "a", "d'"], vec!["a'", "b", "b'", "d"]]
        .iter()
        .map(|c| c.iter().map(|s| s.to_string()).collect())
        .collect();
    ensure(as_sets(&gates) == as_sets(&want), || format!("gates {gates:?}"))?;
    let nodes: BTreeSet<&str> = rel.labels.iter().map(String::as_str).collect();
    ensure(nodes == BTreeSet::from(["c", "c'", "d", "d'", "v_A"]), || format!("relative nodes {nodes:?}"))?;
    ensure(conn.connected, || format!("relative components {:?}", conn.components))?;
    within(elapsed, Duration::from_millis(100))?;
    Ok(format!("two gates, relative graph connected, {elapsed:?}"))
}

fn criterion_3() -> Outcome {
    for k in 1..=5 {
        let t = GrushkoTreePoint::counterexample_tree(k).map_err(e)?;
        let (l1, l3) = (translation_length(&t, &akb(k)), translation_length(&t, &akb(k + 1)));
        ensure(l1 == q(1) && l3 == q(3), || format!("k={k}: lengths {l1} and {l3}"))?;
    }
    Ok("lengths 1 and 3 for k=1..5".into())
}

fn criterion_4() -> Outcome {
    for k in 1..=5 {
        let t = GrushkoTreePoint::limit_tree(k).map_err(e)?;
        ensure(rational_dual(&t, &akb(k)), || format!("k={k}: a^k b not dual"))?;
    }
    let dual = is_dual_at_depth(&GrushkoTreePoint::hnn_limit(), &eta_infinity(6).map_err(e)?, 6).map_err(e)?;
    ensure(!dual, || "HNN limit dual to eta_infinity at depth 6".into())?;
    Ok("limit trees dual to a^k b, HNN limit not dual to eta_infinity".into())
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let pf = pf_data(&[vec![1, 1], vec![1, 2]], 1e-10).map_err(e)?;
    // root of x^2 - 3x + 1
    let err = (pf.lambda - lambda()).abs();
    ensure(err <= 1e-10, || format!("pf lambda {} off by {err:e}", pf.lambda))?;
    let rep = example();
    let r = ns_experiment(&rep, &cyc(rep.basis(), "c"), 20, 1).map_err(e)?;
    let elapsed = t.elapsed();
    let last = *r.ratios.last().ok_or("no ratios")?;
    ensure((last - lambda()).abs() <= 1e-3, || format!("ratio at n=20 is {last}"))?;
    ensure(r.vector_mode_from.is_some(), || "occurrence-vector mode never engaged".into())?;
    ensure(r.max_explicit_length <= NS_EXPLICIT_CAP, || format!("explicit length {}", r.max_explicit_length))?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!(
        "|lambda err|={err:.1e}, |ratio-lambda|={:.1e}, vector mode from n={}, {elapsed:?}",
        (last - lambda()).abs(),
        r.vector_mode_from.unwrap_or(0)
    ))
}

fn criterion_6() -> Outcome {
    let rep = example();
    for m in 1..=4 {
        let eta = frequency_current(&rep, m).map_err(e)?;
        let lang = attracting_language(&rep, m).map_err(e)?.to_basis(&rep).map_err(e)?;
        // peripheral words use only a and b
        let want: BTreeSet<Vec<Letter>> = lang.words.iter().filter(|w| w.iter().any(|l| l.generator() >= 2)).cloned().collect();
        let got = support_at_depth(&eta, m);
        ensure(got == want, || format!("m={m}: {} support words vs {} language words", got.len(), want.len()))?;
    }
    Ok("support equals non-peripheral language for m=1..4".into())
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let rep = example();
    let tree = GrushkoTreePoint::pf_tree(&rep).map_err(e)?;
    let b = rep.basis();
    let sample = [cyc(b, "c"), cyc(b, "d"), cyc(b, "c d'")];
    let r = tree_ns_experiment(&rep, &tree, &sample, 15, 1e-6).map_err(e)?;
    let elapsed = t.elapsed();
    let last = *r.sup_differences.last().ok_or("no differences")?;
    ensure(last < 1e-6, || format!("sup difference at p=15 is {last:e}"))?;
    let width = r.enclosures.iter().map(|x| x.width()).fold(0.0, f64::max);
    ensure(width <= 1e-6, || format!("enclosure width {width:e}"))?;
    ensure(r.inside_enclosures.iter().all(|&x| x), || format!("inside flags {:?}", r.inside_enclosures))?;
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("sup diff at p=15 {last:.1e}, max enclosure width {width:.1e}, {elapsed:?}"))
}

fn criterion_8() -> Outcome {
    let mut count = 0;
    for rank in 1..=5 {
        for blocks in basis_aligned_systems(rank) {
            let gens: Vec<Vec<Word>> = blocks.iter().map(|b| b.iter().map(|&g| Word::letter(g)).collect()).collect();
            let a = FreeFactorSystem::from_generators(rank, &gens).map_err(e)?;
            if zeta(&a) > 4 {
                continue;
            }
            count += 1;
            let covered: usize = blocks.iter().map(Vec::len).sum();
            let want = match (blocks.len(), rank - covered) {
                (0, _) | (1, 0) => FfsClass::Trivial,
                (2, 0) => FfsClass::EmptyComplex,
                (1, 1) => FfsClass::ZeroDimensionalHnn,
                (3, 0) => FfsClass::ZeroDimensionalTriple,
                _ => FfsClass::NonExceptional,
            };
            let got = classify_ffs(&a);
            ensure(got == want, || format!("rank {rank} blocks {blocks:?}: {} vs {}", got.name(), want.name()))?;
        }
    }
    Ok(format!("{count} basis-aligned systems classified"))
}

fn random_word(rng: &mut ChaCha8Rng, rank: usize, len: usize) -> Word {
    Word::reduce((0..len).map(|_| Letter::new(rng.gen_range(0..rank), rng.gen_bool(0.5))).collect::<Vec<_>>())
}

fn reduced_words(rank: usize, max: usize) -> Vec<Vec<Letter>> {
    let mut out: Vec<Vec<Letter>> = vec![Vec::new()];
    let mut frontier = out.clone();
    for _ in 0..max {
        let mut next = Vec::new();
        for w in &frontier {
            for i in 0..2 * rank {
                let l = Letter::from_index(i);
                if w.last().is_some_and(|&x| x == l.inverse()) {
                    continue;
                }
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Flip and both shift equations on every non-peripheral word shorter than the depth.
fn consistency_suite(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let basis = RelativeBasis::from_names(&["a", "b", "c"], &[vec!["a"]]).map_err(e)?;
    let depth = 3;
    let words = reduced_words(3, depth - 1);
    let nonperipheral = |w: &[Letter]| w.iter().any(|l| l.generator() != 0);
    let mut done = 0;
    while done < 200 {
        let len = rng.gen_range(1..10);
        let g = CyclicWord::new(&random_word(rng, 3, len));
        if !nonperipheral(g.letters()) || g.is_proper_power() {
            continue;
        }
        done += 1;
        let eta = rational_current(&basis, &g, depth).map_err(e)?;
        for w in words.iter().filter(|w| !w.is_empty() && nonperipheral(w)) {
            let x = eta.weight(w);
            let inv: Vec<Letter> = w.iter().rev().map(|l| l.inverse()).collect();
            ensure(eta.weight(&inv) == x, || format!("flip fails on {w:?}"))?;
            let extend = |left: bool| -> BigRational {
                (0..6)
                    .map(Letter::from_index)
                    .filter(|&y| if left { w[0] != y.inverse() } else { *w.last().unwrap() != y.inverse() })
                    .map(|y| {
                        let mut v = w.clone();
                        if left {
                            v.insert(0, y);
                        } else {
                            v.push(y);
                        }
                        eta.weight(&v)
                    })
                    .sum()
            };
            ensure(extend(false) == x && extend(true) == x, || format!("shift fails on {w:?}"))?;
        }
    }
    Ok(())
}

/// Occurrence vectors against explicit substitution on positive maps.
fn occurrence_suite(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for case in 0..100 {
        let rank = rng.gen_range(2..4);
        let names: Vec<String> = (0..rank).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
        let basis = RelativeBasis::new(&names, Vec::new()).map_err(e)?;
        let mut phi = Automorphism::identity(rank);
        for _ in 0..rng.gen_range(1..4) {
            let (t, by) = (rng.gen_range(0..rank), rng.gen_range(0..rank));
            if let Ok(s) = Automorphism::transvection(rank, t, Letter::new(by, false), rng.gen_bool(0.5)) {
                phi = s.compose(&phi);
            }
        }
        let rep = GraphMapRep::from_automorphism(basis, &phi).map_err(e)?;
        let (edge, p) = (rng.gen_range(0..rank), rng.gen_range(0..=6));
        let ov = occurrence_vector(&rep, edge, p).map_err(e)?;
        let mut path = vec![Letter::new(edge, false)];
        for _ in 0..p {
            path = path
                .iter()
                .flat_map(|&l| {
                    let img = rep.edge_image(l.generator()).to_vec();
                    if l.is_inverse() {
                        img.iter().rev().map(|x| x.inverse()).collect()
                    } else {
                        img
                    }
                })
                .collect();
        }
        let want: Vec<BigUint> =
            ov.edges.iter().map(|&f| BigUint::from(path.iter().filter(|l| l.generator() == f).count())).collect();
        ensure(ov.counts == want, || format!("case {case}: {:?} vs {want:?}", ov.counts))?;
    }
    Ok(())
}

fn length_suite(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let mut trees = Vec::new();
    for k in 1..=3 {
        trees.push(GrushkoTreePoint::counterexample_tree(k).map_err(e)?);
        trees.push(GrushkoTreePoint::limit_tree(k).map_err(e)?);
    }
    trees.push(GrushkoTreePoint::hnn_limit());
    trees.push(GrushkoTreePoint::pf_tree(&example()).map_err(e)?);
    for case in 0..100 {
        let t = &trees[rng.gen_range(0..trees.len())];
        let rank = t.basis().rank();
        let len = rng.gen_range(1..9);
        let g = random_word(rng, rank, len);
        let h = random_word(rng, rank, 5);
        let n = rng.gen_range(1..=5);
        let l = translation_length(t, &CyclicWord::new(&g));
        let lc = translation_length(t, &CyclicWord::new(&g.conjugate_by(&h)));
        ensure(lc == l, || format!("case {case}: conjugate length {lc} vs {l}"))?;
        let ln = translation_length(t, &CyclicWord::new(&g.pow(n as _)));
        ensure(ln == &l * q(n), || format!("case {case}: power {n} length {ln} vs {l}"))?;
    }
    Ok(())
}

/// Up from ⟨a⟩ to ⟨a,b⟩, down to ⟨b⟩, up to ⟨b,c⟩, down to ⟨c⟩ in F3.
fn chain_suite() -> Result<(), String> {
    let names = ["a", "b", "c"];
    let systems: Vec<Vec<&str>> = vec![vec!["a"], vec!["a", "b"], vec!["b"], vec!["b", "c"], vec!["c"]];
    let mut ffs = Vec::new();
    let mut trees = Vec::new();
    for s in &systems {
        let b = RelativeBasis::from_names(&names, std::slice::from_ref(s)).map_err(e)?;
        ffs.push(FreeFactorSystem::from_basis(&b));
        trees.push(GrushkoTreePoint::basis_aligned(&b).map_err(e)?);
    }
    let plain = RelativeBasis::from_names(&names, &[]).map_err(e)?;
    let witnesses = ["a", "b", "b", "c"].map(|w| cyc(&plain, w));
    let r = duality_chain_check(&ffs, &trees, &witnesses).map_err(e)?;
    ensure(r.passed && r.steps.len() == 4, || format!("chain steps {:?}", r.steps))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    consistency_suite(&mut rng).map_err(|m| format!("consistency: {m}"))?;
    occurrence_suite(&mut rng).map_err(|m| format!("occurrence: {m}"))?;
    length_suite(&mut rng).map_err(|m| format!("lengths: {m}"))?;
    chain_suite().map_err(|m| format!("chain: {m}"))?;
    Ok(format!("200 currents, 100 occurrence cases, 100 length cases, 4-step chain (seed {SEED:#x})"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("relative current counts", criterion_1),
        ("Whitehead example", criterion_2),
        ("length pairing values", criterion_3),
        ("intersection form pair", criterion_4),
        ("Perron-Frobenius and current ratios", criterion_5),
        ("support at finite depth", criterion_6),
        ("tree convergence", criterion_7),
        ("exceptional classification", criterion_8),
        ("property suites", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
