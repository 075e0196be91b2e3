//! The worked examples as named checks, in a fixed order.

use anyhow::Result;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use reltrack::currents::{rational_current, RelativeCurrent};
use reltrack::freegroup::{
    basis_aligned_systems, classify_ffs, zeta, CyclicWord, FfsClass, FreeFactorSystem, Letter, RelativeBasis, Word,
};
use reltrack::graphmap::collapse_to_a_traintrack;
use reltrack::reltrees::{eta_infinity, is_dual_at_depth, rational_dual, translation_length, GrushkoTreePoint};
use reltrack::whitehead::{connectivity_report, relative_whitehead_graph, whitehead_graph};

use crate::assets::Assets;
use crate::specfile;

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub got: String,
    pub passed: bool,
}

fn check(name: &str, expected: impl Into<String>, got: impl Into<String>) -> Check {
    let (expected, got) = (expected.into(), got.into());
    Check { name: name.into(), passed: expected == got, expected, got }
}

pub type CurrentFn = fn(&RelativeBasis, &CyclicWord, usize) -> reltrack::Result<RelativeCurrent>;

pub fn run(assets: &Assets, seed: u64) -> Result<Vec<Check>> {
    run_with(assets, seed, rational_current)
}

/// As [`run`] with the current constructor swapped out.
pub fn run_with(assets: &Assets, seed: u64, current: CurrentFn) -> Result<Vec<Check>> {
    let example = specfile::parse(&assets.read("example.spec")?)?;
    let hnn = GrushkoTreePoint::parse(&assets.read("hnn-limit.tree")?)?;
    let mut out = Vec::new();

    let f2 = RelativeBasis::from_names(&["a", "b"], &[vec!["a"]])?;
    let alpha = CyclicWord::new(&f2.parse_word("a b a a b")?);
    let eta = current(&f2, &alpha, 4)?;
    let counts: Vec<String> =
        ["b", "b a", "a b a b"].iter().map(|w| eta.weight_of(w).map(|q| q.to_string())).collect::<reltrack::Result<_>>()?;
    out.push(check("abaab current counts b, ba, abab", "2 2 1", counts.join(" ")));

    let rep = &example.rep;
    let gates = connectivity_report(&whitehead_graph(rep, 0)?).components;
    out.push(check("Whitehead gates at v", "[[a c c' d'] [a' b b' d]]", format_components(&gates)));

    let collapsed = collapse_to_a_traintrack(rep)?;
    let rel = relative_whitehead_graph(&collapsed, rep, 0)?;
    let rel_conn = connectivity_report(&rel);
    out.push(check(
        "relative Whitehead graph connected",
        "[[c c' d d' v_A]]",
        format_components(&rel_conn.components),
    ));

    let mut lengths = Vec::new();
    let mut duals = Vec::new();
    for k in 1..=5 {
        let t = GrushkoTreePoint::counterexample_tree(k)?;
        let w = |j: usize| {
            let mut letters = vec![Letter::new(0, false); j];
            letters.push(Letter::new(1, false));
            CyclicWord::new(&Word::reduce(letters))
        };
        lengths.push(format!("{},{}", translation_length(&t, &w(k)), translation_length(&t, &w(k + 1))));
        duals.push(rational_dual(&GrushkoTreePoint::limit_tree(k)?, &w(k)).to_string());
    }
    out.push(check("T_k lengths of a^k b, a^(k+1) b for k=1..5", ["1,3"; 5].join(" "), lengths.join(" ")));
    out.push(check("limit trees dual to a^k b for k=1..5", ["true"; 5].join(" "), duals.join(" ")));
    let eta_inf = eta_infinity(6)?;
    out.push(check("HNN limit not dual to eta_infinity at depth 6", "false", is_dual_at_depth(&hnn, &eta_inf, 6)?.to_string()));

    out.push(classification_table()?);
    out.push(seeded_invariants(seed)?);
    Ok(out)
}

fn format_components(c: &[Vec<String>]) -> String {
    let parts: Vec<String> = c.iter().map(|x| format!("[{}]", x.join(" "))).collect();
    format!("[{}]", parts.join(" "))
}

/// The exceptional systems by shape: two factors spanning F, one factor with
/// a rank-one complement, three factors spanning F.
fn expected_class(rank: usize, blocks: &[Vec<usize>]) -> FfsClass {
    let covered: usize = blocks.iter().map(Vec::len).sum();
    let complement = rank - covered;
    match (blocks.len(), complement) {
        (0, _) | (1, 0) => FfsClass::Trivial,
        (2, 0) => FfsClass::EmptyComplex,
        (1, 1) => FfsClass::ZeroDimensionalHnn,
        (3, 0) => FfsClass::ZeroDimensionalTriple,
        _ => FfsClass::NonExceptional,
    }
}

fn classification_table() -> Result<Check> {
    let mut total = 0;
    let mut mismatches = Vec::new();
    for rank in 2..=5 {
        for blocks in basis_aligned_systems(rank) {
            let gens: Vec<Vec<Word>> = blocks.iter().map(|b| b.iter().map(|&g| Word::letter(g)).collect()).collect();
            let a = FreeFactorSystem::from_generators(rank, &gens)?;
            if zeta(&a) > 4 {
                continue;
            }
            total += 1;
            let (want, got) = (expected_class(rank, &blocks), classify_ffs(&a));
            if want != got {
                mismatches.push(format!("rank {rank} {blocks:?}: {} vs {}", want.name(), got.name()));
            }
        }
    }
    let got = if mismatches.is_empty() { format!("{total} systems agree") } else { mismatches.join("; ") };
    Ok(check("exceptional classification, rank <= 5, zeta <= 4", format!("{total} systems agree"), got))
}

/// Random words: rational currents satisfy the consistency equations and
/// translation lengths on T_2 are conjugation invariant and homogeneous.
fn seeded_invariants(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f2 = RelativeBasis::from_names(&["a", "b"], &[vec!["a"]])?;
    let t = GrushkoTreePoint::counterexample_tree(2)?;
    let mut failures = Vec::new();
    let word = |rng: &mut ChaCha8Rng, len: usize| {
        Word::reduce((0..len).map(|_| Letter::new(rng.gen_range(0..2), rng.gen_bool(0.5))).collect::<Vec<_>>())
    };
    for i in 0..50 {
        let len = rng.gen_range(1..9);
        let w = word(&mut rng, len);
        let g = CyclicWord::new(&w);
        if g.is_empty() {
            continue;
        }
        if let Ok(eta) = rational_current(&f2, &g, 3) {
            if !eta.is_consistent() {
                failures.push(format!("case {i}: inconsistent current"));
            }
        }
        let h = word(&mut rng, 4);
        let l = translation_length(&t, &g);
        if translation_length(&t, &CyclicWord::new(&w.conjugate_by(&h))) != l {
            failures.push(format!("case {i}: conjugation changed the length"));
        }
        if translation_length(&t, &CyclicWord::new(&w.pow(3))) != l * BigRational::from_integer(BigInt::from(3)) {
            failures.push(format!("case {i}: length not homogeneous"));
        }
    }
    let got = if failures.is_empty() { "none".to_string() } else { failures.join("; ") };
    Ok(check(&format!("seeded current and length invariants (seed {seed})"), "none", got))
}
