//! Relative currents at finite depth: weights on non-peripheral reduced words.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freegroup::{is_nonperipheral, Automorphism, CyclicWord, FreeFactorSystem, Letter, RelativeBasis};
use crate::graphmap::{collapse_to_a_traintrack, dominant_eigen, transition_matrix, GraphMapRep};
use crate::lamination::{edge_letters, invert, require_primitive_top};
use crate::whitehead::{irreducibility_certificate, Verdict};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelativeCurrent {
    basis: RelativeBasis,
    depth: usize,
    /// Non-zero weights only.
    weights: BTreeMap<Vec<Letter>, BigRational>,
    /// The conjugacy class when the current is rational.
    provenance: Option<CyclicWord>,
}

impl RelativeCurrent {
    pub fn zero(basis: &RelativeBasis, depth: usize) -> Self {
        RelativeCurrent { basis: basis.clone(), depth, weights: BTreeMap::new(), provenance: None }
    }

    /// A weight table; it must satisfy flip invariance and both shift
    /// consistency families exactly.
    pub fn from_weights(basis: &RelativeBasis, depth: usize, weights: BTreeMap<Vec<Letter>, BigRational>) -> Result<Self> {
        for (w, x) in &weights {
            if w.is_empty() || w.len() > depth {
                return Err(Error::InvalidArgument(format!("word length {} outside 1..={depth}", w.len())));
            }
            if w.windows(2).any(|p| p[0] == p[1].inverse()) {
                return Err(Error::InvalidArgument(format!("`{}` is not reduced", basis.format_letters(w))));
            }
            if !is_nonperipheral(w, basis) {
                return Err(Error::Peripheral(basis.format_letters(w)));
            }
            if x.is_negative() {
                return Err(Error::InvalidArgument(format!("negative weight on `{}`", basis.format_letters(w))));
            }
        }
        let weights = weights.into_iter().filter(|(_, x)| !x.is_zero()).collect();
        let eta = RelativeCurrent { basis: basis.clone(), depth, weights, provenance: None };
        if let Some(msg) = eta.first_violation() {
            return Err(Error::InvalidArgument(msg));
        }
        Ok(eta)
    }

    pub fn basis(&self) -> &RelativeBasis {
        &self.basis
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn provenance(&self) -> Option<&CyclicWord> {
        self.provenance.as_ref()
    }

    pub fn weights(&self) -> &BTreeMap<Vec<Letter>, BigRational> {
        &self.weights
    }

    pub fn weight(&self, w: &[Letter]) -> BigRational {
        self.weights.get(w).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn weight_of(&self, text: &str) -> Result<BigRational> {
        Ok(self.weight(&self.basis.parse_letters(text)?))
    }

    pub fn scale(&self, t: &BigRational) -> Self {
        let weights = if t.is_zero() {
            BTreeMap::new()
        } else {
            self.weights.iter().map(|(w, x)| (w.clone(), x * t)).collect()
        };
        RelativeCurrent { weights, ..self.clone() }
    }

    pub fn truncate(&self, m: usize) -> Result<Self> {
        if m > self.depth {
            return Err(Error::DepthExceeded { requested: m, available: self.depth });
        }
        let weights = self.weights.iter().filter(|(w, _)| w.len() <= m).map(|(w, x)| (w.clone(), x.clone())).collect();
        Ok(RelativeCurrent { depth: m, weights, ..self.clone() })
    }

    /// Words whose equations need checking: stored words and their
    /// non-peripheral prefixes and suffixes.
    fn equation_words(&self) -> BTreeSet<Vec<Letter>> {
        let mut out = BTreeSet::new();
        for w in self.weights.keys() {
            for i in 0..w.len() {
                for j in i + 1..=w.len() {
                    if j - i < self.depth && is_nonperipheral(&w[i..j], &self.basis) {
                        out.insert(w[i..j].to_vec());
                    }
                }
            }
        }
        out
    }

    fn extension_sums(&self, w: &[Letter]) -> (BigRational, BigRational) {
        let mut right = BigRational::zero();
        let mut left = BigRational::zero();
        for x in self.basis.all_letters() {
            if w.last() != Some(&x.inverse()) {
                let mut wx = w.to_vec();
                wx.push(x);
                right += self.weight(&wx);
            }
            if w.first() != Some(&x.inverse()) {
                let mut xw = vec![x];
                xw.extend_from_slice(w);
                left += self.weight(&xw);
            }
        }
        (right, left)
    }

    /// The first failing flip or shift equation.
    pub fn first_violation(&self) -> Option<String> {
        for (w, x) in &self.weights {
            if self.weight(&invert(w)) != *x {
                return Some(format!("flip invariance fails at `{}`", self.basis.format_letters(w)));
            }
        }
        for w in self.equation_words() {
            let (r, l) = self.extension_sums(&w);
            let x = self.weight(&w);
            if r != x || l != x {
                return Some(format!("shift consistency fails at `{}`", self.basis.format_letters(&w)));
            }
        }
        None
    }

    pub fn is_consistent(&self) -> bool {
        self.first_violation().is_none()
    }

    /// Largest absolute defect over all flip and shift equations.
    pub fn consistency_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (w, x) in &self.weights {
            worst = worst.max((x - self.weight(&invert(w))).abs().to_f64().unwrap_or(f64::INFINITY));
        }
        for w in self.equation_words() {
            let (r, l) = self.extension_sums(&w);
            let x = self.weight(&w);
            for s in [r, l] {
                worst = worst.max((s - &x).abs().to_f64().unwrap_or(f64::INFINITY));
            }
        }
        worst
    }

    /// CSV rows `word,weight` sorted by length then letters; rationals as `p/q`.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(&Vec<Letter>, &BigRational)> = self.weights.iter().collect();
        rows.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then(a.0.cmp(b.0)));
        let mut s = String::from("word,weight\n");
        for (w, x) in rows {
            s.push_str(&format!("{},{}\n", self.basis.format_letters(w), x));
        }
        s
    }
}

fn peripheral_system(basis: &RelativeBasis) -> FreeFactorSystem {
    FreeFactorSystem::from_basis(basis)
}

/// Occurrences of each non-peripheral word of length at most `m` in one period
/// of the periodic words for `α` and for its inverse.
pub fn rational_current(basis: &RelativeBasis, alpha: &CyclicWord, m: usize) -> Result<RelativeCurrent> {
    if alpha.is_empty() {
        return Err(Error::InvalidArgument("the trivial class has no current".into()));
    }
    if peripheral_system(basis).carries(alpha) {
        return Err(Error::Peripheral(alpha.format(basis)));
    }
    let (root, k) = alpha.root();
    if k > 1 {
        return Err(Error::ProperPower { root: basis.format_letters(&root) });
    }
    let mut weights: BTreeMap<Vec<Letter>, BigRational> = BTreeMap::new();
    let one = BigRational::from_integer(1.into());
    for seq in [alpha.letters().to_vec(), alpha.inverse_letters()] {
        let n = seq.len();
        for i in 0..n {
            let mut w = Vec::with_capacity(m);
            for j in 0..m {
                w.push(seq[(i + j) % n]);
                if is_nonperipheral(&w, basis) {
                    *weights.entry(w.clone()).or_insert_with(BigRational::zero) += &one;
                }
            }
        }
    }
    Ok(RelativeCurrent { basis: basis.clone(), depth: m, weights, provenance: Some(alpha.clone()) })
}

/// `φ_*η_α = η_{φ(α)}`; only rational currents can be pushed forward.
pub fn pushforward(phi: &Automorphism, eta: &RelativeCurrent) -> Result<RelativeCurrent> {
    let alpha = eta
        .provenance
        .as_ref()
        .ok_or_else(|| Error::Unsupported("pushforward of a current without rational provenance".into()))?;
    phi.check_relative(&eta.basis)?;
    rational_current(&eta.basis, &phi.apply_cyclic(alpha), eta.depth)
}

/// `Σ η(w)` over non-peripheral words of length exactly `j`.
pub fn norm(eta: &RelativeCurrent, j: usize) -> Result<BigRational> {
    if j > eta.depth {
        return Err(Error::DepthExceeded { requested: j, available: eta.depth });
    }
    Ok(eta.weights.iter().filter(|(w, _)| w.len() == j).fold(BigRational::zero(), |s, (_, x)| s + x))
}

/// Sup distance between level-1 normalized weight tables up to depth `m`.
/// A finite-depth surrogate, not a metric on projectivized currents.
pub fn projective_distance(e1: &RelativeCurrent, e2: &RelativeCurrent, m: usize) -> Result<f64> {
    let available = e1.depth.min(e2.depth);
    if m > available {
        return Err(Error::DepthExceeded { requested: m, available });
    }
    let (n1, n2) = (norm(e1, 1)?, norm(e2, 1)?);
    if n1.is_zero() || n2.is_zero() {
        return Err(Error::ZeroNorm);
    }
    let words: BTreeSet<&Vec<Letter>> =
        e1.weights.keys().chain(e2.weights.keys()).filter(|w| w.len() <= m).collect();
    let mut worst = BigRational::zero();
    for w in words {
        let d = (e1.weight(w) / &n1 - e2.weight(w) / &n2).abs();
        if d > worst {
            worst = d;
        }
    }
    Ok(worst.to_f64().unwrap_or(f64::NAN))
}

pub fn support_at_depth(eta: &RelativeCurrent, m: usize) -> BTreeSet<Vec<Letter>> {
    eta.weights.iter().filter(|(w, x)| w.len() <= m && x.is_positive()).map(|(w, _)| w.clone()).collect()
}

const MAX_BLOCKS: usize = 200_000;

/// The substitution induced on length-`w` blocks by a letter substitution
/// without cancellation.
pub(crate) struct BlockSystem {
    w: usize,
    blocks: Vec<Vec<Letter>>,
    index: HashMap<Vec<Letter>, usize>,
    images: Vec<Vec<usize>>,
}

impl BlockSystem {
    /// Closure of `seeds` under the block substitution. `sigma` is indexed by
    /// [`Letter::index`].
    pub(crate) fn build(sigma: &[Vec<Letter>], w: usize, seeds: impl IntoIterator<Item = Vec<Letter>>) -> Result<Self> {
        let mut sys = BlockSystem { w, blocks: Vec::new(), index: HashMap::new(), images: Vec::new() };
        let mut queue: Vec<usize> = Vec::new();
        for s in seeds {
            if let Some(i) = sys.insert(s) {
                queue.push(i);
            }
        }
        while let Some(i) = queue.pop() {
            let block = sys.blocks[i].clone();
            let mut concat: Vec<Letter> = Vec::new();
            for &x in &block {
                let img = &sigma[x.index()];
                if let (Some(&last), Some(&first)) = (concat.last(), img.first()) {
                    if last == first.inverse() {
                        return Err(Error::Unsupported("the substitution cancels inside a block".into()));
                    }
                }
                concat.extend_from_slice(img);
            }
            let first = sigma[block[0].index()].len();
            let mut image = Vec::with_capacity(first);
            for start in 0..first {
                let b = concat[start..start + w].to_vec();
                let j = match sys.index.get(&b) {
                    Some(&j) => j,
                    None => {
                        let j = sys.insert(b).unwrap();
                        queue.push(j);
                        j
                    }
                };
                image.push(j);
            }
            sys.images[i] = image;
            if sys.blocks.len() > MAX_BLOCKS {
                return Err(Error::Overflow(MAX_BLOCKS));
            }
        }
        Ok(sys)
    }

    fn insert(&mut self, b: Vec<Letter>) -> Option<usize> {
        if self.index.contains_key(&b) {
            return None;
        }
        let i = self.blocks.len();
        self.index.insert(b.clone(), i);
        self.blocks.push(b);
        self.images.push(Vec::new());
        Some(i)
    }

    /// `M[i][j]` = occurrences of block `i` in the image of block `j`.
    pub(crate) fn matrix(&self) -> Vec<Vec<u64>> {
        let d = self.blocks.len();
        let mut m = vec![vec![0u64; d]; d];
        for (j, img) in self.images.iter().enumerate() {
            for &i in img {
                m[i][j] += 1;
            }
        }
        m
    }

    pub(crate) fn step(&self, counts: &[BigUint]) -> Vec<BigUint> {
        let mut out = vec![BigUint::zero(); self.blocks.len()];
        for (j, img) in self.images.iter().enumerate() {
            if counts[j].is_zero() {
                continue;
            }
            for &i in img {
                out[i] += &counts[j];
            }
        }
        out
    }

    pub(crate) fn cyclic_blocks(&self, word: &[Letter]) -> Vec<Vec<Letter>> {
        let n = word.len();
        (0..n).map(|i| (0..self.w).map(|j| word[(i + j) % n]).collect()).collect()
    }

    /// Cyclic block counts; `None` when some block is outside the system.
    pub(crate) fn cyclic_counts(&self, word: &[Letter]) -> Option<Vec<BigUint>> {
        let mut counts = vec![BigUint::zero(); self.blocks.len()];
        for b in self.cyclic_blocks(word) {
            counts[*self.index.get(&b)?] += 1u32;
        }
        Some(counts)
    }

    /// Per-word totals over block prefixes of length at most `m`.
    fn prefix_totals(&self, values: &[BigRational], m: usize) -> BTreeMap<Vec<Letter>, BigRational> {
        let mut out: BTreeMap<Vec<Letter>, BigRational> = BTreeMap::new();
        for (b, x) in self.blocks.iter().zip(values) {
            for l in 1..=m.min(self.w) {
                *out.entry(b[..l].to_vec()).or_insert_with(BigRational::zero) += x;
            }
        }
        out
    }
}

/// `η(w) = t(w) + t(w̄)` on non-peripheral words from block totals `t`.
fn symmetrized(basis: &RelativeBasis, totals: &BTreeMap<Vec<Letter>, BigRational>) -> BTreeMap<Vec<Letter>, BigRational> {
    let mut out: BTreeMap<Vec<Letter>, BigRational> = BTreeMap::new();
    for (w, x) in totals {
        if !is_nonperipheral(w, basis) {
            continue;
        }
        *out.entry(w.clone()).or_insert_with(BigRational::zero) += x;
        *out.entry(invert(w)).or_insert_with(BigRational::zero) += x;
    }
    out.retain(|_, x| !x.is_zero());
    out
}

/// Letter substitution of the induced automorphism, indexed by [`Letter::index`].
fn letter_substitution(phi: &Automorphism) -> Vec<Vec<Letter>> {
    (0..2 * phi.rank()).map(|i| phi.apply_letter(Letter::from_index(i)).into_letters()).collect()
}

fn original(rep: &GraphMapRep) -> &GraphMapRep {
    rep.collapse_info().map_or(rep, |i| &i.original)
}

const FREQ_TOL: f64 = 1e-13;

/// Normalized subword frequencies of the generic leaf, from the dominant
/// eigenvector of the block substitution on blocks of length `max(m, 2)`.
/// The weights are exact rationals of a floating eigenvector, so the
/// consistency equations hold up to rounding.
pub fn frequency_current(rep: &GraphMapRep, m: usize) -> Result<RelativeCurrent> {
    if m == 0 {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    let rep = original(rep);
    let top = require_primitive_top(rep)?;
    let letters = edge_letters(rep)?;
    let phi = rep.outer_automorphism()?;
    let sigma = letter_substitution(&phi);
    let w = m.max(2);
    let mut leaf = vec![letters[top[0]]];
    while leaf.len() < 4 * w {
        leaf = leaf.iter().flat_map(|x| sigma[x.index()].iter().copied()).collect();
    }
    let seeds: Vec<Vec<Letter>> = leaf.windows(w).map(|b| b.to_vec()).collect();
    let sys = BlockSystem::build(&sigma, w, seeds)?;
    let (_, v, _) = dominant_eigen(&sys.matrix(), FREQ_TOL);
    let values: Vec<BigRational> = v
        .iter()
        .map(|&x| BigRational::from_float(x).unwrap_or_else(BigRational::zero))
        .collect();
    let weights = symmetrized(rep.basis(), &sys.prefix_totals(&values, m));
    let level1: BigRational = weights.iter().filter(|(w, _)| w.len() == 1).fold(BigRational::zero(), |s, (_, x)| s + x);
    if level1.is_zero() {
        return Err(Error::ZeroNorm);
    }
    let weights = weights.into_iter().map(|(w, x)| (w, x / &level1)).collect();
    Ok(RelativeCurrent { basis: rep.basis().clone(), depth: m, weights, provenance: None })
}

pub const NS_EXPLICIT_CAP: usize = 4096;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NsReport {
    pub alpha: String,
    pub depth: usize,
    pub lambda: f64,
    /// Projective distance from `φ^n η_α` to the frequency current, n = 1..
    pub distances: Vec<f64>,
    /// `‖φ^n η_α‖ / ‖φ^{n-1} η_α‖` at level 1.
    pub ratios: Vec<f64>,
    pub modes: Vec<String>,
    /// First `n` computed from block occurrence vectors.
    pub vector_mode_from: Option<usize>,
    pub max_explicit_length: usize,
    pub distance_eventually_decreasing: bool,
    pub ratio_converged: bool,
    pub note: String,
}

/// Iterates `α` under the automorphism and compares the pushed-forward
/// currents with the frequency current. Explicit words are abandoned for
/// block occurrence vectors once they pass [`NS_EXPLICIT_CAP`].
pub fn ns_experiment(rep: &GraphMapRep, alpha: &CyclicWord, n_max: usize, m: usize) -> Result<NsReport> {
    if m == 0 {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    let rep = original(rep);
    let basis = rep.basis();
    if peripheral_system(basis).carries(alpha) {
        return Err(Error::Peripheral(alpha.format(basis)));
    }
    let collapsed = collapse_to_a_traintrack(rep)?;
    let cert = irreducibility_certificate(&collapsed, rep, &peripheral_system(basis))?;
    if let Verdict::Failed { witness } = cert.verdict {
        return Err(Error::InvalidArgument(format!("irreducibility certificate failed: {witness}")));
    }
    let lambda = transition_matrix(&collapsed, 0)?.pf.map(|p| p.lambda).unwrap_or(f64::NAN);
    let mut report = NsReport {
        alpha: alpha.format(basis),
        depth: m,
        lambda,
        distances: Vec::new(),
        ratios: Vec::new(),
        modes: Vec::new(),
        vector_mode_from: None,
        max_explicit_length: alpha.len(),
        distance_eventually_decreasing: false,
        ratio_converged: false,
        note: "projective distance is a finite-depth surrogate".into(),
    };
    if n_max == 0 {
        return Ok(report);
    }
    let target = frequency_current(rep, m)?;
    let phi = rep.outer_automorphism()?;
    let sigma = letter_substitution(&phi);
    let longest = sigma.iter().map(|s| s.len()).max().unwrap_or(1);
    let mut word = alpha.clone();
    let mut eta = rational_current(basis, &word, m)?;
    let mut blocks: Option<(BlockSystem, Vec<BigUint>)> = None;
    for n in 1..=n_max {
        if blocks.is_none() && word.len() * longest > NS_EXPLICIT_CAP {
            let w = m.max(2);
            let sys = BlockSystem::build(&sigma, w, BlockSystem { w, ..empty_system() }.cyclic_blocks(word.letters()))
                .map_err(|e| match e {
                    Error::Unsupported(_) | Error::Overflow(_) => Error::Overflow(NS_EXPLICIT_CAP),
                    e => e,
                })?;
            let counts = sys.cyclic_counts(word.letters()).expect("seeded blocks are present");
            blocks = Some((sys, counts));
            report.vector_mode_from = Some(n);
        }
        let next = match &mut blocks {
            None => {
                word = phi.apply_cyclic(&word);
                report.max_explicit_length = report.max_explicit_length.max(word.len());
                report.modes.push("explicit".into());
                rational_current(basis, &word, m)?
            }
            Some((sys, counts)) => {
                *counts = sys.step(counts);
                report.modes.push("vector".into());
                let values: Vec<BigRational> = counts.iter().map(|c| BigRational::from_integer(c.clone().into())).collect();
                let weights = symmetrized(basis, &sys.prefix_totals(&values, m));
                RelativeCurrent { basis: basis.clone(), depth: m, weights, provenance: None }
            }
        };
        let ratio = (norm(&next, 1)? / norm(&eta, 1)?).to_f64().unwrap_or(f64::NAN);
        report.ratios.push(ratio);
        report.distances.push(projective_distance(&next, &target, m)?);
        eta = next;
    }
    let d = &report.distances;
    let tail = &d[d.len() / 2..];
    report.distance_eventually_decreasing = tail.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    report.ratio_converged = (report.ratios.last().unwrap() - lambda).abs() <= 1e-3;
    Ok(report)
}

fn empty_system() -> BlockSystem {
    BlockSystem { w: 1, blocks: Vec::new(), index: HashMap::new(), images: Vec::new() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freegroup::Word;
    use crate::graphmap::tests::example;
    use crate::lamination::attracting_language;
    use proptest::prelude::*;

    fn f3() -> RelativeBasis {
        RelativeBasis::from_names(&["a", "b", "c"], &[vec!["a"]]).unwrap()
    }

    fn f2() -> RelativeBasis {
        RelativeBasis::from_names(&["a", "b"], &[vec!["a"]]).unwrap()
    }

    fn cyc(b: &RelativeBasis, s: &str) -> CyclicWord {
        CyclicWord::new(&b.parse_word(s).unwrap())
    }

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn abaab_counts() {
        let b = f2();
        let eta = rational_current(&b, &cyc(&b, "abaab"), 4).unwrap();
        assert_eq!(eta.weight_of("b").unwrap(), q(2));
        assert_eq!(eta.weight_of("b a").unwrap(), q(2));
        assert_eq!(eta.weight_of("a b a b").unwrap(), q(1));
        assert_eq!(eta.weight_of("a b").unwrap(), q(2));
        assert_eq!(norm(&eta, 1).unwrap(), q(4));
        assert!(eta.is_consistent());
    }

    #[test]
    fn rotation_oracle() {
        // independent count: scan every rotation of α and ᾱ as strings
        let b = f2();
        let alpha = cyc(&b, "abaab");
        let eta = rational_current(&b, &alpha, 3).unwrap();
        let fwd: Vec<char> = "abaab".chars().collect();
        let bwd: Vec<char> = "BAABA".chars().collect();
        let count = |s: &str| {
            let pat: Vec<char> = s.chars().collect();
            [&fwd, &bwd]
                .iter()
                .map(|seq| (0..5).filter(|&i| (0..pat.len()).all(|j| seq[(i + j) % 5] == pat[j])).count())
                .sum::<usize>()
        };
        for (s, t) in [("b", "b"), ("ab", "a b"), ("aab", "a a b"), ("BA", "b' a'"), ("baa", "b a a")] {
            assert_eq!(eta.weight_of(t).unwrap(), q(count(s) as i64), "{t}");
        }
        let support: BTreeSet<String> = support_at_depth(&eta, 2).iter().map(|w| b.format_letters(w)).collect();
        let want: BTreeSet<String> =
            ["b", "b'", "a b", "b a", "b' a'", "a' b'"].iter().map(|s| s.to_string()).collect();
        assert_eq!(support, want);
    }

    #[test]
    fn rejections() {
        let b = f2();
        assert!(matches!(rational_current(&b, &cyc(&b, "a a"), 2), Err(Error::Peripheral(_))));
        assert!(matches!(rational_current(&b, &cyc(&b, "ab ab"), 2), Err(Error::ProperPower { ref root }) if root == "a b"));
        let eta = rational_current(&b, &cyc(&b, "b"), 2).unwrap();
        assert_eq!(eta.weight_of("b").unwrap(), q(1));
        assert_eq!(eta.weight_of("b'").unwrap(), q(1));
        assert!(matches!(norm(&eta, 3), Err(Error::DepthExceeded { .. })));
        let z = RelativeCurrent::zero(&b, 2);
        assert_eq!(norm(&z, 1).unwrap(), q(0));
        assert!(support_at_depth(&z, 2).is_empty());
        assert!(matches!(projective_distance(&z, &eta, 1), Err(Error::ZeroNorm)));
    }

    #[test]
    fn pushforwards() {
        let rep = example();
        let b = rep.basis();
        let phi = rep.outer_automorphism().unwrap();
        let c = rational_current(b, &cyc(b, "c"), 3).unwrap();
        let pc = pushforward(&phi, &c).unwrap();
        assert_eq!(pc.provenance().unwrap().format(b), CyclicWord::new(&b.parse_word("c a d").unwrap()).format(b));
        let cad = rational_current(b, &cyc(b, "c a d"), 3).unwrap();
        assert_eq!(pushforward(&phi, &cad).unwrap(), rational_current(b, &cyc(b, "c a d a b d c a d"), 3).unwrap());
        let id = Automorphism::identity(4);
        assert_eq!(pushforward(&id, &cad).unwrap(), cad);
        assert!(pushforward(&phi, &frequency_current(&rep, 1).unwrap()).is_err());
    }

    #[test]
    fn projective_examples() {
        let rep = example();
        let b = rep.basis();
        let c = rational_current(b, &cyc(b, "c"), 1).unwrap();
        let d = rational_current(b, &cyc(b, "d"), 1).unwrap();
        assert_eq!(projective_distance(&c, &c, 1).unwrap(), 0.0);
        assert_eq!(projective_distance(&c, &c.scale(&q(2)), 1).unwrap(), 0.0);
        assert!(projective_distance(&c, &d, 1).unwrap() > 0.0);
    }

    #[test]
    fn example_frequencies() {
        let rep = example();
        let eta = frequency_current(&rep, 1).unwrap();
        let c = eta.weight_of("c").unwrap().to_f64().unwrap();
        let d = eta.weight_of("d").unwrap().to_f64().unwrap();
        assert!((2.0 * c - 0.3819660113).abs() < 1e-9, "{c}");
        assert!((2.0 * d - 0.6180339887).abs() < 1e-9, "{d}");
        assert_eq!(norm(&eta, 1).unwrap(), q(1));
        // oracle: letter counts in an explicit iterate
        let iter = rep.iterate_edge(Letter::new(2, false), 12, crate::graphmap::Mode::Explicit).unwrap();
        let nc = iter.iter().filter(|x| x.generator() == 2).count() as f64;
        let nd = iter.iter().filter(|x| x.generator() == 3).count() as f64;
        assert!((nc / (nc + nd) - 2.0 * c).abs() < 1e-3);
        let eta2 = frequency_current(&rep, 2).unwrap();
        assert!(eta2.consistency_defect() < 1e-9);
        // empirical depth-2 frequencies from a long prefix
        let b = rep.basis();
        let total = nc + nd;
        for (s, x, y) in [("c a", 2, 0), ("d c", 3, 2), ("a d", 0, 3)] {
            let n = iter.windows(2).filter(|w| w[0].generator() == x && w[1].generator() == y).count() as f64;
            let want = n / (2.0 * total);
            let got = eta2.weight(&b.parse_letters(s).unwrap()).to_f64().unwrap();
            assert!((got - want).abs() < 1e-3, "{s}: {got} vs {want}");
        }
    }

    #[test]
    fn support_matches_language() {
        let rep = example();
        for m in 1..=4 {
            let eta = frequency_current(&rep, m).unwrap();
            let lang = attracting_language(&rep, m).unwrap().to_basis(&rep).unwrap();
            let want: BTreeSet<Vec<Letter>> =
                lang.words.iter().filter(|w| is_nonperipheral(w, rep.basis())).cloned().collect();
            assert_eq!(support_at_depth(&eta, m), want, "m={m}");
        }
    }

    #[test]
    fn ns_example() {
        let rep = example();
        let b = rep.basis();
        let r = ns_experiment(&rep, &cyc(b, "c"), 20, 1).unwrap();
        assert_eq!(r.ratios.len(), 20);
        assert!(r.vector_mode_from.is_some());
        assert!(r.max_explicit_length <= NS_EXPLICIT_CAP);
        let lambda = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((r.ratios[19] - lambda).abs() < 1e-3);
        for n in 15..20 {
            assert!((r.ratios[n - 1] - lambda).abs() <= 1e-3);
        }
        assert!(r.ratio_converged && r.distance_eventually_decreasing);
        assert!(matches!(ns_experiment(&rep, &cyc(b, "a"), 5, 1), Err(Error::Peripheral(_))));
        assert!(ns_experiment(&rep, &cyc(b, "c"), 0, 1).unwrap().ratios.is_empty());
    }

    #[test]
    fn vector_mode_agrees_with_explicit() {
        let rep = example();
        let b = rep.basis();
        let phi = rep.outer_automorphism().unwrap();
        let sigma = letter_substitution(&phi);
        let alpha = cyc(b, "c d'");
        let mut word = phi.apply_cyclic(&alpha);
        let sys = BlockSystem::build(&sigma, 3, BlockSystem { w: 3, ..empty_system() }.cyclic_blocks(word.letters()))
            .unwrap();
        let mut counts = sys.cyclic_counts(word.letters()).unwrap();
        for _ in 0..4 {
            word = phi.apply_cyclic(&word);
            counts = sys.step(&counts);
            let values: Vec<BigRational> = counts.iter().map(|c| BigRational::from_integer(c.clone().into())).collect();
            let weights = symmetrized(b, &sys.prefix_totals(&values, 3));
            assert_eq!(&weights, rational_current(b, &word, 3).unwrap().weights());
        }
    }

    #[test]
    fn depth_coherence() {
        let b = f3();
        let alpha = cyc(&b, "a b c' a a b");
        let big = rational_current(&b, &alpha, 4).unwrap();
        let mut small = rational_current(&b, &alpha, 3).unwrap();
        small.provenance = big.provenance.clone();
        assert_eq!(big.truncate(3).unwrap(), small);
    }

    #[test]
    fn table_currents() {
        let b = f2();
        let mut w = BTreeMap::new();
        w.insert(b.parse_letters("b").unwrap(), q(1));
        assert!(RelativeCurrent::from_weights(&b, 1, w.clone()).is_err());
        w.insert(b.parse_letters("b'").unwrap(), q(1));
        assert!(RelativeCurrent::from_weights(&b, 1, w).is_ok());
        let mut p = BTreeMap::new();
        p.insert(b.parse_letters("a").unwrap(), q(1));
        assert!(matches!(RelativeCurrent::from_weights(&b, 1, p), Err(Error::Peripheral(_))));
    }

    fn arb_class() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(0usize..6, 1..12)
    }

    fn to_word(idx: &[usize]) -> Word {
        Word::reduce(idx.iter().map(|&i| Letter::from_index(i)))
    }

    fn arb_relative_aut() -> impl Strategy<Value = Automorphism> {
        prop::collection::vec((0usize..3, 0usize..6, any::<bool>()), 0..6).prop_map(|moves| {
            let b = f3();
            let mut phi = Automorphism::identity(3);
            for (t, by, right) in moves {
                if let Ok(s) = Automorphism::transvection(3, t, Letter::from_index(by), right) {
                    if s.check_relative(&b).is_ok() {
                        phi = s.compose(&phi);
                    }
                }
            }
            phi
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn pushforward_agrees(idx in arb_class(), phi in arb_relative_aut(), m in 1usize..4) {
            let b = f3();
            let alpha = CyclicWord::new(&to_word(&idx));
            prop_assume!(!alpha.is_empty() && !peripheral_system(&b).carries(&alpha) && !alpha.is_proper_power());
            let eta = rational_current(&b, &alpha, m).unwrap();
            prop_assert_eq!(pushforward(&phi, &eta).unwrap(), rational_current(&b, &phi.apply_cyclic(&alpha), m).unwrap());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn rational_currents_are_consistent(idx in arb_class(), m in 1usize..5) {
            let b = f3();
            let alpha = CyclicWord::new(&to_word(&idx));
            prop_assume!(!alpha.is_empty() && !peripheral_system(&b).carries(&alpha) && !alpha.is_proper_power());
            let eta = rational_current(&b, &alpha, m).unwrap();
            prop_assert!(eta.is_consistent());
            prop_assert_eq!(norm(&eta, 1).unwrap(), BigRational::from_integer(
                (2 * alpha.letters().iter().filter(|l| l.generator() != 0).count()).into()));
        }
    }
}
