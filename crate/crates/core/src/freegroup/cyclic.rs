use serde::{Deserialize, Serialize};

use super::{Letter, RelativeBasis, Word};

/// An unoriented conjugacy class: cyclically reduced, stored as the least
/// rotation of the word or its inverse.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CyclicWord(Vec<Letter>);

impl CyclicWord {
    /// Canonicalizes any word (cyclic reduction first).
    pub fn new(w: &Word) -> Self {
        cyclic_reduce(w).0
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_word(&self) -> Word {
        Word::from_reduced(self.0.clone())
    }

    pub fn inverse_letters(&self) -> Vec<Letter> {
        self.0.iter().rev().map(|l| l.inverse()).collect()
    }

    /// The shortest root `r` with `self = r^k`, and `k`.
    pub fn root(&self) -> (Vec<Letter>, usize) {
        let n = self.0.len();
        if n == 0 {
            return (Vec::new(), 1);
        }
        let period = smallest_period(&self.0);
        if n.is_multiple_of(period) {
            (self.0[..period].to_vec(), n / period)
        } else {
            (self.0.clone(), 1)
        }
    }

    pub fn is_proper_power(&self) -> bool {
        self.root().1 > 1
    }

    pub fn format(&self, basis: &RelativeBasis) -> String {
        basis.format_word(&self.to_word())
    }
}

/// Returns the canonical cyclic word and a conjugator `c` with
/// `w = c · core · c⁻¹`, where `core` is the cyclically reduced word before
/// canonical rotation.
pub fn cyclic_reduce(w: &Word) -> (CyclicWord, Word) {
    let l = w.letters();
    let mut i = 0;
    let mut j = l.len();
    while j >= i + 2 && l[i] == l[j - 1].inverse() {
        i += 1;
        j -= 1;
    }
    let core = &l[i..j];
    let conjugator = Word::from_reduced(l[..i].to_vec());
    (CyclicWord(canonical_rotation(core)), conjugator)
}

fn canonical_rotation(core: &[Letter]) -> Vec<Letter> {
    if core.is_empty() {
        return Vec::new();
    }
    let fwd = least_rotation(core);
    let inv: Vec<Letter> = core.iter().rev().map(|l| l.inverse()).collect();
    let bwd = least_rotation(&inv);
    fwd.min(bwd)
}

/// Booth's algorithm.
fn least_rotation(s: &[Letter]) -> Vec<Letter> {
    let n = s.len();
    let at = |k: usize| s[k % n];
    let mut f: Vec<isize> = vec![-1; 2 * n];
    let mut k: usize = 0;
    for j in 1..2 * n {
        let sj = at(j);
        let mut i = f[j - k - 1];
        while i != -1 && sj != at(k + i as usize + 1) {
            if sj < at(k + i as usize + 1) {
                k = j - i as usize - 1;
            }
            i = f[i as usize];
        }
        if i == -1 && sj != at(k) {
            if sj < at(k) {
                k = j;
            }
            f[j - k] = -1;
        } else {
            f[j - k] = i + 1;
        }
    }
    (0..n).map(|t| at(k + t)).collect()
}

fn smallest_period(s: &[Letter]) -> usize {
    let n = s.len();
    let mut fail = vec![0usize; n + 1];
    let mut k = 0;
    for i in 1..n {
        while k > 0 && s[i] != s[k] {
            k = fail[k];
        }
        if s[i] == s[k] {
            k += 1;
        }
        fail[i + 1] = k;
    }
    n - fail[n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freegroup::RelativeBasis;
    use proptest::prelude::*;

    fn basis() -> RelativeBasis {
        RelativeBasis::from_names(&["a", "b", "c"], &[]).unwrap()
    }

    #[test]
    fn examples() {
        let b = basis();
        let (cw, c) = cyclic_reduce(&b.parse_word("a b a'").unwrap());
        assert_eq!(cw.format(&b), "b");
        assert_eq!(b.format_word(&c), "a");

        let w = b.parse_word("a b a a b").unwrap();
        let (cw, c) = cyclic_reduce(&w);
        assert!(c.is_empty());
        assert_eq!(cw.format(&b), "a a b a b");

        let (cw, c) = cyclic_reduce(&b.parse_word("b' a b").unwrap());
        assert_eq!(cw.format(&b), "a");
        assert_eq!(b.format_word(&c), "b'");

        let (cw, c) = cyclic_reduce(&Word::identity());
        assert!(cw.is_empty() && c.is_empty());
    }

    #[test]
    fn inverse_identified() {
        let b = basis();
        let w = b.parse_word("a b'").unwrap();
        assert_eq!(CyclicWord::new(&w), CyclicWord::new(&w.inverse()));
    }

    #[test]
    fn proper_power_root() {
        let b = basis();
        let cw = CyclicWord::new(&b.parse_word("a b a b a b").unwrap());
        let (root, k) = cw.root();
        assert_eq!(k, 3);
        assert_eq!(root.len(), 2);
        assert!(!CyclicWord::new(&b.parse_word("a b a a b").unwrap()).is_proper_power());
    }

    fn arb_word() -> impl Strategy<Value = Word> {
        proptest::collection::vec(0usize..6, 0..14)
            .prop_map(|v| Word::reduce(v.into_iter().map(Letter::from_index)))
    }

    fn brute_canonical(core: &[Letter]) -> Vec<Letter> {
        let n = core.len();
        let inv: Vec<Letter> = core.iter().rev().map(|l| l.inverse()).collect();
        let mut best: Option<Vec<Letter>> = None;
        for s in [core.to_vec(), inv] {
            for r in 0..n.max(1) {
                let rot: Vec<Letter> = (0..n).map(|t| s[(r + t) % n]).collect();
                if best.as_ref().is_none_or(|b| rot < *b) {
                    best = Some(rot);
                }
            }
        }
        best.unwrap_or_default()
    }

    proptest! {
        #[test]
        fn conjugator_relation(w in arb_word()) {
            let l = w.letters();
            let (cw, c) = cyclic_reduce(&w);
            // the unrotated core is what sits between the conjugators
            let core = Word::reduce(c.inverse().letters().iter().chain(l).chain(c.letters()).copied());
            prop_assert_eq!(core.len(), cw.len());
            prop_assert_eq!(CyclicWord::new(&core), cw.clone());
            prop_assert_eq!(brute_canonical(core.letters()), cw.letters().to_vec());
        }

        #[test]
        fn idempotent(w in arb_word()) {
            let cw = CyclicWord::new(&w);
            prop_assert_eq!(CyclicWord::new(&cw.to_word()), cw);
            let r = Word::reduce(w.letters().iter().copied());
            prop_assert_eq!(r, w);
        }

        #[test]
        fn reduce_length_bound(u in arb_word(), v in arb_word()) {
            prop_assert!(u.concat(&v).len() <= u.len() + v.len());
        }
    }
}
