use serde::{Deserialize, Serialize};

use super::{core_graph, CoreGraph, CyclicWord, RelativeBasis, Word};
use crate::error::{Error, Result};

/// Conjugacy classes of free factors `{[A_1], ..., [A_k]}` of a free group of rank `n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FreeFactorSystem {
    factors: Vec<CoreGraph>,
    ambient_rank: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorOrder {
    Below,
    Equal,
    Above,
    Incomparable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FfsClass {
    EmptyComplex,
    ZeroDimensionalHnn,
    ZeroDimensionalTriple,
    Trivial,
    NonExceptional,
}

impl FfsClass {
    pub fn name(self) -> &'static str {
        match self {
            FfsClass::EmptyComplex => "empty_complex",
            FfsClass::ZeroDimensionalHnn => "zero_dimensional_hnn",
            FfsClass::ZeroDimensionalTriple => "zero_dimensional_triple",
            FfsClass::Trivial => "trivial",
            FfsClass::NonExceptional => "non_exceptional",
        }
    }
}

impl FreeFactorSystem {
    pub fn empty(ambient_rank: usize) -> Self {
        FreeFactorSystem { factors: Vec::new(), ambient_rank }
    }

    /// Builds a system from generating sets, one per factor. Trivial factors are dropped.
    pub fn from_generators(ambient_rank: usize, factors: &[Vec<Word>]) -> Result<Self> {
        let mut graphs: Vec<CoreGraph> = Vec::new();
        for gens in factors {
            if gens.iter().flat_map(|w| w.letters()).any(|l| l.generator() >= ambient_rank) {
                return Err(Error::InvalidFactorSystem("generator outside the ambient basis".into()));
            }
            let g = core_graph(gens);
            if g.rank() == 0 {
                continue;
            }
            if graphs.iter().any(|h| h.is_conjugate_to(&g)) {
                return Err(Error::InvalidFactorSystem("two factors are conjugate".into()));
            }
            graphs.push(g);
        }
        let sys = FreeFactorSystem { factors: graphs, ambient_rank };
        if sys.rank() > ambient_rank {
            return Err(Error::InvalidFactorSystem(format!(
                "total rank {} exceeds ambient rank {ambient_rank}",
                sys.rank()
            )));
        }
        Ok(sys)
    }

    /// The system spanned by the peripheral blocks of a relative basis.
    pub fn from_basis(basis: &RelativeBasis) -> Self {
        let factors: Vec<Vec<Word>> = basis
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&g| Word::letter(g)).collect())
            .collect();
        FreeFactorSystem::from_generators(basis.rank(), &factors).expect("blocks are disjoint")
    }

    pub fn from_graphs(ambient_rank: usize, factors: Vec<CoreGraph>) -> Result<Self> {
        let gens: Vec<Vec<Word>> = factors.iter().map(|g| g.generators()).collect();
        FreeFactorSystem::from_generators(ambient_rank, &gens)
    }

    pub fn factors(&self) -> &[CoreGraph] {
        &self.factors
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient_rank
    }

    /// Number of factors `k`.
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.factors.iter().map(|f| f.rank()).sum()
    }

    /// Cofactor rank `N = n - rank(A)`.
    pub fn cofactor_rank(&self) -> usize {
        self.ambient_rank - self.rank()
    }

    /// Whether some conjugate of `g` lies in one of the factors.
    pub fn carries(&self, g: &CyclicWord) -> bool {
        !g.is_empty() && self.factors.iter().any(|f| super::is_conjugate_into(g, f))
    }

    /// Every factor of `self` is conjugate into a factor of `other`.
    pub fn is_below(&self, other: &FreeFactorSystem) -> bool {
        self.factors.iter().all(|a| other.factors.iter().any(|d| a.is_conjugate_into(d)))
    }

    pub fn is_whole_group(&self) -> bool {
        self.factors.len() == 1 && self.rank() == self.ambient_rank
    }

    pub fn describe(&self, basis: &RelativeBasis) -> String {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|f| {
                let gens: Vec<String> = f.generators().iter().map(|w| basis.format_word(w)).collect();
                format!("[<{}>]", gens.join(", "))
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

pub fn ffs_partial_order(a: &FreeFactorSystem, d: &FreeFactorSystem) -> Result<FactorOrder> {
    if a.ambient_rank != d.ambient_rank {
        return Err(Error::RankMismatch(a.ambient_rank, d.ambient_rank));
    }
    Ok(match (a.is_below(d), d.is_below(a)) {
        (true, true) => FactorOrder::Equal,
        (true, false) => FactorOrder::Below,
        (false, true) => FactorOrder::Above,
        (false, false) => FactorOrder::Incomparable,
    })
}

/// `k + N`.
pub fn zeta(a: &FreeFactorSystem) -> usize {
    a.len() + a.cofactor_rank()
}

pub fn classify_ffs(a: &FreeFactorSystem) -> FfsClass {
    classify_counts(a.len(), a.cofactor_rank(), a.is_whole_group())
}

pub(crate) fn classify_counts(k: usize, n_cofactor: usize, whole: bool) -> FfsClass {
    if k == 0 || whole {
        return FfsClass::Trivial;
    }
    match (k, n_cofactor) {
        (2, 0) => FfsClass::EmptyComplex,
        (1, 1) => FfsClass::ZeroDimensionalHnn,
        (3, 0) => FfsClass::ZeroDimensionalTriple,
        _ => FfsClass::NonExceptional,
    }
}

/// Every system whose factors are spanned by disjoint sets of basis letters,
/// as letter blocks in order of first letter. Includes the empty system.
pub fn basis_aligned_systems(rank: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; rank];
    loop {
        // label 0 is the cofactor; block labels appear in increasing order
        let mut next = 1;
        let canonical = labels.iter().all(|&l| {
            if l == 0 || l < next {
                true
            } else if l == next {
                next += 1;
                true
            } else {
                false
            }
        });
        if canonical {
            let blocks = (1..next).map(|b| (0..rank).filter(|&g| labels[g] == b).collect()).collect();
            out.push(blocks);
        }
        let Some(i) = (0..rank).rev().find(|&i| labels[i] < rank) else {
            break;
        };
        labels[i] += 1;
        for l in &mut labels[i + 1..] {
            *l = 0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sys(n: usize, blocks: &[&[usize]]) -> FreeFactorSystem {
        let gens: Vec<Vec<Word>> = blocks.iter().map(|b| b.iter().map(|&g| Word::letter(g)).collect()).collect();
        FreeFactorSystem::from_generators(n, &gens).unwrap()
    }

    #[test]
    fn order_examples() {
        assert_eq!(ffs_partial_order(&sys(3, &[&[0]]), &sys(3, &[&[0, 1]])).unwrap(), FactorOrder::Below);
        let ab = sys(3, &[&[0], &[1]]);
        assert_eq!(ffs_partial_order(&ab, &ab).unwrap(), FactorOrder::Equal);
        assert_eq!(ffs_partial_order(&sys(3, &[&[0]]), &sys(3, &[&[1]])).unwrap(), FactorOrder::Incomparable);
        assert_eq!(ffs_partial_order(&sys(3, &[&[0, 1]]), &sys(3, &[&[0]])).unwrap(), FactorOrder::Above);
        assert!(ffs_partial_order(&sys(3, &[&[0]]), &sys(4, &[&[0]])).is_err());
    }

    #[test]
    fn conjugated_presentation_is_equal() {
        let b = RelativeBasis::from_names(&["a", "b", "c"], &[]).unwrap();
        let twisted = FreeFactorSystem::from_generators(3, &[vec![b.parse_word("c a c'").unwrap()]]).unwrap();
        assert_eq!(ffs_partial_order(&twisted, &sys(3, &[&[0]])).unwrap(), FactorOrder::Equal);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_ffs(&sys(2, &[&[0], &[1]])), FfsClass::EmptyComplex);
        assert_eq!(classify_ffs(&sys(3, &[&[0, 1]])), FfsClass::ZeroDimensionalHnn);
        assert_eq!(classify_ffs(&sys(3, &[&[0], &[1], &[2]])), FfsClass::ZeroDimensionalTriple);
        assert_eq!(classify_ffs(&sys(4, &[&[0, 1]])), FfsClass::NonExceptional);
        assert_eq!(classify_ffs(&FreeFactorSystem::empty(3)), FfsClass::Trivial);
        assert_eq!(classify_ffs(&sys(2, &[&[0, 1]])), FfsClass::Trivial);
    }

    #[test]
    fn basis_aligned_counts() {
        // a cofactor set plus a partition of the rest: Bell numbers B(n+1)
        let counts: Vec<usize> = (0..5).map(|n| basis_aligned_systems(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15, 52]);
    }

    #[test]
    fn zeta_examples() {
        assert_eq!(zeta(&sys(4, &[&[0, 1]])), 3);
        assert_eq!(zeta(&sys(6, &[&[0, 1], &[2, 3]])), 4);
        assert_eq!(zeta(&FreeFactorSystem::empty(2)), 2);
    }

    #[test]
    fn rejects_conjugate_factors() {
        assert!(FreeFactorSystem::from_generators(2, &[vec![Word::letter(0)], vec![Word::letter(0)]]).is_err());
    }

    fn arb_system(n: usize) -> impl Strategy<Value = FreeFactorSystem> {
        // each letter is assigned to a block label or left out
        proptest::collection::vec(0usize..4, n).prop_map(move |labels| {
            let blocks: Vec<Vec<usize>> = (1..4)
                .map(|b| (0..n).filter(|&g| labels[g] == b).collect::<Vec<_>>())
                .filter(|b| !b.is_empty())
                .collect();
            let refs: Vec<&[usize]> = blocks.iter().map(|b| b.as_slice()).collect();
            sys(n, &refs)
        })
    }

    proptest! {
        #[test]
        fn order_is_reflexive_and_transitive(a in arb_system(4), b in arb_system(4), c in arb_system(4)) {
            prop_assert_eq!(ffs_partial_order(&a, &a).unwrap(), FactorOrder::Equal);
            if a.is_below(&b) && b.is_below(&c) {
                prop_assert!(a.is_below(&c));
            }
            let ab = ffs_partial_order(&a, &b).unwrap();
            let ba = ffs_partial_order(&b, &a).unwrap();
            let flipped = match ab {
                FactorOrder::Below => FactorOrder::Above,
                FactorOrder::Above => FactorOrder::Below,
                o => o,
            };
            prop_assert_eq!(flipped, ba);
        }

        #[test]
        fn classification_depends_on_counts(a in arb_system(4), perm in Just([2usize, 0, 3, 1])) {
            // relabel generators: same (k, N), same class
            let relabeled: Vec<Vec<Word>> = a
                .factors()
                .iter()
                .map(|f| f.generators().iter().map(|w| Word::letter(perm[w.letters()[0].generator()])).collect())
                .collect();
            let b = FreeFactorSystem::from_generators(4, &relabeled).unwrap();
            prop_assert_eq!(classify_ffs(&a), classify_ffs(&b));
        }
    }
}
