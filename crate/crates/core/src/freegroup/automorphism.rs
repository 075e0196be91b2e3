use serde::{Deserialize, Serialize};

use super::fold::fold_petals;
use super::{core_graph, cyclic_reduce, CyclicWord, Letter, RelativeBasis, Word};
use crate::error::{Error, Result};

/// An automorphism of `F_n` given by the images of the basis letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Automorphism {
    images: Vec<Word>,
}

impl Automorphism {
    /// Checks bijectivity: the images must generate `F_n` (Stallings folding
    /// to the rose); free groups are Hopfian so surjectivity suffices.
    pub fn new(images: Vec<Word>) -> Result<Self> {
        let n = images.len();
        if n == 0 {
            return Err(Error::InvalidMap("no generators".into()));
        }
        if images.iter().flat_map(|w| w.letters()).any(|l| l.generator() >= n) {
            return Err(Error::InvalidMap("image uses a letter outside the basis".into()));
        }
        let g = core_graph(&images);
        let onto = g.vertex_count() == 1 && g.edges().len() == n;
        if !onto {
            return Err(Error::InvalidMap("images do not generate the free group".into()));
        }
        Ok(Automorphism { images })
    }

    pub fn identity(rank: usize) -> Self {
        Automorphism { images: (0..rank).map(Word::letter).collect() }
    }

    /// The Nielsen move `x_target -> x_target * by` (or `by * x_target`).
    pub fn transvection(rank: usize, target: usize, by: Letter, right: bool) -> Result<Self> {
        if by.generator() == target || target >= rank || by.generator() >= rank {
            return Err(Error::InvalidArgument("transvection needs two distinct letters".into()));
        }
        let mut images: Vec<Word> = (0..rank).map(Word::letter).collect();
        let b = Word::reduce([by]);
        images[target] = if right { images[target].concat(&b) } else { b.concat(&images[target]) };
        Ok(Automorphism { images })
    }

    /// `x_target -> x_target^{-1}`.
    pub fn inversion(rank: usize, target: usize) -> Self {
        let mut images: Vec<Word> = (0..rank).map(Word::letter).collect();
        images[target] = images[target].inverse();
        Automorphism { images }
    }

    pub fn rank(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn image(&self, generator: usize) -> &Word {
        &self.images[generator]
    }

    pub fn apply_letter(&self, l: Letter) -> Word {
        let w = &self.images[l.generator()];
        if l.is_inverse() {
            w.inverse()
        } else {
            w.clone()
        }
    }

    pub fn apply(&self, w: &Word) -> Word {
        Word::reduce(w.letters().iter().flat_map(|&l| self.apply_letter(l).into_letters()))
    }

    pub fn apply_cyclic(&self, c: &CyclicWord) -> CyclicWord {
        cyclic_reduce(&self.apply(&c.to_word())).0
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &Automorphism) -> Automorphism {
        Automorphism { images: other.images.iter().map(|w| self.apply(w)).collect() }
    }

    pub fn pow(&self, k: usize) -> Automorphism {
        let mut out = Automorphism::identity(self.rank());
        for _ in 0..k {
            out = self.compose(&out);
        }
        out
    }

    /// Inverse by weighted folding of the image bouquet.
    pub fn inverse(&self) -> Result<Automorphism> {
        let petals: Vec<(Vec<usize>, Word)> = self
            .images
            .iter()
            .enumerate()
            .map(|(i, w)| (w.letters().iter().map(|l| l.index()).collect(), Word::letter(i)))
            .collect();
        let folded = fold_petals(&petals)?;
        let n = self.rank();
        if folded.vertex_count != 1 || folded.edges.len() != n {
            return Err(Error::InvalidMap("not invertible".into()));
        }
        let mut images = vec![Word::identity(); n];
        for (_, label, _, w) in folded.edges {
            images[label / 2] = w;
        }
        Ok(Automorphism { images })
    }

    /// Whether the images of each peripheral block generate a conjugate of the block.
    pub fn check_relative(&self, basis: &RelativeBasis) -> Result<()> {
        if basis.rank() != self.rank() {
            return Err(Error::RankMismatch(basis.rank(), self.rank()));
        }
        for block in basis.blocks() {
            let gens: Vec<Word> = block.iter().map(|&g| Word::letter(g)).collect();
            let imgs: Vec<Word> = block.iter().map(|&g| self.images[g].clone()).collect();
            if !core_graph(&gens).is_conjugate_to(&core_graph(&imgs)) {
                let names: Vec<&str> = block.iter().map(|&g| basis.name(g)).collect();
                return Err(Error::NotRelative(format!("<{}>", names.join(","))));
            }
        }
        Ok(())
    }

    pub fn format(&self, basis: &RelativeBasis) -> String {
        (0..self.rank())
            .map(|g| format!("{}->{}", basis.name(g), basis.format_word(&self.images[g])))
            .collect::<Vec<_>>()
            .join(" ; ")
    }
}
