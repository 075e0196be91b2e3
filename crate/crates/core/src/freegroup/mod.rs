//! Words over a relative basis, Stallings core graphs and free factor systems.

mod automorphism;
mod cyclic;
mod ffs;
mod fold;
mod stallings;

pub use automorphism::Automorphism;
pub use cyclic::{cyclic_reduce, CyclicWord};
pub use ffs::{basis_aligned_systems, classify_ffs, ffs_partial_order, zeta, FactorOrder, FfsClass, FreeFactorSystem};
pub use stallings::{core_graph, is_conjugate_into, CoreGraph};
pub(crate) use fold::fold_petals;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A signed basis symbol. The encoding `2 * generator + inverse` makes the
/// derived order interleave `a < a' < b < b' < ...` in declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Letter(u32);

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        Letter((generator as u32) << 1 | inverse as u32)
    }

    pub fn generator(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn inverse(self) -> Self {
        Letter(self.0 ^ 1)
    }

    /// Index into a `2 * rank` sized table.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(index: usize) -> Self {
        Letter(index as u32)
    }
}

/// A freely reduced word.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    /// Freely reduces an arbitrary letter sequence.
    pub fn reduce<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn letter(generator: usize) -> Self {
        Word(vec![Letter::new(generator, false)])
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

    pub fn inverse(&self) -> Self {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn concat(&self, other: &Word) -> Self {
        Word::reduce(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn pow(&self, n: usize) -> Self {
        let mut out = Word::identity();
        for _ in 0..n {
            out = out.concat(self);
        }
        out
    }

    pub fn conjugate_by(&self, g: &Word) -> Self {
        g.concat(self).concat(&g.inverse())
    }

    /// Generators appearing in the word.
    pub fn support(&self) -> Vec<usize> {
        let mut gens: Vec<usize> = self.0.iter().map(|l| l.generator()).collect();
        gens.sort_unstable();
        gens.dedup();
        gens
    }

    pub(crate) fn from_reduced(letters: Vec<Letter>) -> Self {
        debug_assert!(letters.windows(2).all(|w| w[0] != w[1].inverse()));
        Word(letters)
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }
}

/// A basis of `F` in which every peripheral factor is spanned by a block of letters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelativeBasis {
    names: Vec<String>,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<Option<usize>>,
}

impl RelativeBasis {
    pub fn new<S: AsRef<str>>(names: &[S], blocks: Vec<Vec<usize>>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidBasis("at least one letter is required".into()));
        }
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n.contains('\'') || n.chars().any(char::is_whitespace) {
                return Err(Error::InvalidBasis(format!("bad symbol name `{n}`")));
            }
            if names[..i].contains(n) {
                return Err(Error::InvalidBasis(format!("duplicate symbol `{n}`")));
            }
        }
        let mut block_of = vec![None; names.len()];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidBasis("empty peripheral block".into()));
            }
            for &g in block {
                if g >= names.len() {
                    return Err(Error::InvalidBasis(format!("letter index {g} out of range")));
                }
                if block_of[g].is_some() {
                    return Err(Error::InvalidBasis(format!(
                        "letter `{}` lies in two blocks",
                        names[g]
                    )));
                }
                block_of[g] = Some(b);
            }
        }
        let mut blocks = blocks;
        for b in &mut blocks {
            b.sort_unstable();
        }
        Ok(RelativeBasis { names, blocks, block_of })
    }

    /// Builds a basis from symbol names with blocks given by names.
    pub fn from_names<S: AsRef<str>>(names: &[S], blocks: &[Vec<&str>]) -> Result<Self> {
        let lookup = |s: &str| {
            names
                .iter()
                .position(|n| n.as_ref() == s)
                .ok_or_else(|| Error::UnknownSymbol(s.to_string()))
        };
        let blocks = blocks
            .iter()
            .map(|b| b.iter().map(|s| lookup(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        RelativeBasis::new(names, blocks)
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, generator: usize) -> &str {
        &self.names[generator]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, generator: usize) -> Option<usize> {
        self.block_of[generator]
    }

    pub fn cofactor_letters(&self) -> Vec<usize> {
        (0..self.rank()).filter(|&g| self.block_of[g].is_none()).collect()
    }

    pub fn with_blocks(&self, blocks: Vec<Vec<usize>>) -> Result<Self> {
        RelativeBasis::new(&self.names, blocks)
    }

    pub fn generator(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn format_letter(&self, l: Letter) -> String {
        if l.is_inverse() {
            format!("{}'", self.names[l.generator()])
        } else {
            self.names[l.generator()].clone()
        }
    }

    /// External word syntax: whitespace separated symbols, `'` marks inverses.
    pub fn format_word(&self, w: &Word) -> String {
        w.letters()
            .iter()
            .map(|&l| self.format_letter(l))
            .collect::<Vec<_>>()
            .join(" ")
    }


    pub fn format_letters(&self, letters: &[Letter]) -> String {
        letters.iter().map(|&l| self.format_letter(l)).collect::<Vec<_>>().join(" ")
    }

    pub fn parse_letters(&self, text: &str) -> Result<Vec<Letter>> {
        let mut out = Vec::new();
        for token in text.split_whitespace() {
            if token == "1" {
                continue;
            }
            let (base, inv) = match token.strip_suffix('\'') {
                Some(b) => (b, true),
                None => (token, false),
            };
            if let Some(g) = self.generator(base) {
                out.push(Letter::new(g, inv));
                continue;
            }
            // compact form such as `abaab` or `cd'`, allowed when every
            // symbol involved is a single character
            let chars: Vec<char> = token.chars().collect();
            let mut i = 0;
            let mut compact = Vec::new();
            while i < chars.len() {
                let g = self
                    .generator(&chars[i].to_string())
                    .ok_or_else(|| Error::UnknownSymbol(token.to_string()))?;
                let inv = chars.get(i + 1) == Some(&'\'');
                compact.push(Letter::new(g, inv));
                i += if inv { 2 } else { 1 };
            }
            out.extend(compact);
        }
        Ok(out)
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        Ok(Word::reduce(self.parse_letters(text)?))
    }

    pub fn all_letters(&self) -> impl Iterator<Item = Letter> {
        (0..2 * self.rank()).map(Letter::from_index)
    }
}

/// `reduce` on a raw letter sequence.
pub fn reduce(letters: &[Letter]) -> Word {
    Word::reduce(letters.iter().copied())
}

/// A word lies in `F \ A` when its letters are not all drawn from one
/// peripheral block.
pub fn is_nonperipheral(letters: &[Letter], basis: &RelativeBasis) -> bool {
    let mut it = letters.iter();
    let Some(first) = it.next() else {
        return false;
    };
    match basis.block_of(first.generator()) {
        None => true,
        Some(b) => it.any(|l| basis.block_of(l.generator()) != Some(b)),
    }
}

pub struct DisplayWord<'a>(pub &'a RelativeBasis, pub &'a Word);

impl fmt::Display for DisplayWord<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.format_word(self.1))
    }
}
