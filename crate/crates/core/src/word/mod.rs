//! Free groups of rank `k` acting on their Cayley trees.
//!
//! Letters are generators `a..z` and their inverses `A..Z`. Words are kept
//! freely reduced at all times; the word length of `g` is the tree distance
//! from the identity vertex to `g`.

mod cyclic;
mod tree;

pub use cyclic::{cyclic_reduce, least_rotation, CyclicReduction, CyclicWord};
pub use tree::{
    axis_tree, distance_to_ray, translation_length_tree, tree_distance, TreeAxis,
    TreeBoundaryPrefix,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported rank; the textual alphabet has 26 letters.
pub const MAX_RANK: usize = 26;

/// A generator or inverse generator, packed as `2 * index + inverted`.
///
/// The derived ordering is generator index first, then `+1 < -1`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(u8);

impl Letter {
    pub fn new(generator_index: usize, inverted: bool) -> Self {
        assert!(generator_index < MAX_RANK, "generator index out of range");
        Letter((generator_index as u8) << 1 | inverted as u8)
    }

    pub fn generator(index: usize) -> Self {
        Self::new(index, false)
    }

    pub fn generator_index(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    /// `+1` or `-1`.
    pub fn sign(self) -> i8 {
        if self.is_inverse() {
            -1
        } else {
            1
        }
    }

    #[inline]
    pub fn inverse(self) -> Self {
        Letter(self.0 ^ 1)
    }

    /// Dense index in `0..2k`, same order as `Ord`.
    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn from_code(code: usize) -> Self {
        assert!(code < 2 * MAX_RANK);
        Letter(code as u8)
    }

    /// All `2k` letters of a rank-`k` alphabet in canonical order.
    pub fn alphabet(rank: usize) -> impl Iterator<Item = Letter> {
        (0..2 * rank).map(Letter::from_code)
    }

    pub fn to_char(self) -> char {
        let base = if self.is_inverse() { b'A' } else { b'a' };
        (base + self.generator_index() as u8) as char
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'a'..='z' => Ok(Letter::new(c as usize - 'a' as usize, false)),
            'A'..='Z' => Ok(Letter::new(c as usize - 'A' as usize, true)),
            _ => Err(Error::InvalidLetter(c)),
        }
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

impl Serialize for Letter {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_char(self.to_char())
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// A freely reduced word: no letter is adjacent to its inverse.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedWord {
    letters: Vec<Letter>,
}

impl ReducedWord {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn letter(x: Letter) -> Self {
        ReducedWord { letters: vec![x] }
    }

    /// Reduces an arbitrary letter sequence.
    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut w = Self::identity();
        for x in letters {
            w.push(x);
        }
        w
    }

    /// Wraps letters that are already known to be reduced.
    pub(crate) fn from_reduced_unchecked(letters: Vec<Letter>) -> Self {
        debug_assert!(letters.windows(2).all(|p| p[1] != p[0].inverse()));
        ReducedWord { letters }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn first(&self) -> Option<Letter> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.letters.last().copied()
    }

    /// Highest generator index used plus one.
    pub fn min_rank(&self) -> usize {
        self.letters
            .iter()
            .map(|x| x.generator_index() + 1)
            .max()
            .unwrap_or(0)
    }

    /// Right-multiplies by one letter, cancelling if needed. Amortized O(1).
    #[inline]
    pub fn push(&mut self, x: Letter) {
        if self.letters.last() == Some(&x.inverse()) {
            self.letters.pop();
        } else {
            self.letters.push(x);
        }
    }

    /// In-place right multiplication.
    pub fn mul_assign_word(&mut self, v: &ReducedWord) {
        let mut i = 0;
        while i < v.letters.len() && self.letters.last() == Some(&v.letters[i].inverse()) {
            self.letters.pop();
            i += 1;
        }
        self.letters.extend_from_slice(&v.letters[i..]);
    }

    /// Reduced form of the concatenation `self · v`.
    pub fn multiply_reduce(&self, v: &ReducedWord) -> ReducedWord {
        let mut w = self.clone();
        w.mul_assign_word(v);
        w
    }

    pub fn inverse(&self) -> ReducedWord {
        ReducedWord {
            letters: self.letters.iter().rev().map(|x| x.inverse()).collect(),
        }
    }

    pub fn pow(&self, exponent: i64) -> ReducedWord {
        let base = if exponent < 0 {
            self.inverse()
        } else {
            self.clone()
        };
        let mut w = ReducedWord::identity();
        for _ in 0..exponent.unsigned_abs() {
            w.mul_assign_word(&base);
        }
        w
    }

    /// Length of the longest common prefix.
    pub fn common_prefix_len(&self, other: &[Letter]) -> usize {
        common_prefix_len(&self.letters, other)
    }

    pub fn prefix(&self, len: usize) -> ReducedWord {
        ReducedWord {
            letters: self.letters[..len.min(self.len())].to_vec(),
        }
    }

    /// Checks every letter is valid in rank `k`.
    pub fn check_rank(&self, rank: usize) -> Result<()> {
        match self.letters.iter().find(|x| x.generator_index() >= rank) {
            Some(x) => Err(Error::RankExceeded {
                index: x.generator_index(),
                rank,
            }),
            None => Ok(()),
        }
    }
}

pub(crate) fn common_prefix_len(a: &[Letter], b: &[Letter]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

impl std::ops::Mul for &ReducedWord {
    type Output = ReducedWord;
    fn mul(self, rhs: &ReducedWord) -> ReducedWord {
        self.multiply_reduce(rhs)
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for x in &self.letters {
            write!(f, "{}", x.to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ReducedWord({self})")
    }
}

impl FromStr for ReducedWord {
    type Err = Error;

    /// Parses `abA`-style literals; `1` (or the empty string) is the identity.
    /// Unreduced input is reduced.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1" || s.is_empty() {
            return Ok(Self::identity());
        }
        let letters = s.chars().map(Letter::from_char).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_letters(letters))
    }
}

impl Serialize for ReducedWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ReducedWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Every reduced word of length `len` in `F_rank`, in lexicographic order of
/// letter codes.
pub fn reduced_words(rank: usize, len: usize) -> Vec<ReducedWord> {
    let mut out = vec![ReducedWord::identity()];
    for _ in 0..len {
        out = out
            .iter()
            .flat_map(|w| {
                Letter::alphabet(rank)
                    .filter(move |&x| w.last() != Some(x.inverse()))
                    .map(move |x| {
                        let mut v = w.clone();
                        v.push(x);
                        v
                    })
            })
            .collect();
    }
    out
}

/// Shorthand used heavily in tests: panics on malformed literals.
pub fn word(s: &str) -> ReducedWord {
    s.parse().expect("malformed word literal")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduced_word_counts() {
        assert_eq!(reduced_words(2, 0).len(), 1);
        assert_eq!(reduced_words(2, 3).len(), 4 * 3 * 3);
        assert_eq!(reduced_words(3, 2).len(), 6 * 5);
        assert!(reduced_words(2, 3).windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn letter_inverse_flips_sign_only() {
        for x in Letter::alphabet(26) {
            assert_eq!(x.inverse().inverse(), x);
            assert_eq!(x.inverse().generator_index(), x.generator_index());
            assert_eq!(x.inverse().sign(), -x.sign());
        }
    }

    #[test]
    fn letter_order_is_index_then_sign() {
        let a = Letter::generator(0);
        let b = Letter::generator(1);
        assert!(a < a.inverse());
        assert!(a.inverse() < b);
    }

    #[test]
    fn multiply_reduce_examples() {
        assert_eq!(word("ab").multiply_reduce(&word("Ba")), word("aa"));
        assert_eq!(word("a").multiply_reduce(&word("A")), ReducedWord::identity());
        assert_eq!(word("ab").multiply_reduce(&word("cd")), word("abcd"));
    }

    #[test]
    fn text_format() {
        assert_eq!(word("abA").to_string(), "abA");
        assert_eq!(ReducedWord::identity().to_string(), "1");
        assert_eq!(word("aAb"), word("b"));
        assert!("ab3".parse::<ReducedWord>().is_err());
        assert_eq!(word("abc").min_rank(), 3);
        assert!(word("abc").check_rank(2).is_err());
    }

    #[test]
    fn pow_and_inverse() {
        assert_eq!(word("ab").pow(3), word("ababab"));
        assert_eq!(word("ab").pow(-2), word("BABA"));
        assert_eq!(word("ab").pow(0), ReducedWord::identity());
        assert_eq!(word("abC").inverse(), word("cBA"));
    }

    pub(crate) fn arb_word(rank: usize, max_len: usize) -> impl Strategy<Value = ReducedWord> {
        prop::collection::vec(0..2 * rank, 0..max_len)
            .prop_map(|codes| ReducedWord::from_letters(codes.into_iter().map(Letter::from_code)))
    }

    proptest! {
        #[test]
        fn multiplication_is_associative(u in arb_word(3, 12), v in arb_word(3, 12), w in arb_word(3, 12)) {
            prop_assert_eq!(&(&u * &v) * &w, &u * &(&v * &w));
        }

        #[test]
        fn inverse_cancels(u in arb_word(3, 20)) {
            prop_assert!((&u * &u.inverse()).is_identity());
            prop_assert!((&u.inverse() * &u).is_identity());
        }

        #[test]
        fn display_parse_roundtrip(u in arb_word(26, 30)) {
            prop_assert_eq!(u.to_string().parse::<ReducedWord>().unwrap(), u);
        }
    }
}
