use std::fmt;

use serde::Serialize;

use super::{Letter, ReducedWord};

/// A cyclically reduced word up to rotation, stored as its lexicographically
/// least rotation. Two elements are conjugate iff their cores are equal.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicWord {
    letters: Vec<Letter>,
}

impl CyclicWord {
    /// Canonicalizes a cyclically reduced letter sequence.
    pub(crate) fn from_cyclically_reduced(raw: &[Letter]) -> Self {
        let r = least_rotation(raw);
        let mut letters = Vec::with_capacity(raw.len());
        letters.extend_from_slice(&raw[r..]);
        letters.extend_from_slice(&raw[..r]);
        CyclicWord { letters }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// The canonical rotation as an ordinary word.
    pub fn as_word(&self) -> ReducedWord {
        ReducedWord::from_reduced_unchecked(self.letters.clone())
    }

    /// Letter at position `i` of the periodic word `core^∞`.
    #[inline]
    pub fn at(&self, i: usize) -> Letter {
        self.letters[i % self.letters.len()]
    }

    /// Window of length `len` starting at rotation `start`, wrapping around.
    pub fn window(&self, start: usize, len: usize) -> impl Iterator<Item = Letter> + '_ {
        (start..start + len).map(move |i| self.at(i))
    }
}

impl fmt::Display for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_word())
    }
}

impl fmt::Debug for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CyclicWord({self})")
    }
}

impl Serialize for CyclicWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `w = conjugator · core · conjugator⁻¹`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicReduction {
    pub core: CyclicWord,
    pub conjugator: ReducedWord,
}

impl CyclicReduction {
    /// Reassembles the original element.
    pub fn recompose(&self) -> ReducedWord {
        let mut w = self.conjugator.clone();
        w.mul_assign_word(&self.core.as_word());
        w.mul_assign_word(&self.conjugator.inverse());
        w
    }
}

/// Start index of the lexicographically least rotation (two-pointer scan,
/// linear time).
pub fn least_rotation<T: Ord>(s: &[T]) -> usize {
    let n = s.len();
    let (mut i, mut j, mut k) = (0usize, 1usize, 0usize);
    while i < n && j < n && k < n {
        let a = &s[(i + k) % n];
        let b = &s[(j + k) % n];
        if a == b {
            k += 1;
            continue;
        }
        if a > b {
            i += k + 1;
        } else {
            j += k + 1;
        }
        if i == j {
            j += 1;
        }
        k = 0;
    }
    i.min(j).min(n.saturating_sub(1))
}

/// `(lo, hi)` such that `w[lo..hi]` is cyclically reduced and
/// `w = w[..lo] · w[lo..hi] · w[..lo]⁻¹`.
pub(crate) fn strip_bounds(letters: &[Letter]) -> (usize, usize) {
    let (mut lo, mut hi) = (0, letters.len());
    while hi - lo >= 2 && letters[lo] == letters[hi - 1].inverse() {
        lo += 1;
        hi -= 1;
    }
    (lo, hi)
}

/// Strips matching end letters and rotates the remaining core to its canonical
/// form, adjusting the conjugator so the decomposition still recomposes to `w`.
pub fn cyclic_reduce(w: &ReducedWord) -> CyclicReduction {
    let letters = w.letters();
    let (lo, hi) = strip_bounds(letters);
    let raw = &letters[lo..hi];
    let r = least_rotation(raw);
    let mut canonical = Vec::with_capacity(raw.len());
    canonical.extend_from_slice(&raw[r..]);
    canonical.extend_from_slice(&raw[..r]);
    let conjugator = ReducedWord::from_letters(letters[..lo].iter().chain(&raw[..r]).copied());
    CyclicReduction {
        core: CyclicWord { letters: canonical },
        conjugator,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::tests::arb_word;
    use crate::word::word;
    use proptest::prelude::*;

    fn brute_least_rotation<T: Ord + Clone>(s: &[T]) -> Vec<T> {
        (0..s.len().max(1))
            .map(|r| s[r.min(s.len())..].iter().chain(&s[..r.min(s.len())]).cloned().collect::<Vec<_>>())
            .min()
            .unwrap_or_default()
    }

    #[test]
    fn strips_matching_ends() {
        let red = cyclic_reduce(&word("abaBA"));
        assert_eq!(red.core.to_string(), "a");
        assert_eq!(red.conjugator, word("ab"));
    }

    #[test]
    fn already_cyclically_reduced() {
        let red = cyclic_reduce(&word("abab"));
        assert_eq!(red.core.to_string(), "abab");
        assert!(red.conjugator.is_identity());
        let red = cyclic_reduce(&ReducedWord::identity());
        assert!(red.core.is_empty());
        assert!(red.conjugator.is_identity());
    }

    #[test]
    fn canonical_rotation_is_least() {
        let red = cyclic_reduce(&word("bab"));
        assert_eq!(red.core.to_string(), "abb");
        assert_eq!(red.conjugator, word("b"));
        assert_eq!(red.recompose(), word("bab"));
    }

    proptest! {
        #[test]
        fn least_rotation_matches_brute_force(s in prop::collection::vec(0u8..3, 0..14)) {
            let r = least_rotation(&s);
            let rotated: Vec<u8> = s[r.min(s.len())..].iter().chain(&s[..r.min(s.len())]).cloned().collect();
            prop_assert_eq!(rotated, brute_least_rotation(&s));
        }

        #[test]
        fn recomposes_and_is_cyclically_reduced(w in arb_word(3, 24)) {
            let red = cyclic_reduce(&w);
            prop_assert_eq!(red.recompose(), w);
            let core = red.core.letters();
            if core.len() >= 2 {
                prop_assert_ne!(core[0], core[core.len() - 1].inverse());
            }
        }

        #[test]
        fn conjugates_share_a_core(w in arb_word(3, 16), h in arb_word(3, 10)) {
            let conj = &(&h * &w) * &h.inverse();
            prop_assert_eq!(cyclic_reduce(&conj).core, cyclic_reduce(&w).core);
        }
    }
}
