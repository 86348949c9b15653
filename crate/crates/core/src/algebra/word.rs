use std::cmp::Ordering;
use std::fmt;

use super::AlgebraError;

/// A multi-index `(i_1, ..., i_k)` over the alphabet `{1, ..., n}`.
///
/// Letters are 1-based. Words order by length first and then
/// lexicographically, which is also the basis order used on Fock space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    n: usize,
    letters: Vec<usize>,
}

impl Word {
    pub fn new(n: usize, letters: Vec<usize>) -> Result<Self, AlgebraError> {
        if n == 0 {
            return Err(AlgebraError::EmptyAlphabet);
        }
        if let Some(&bad) = letters.iter().find(|&&l| l == 0 || l > n) {
            return Err(AlgebraError::LetterOutOfRange { letter: bad, n });
        }
        Ok(Self { n, letters })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, letters: Vec::new() }
    }

    /// The single-letter word `(i)`.
    pub fn letter(n: usize, i: usize) -> Result<Self, AlgebraError> {
        Self::new(n, vec![i])
    }

    pub fn alphabet(&self) -> usize {
        self.n
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Result<Word, AlgebraError> {
        self.check_alphabet(other)?;
        let mut letters = Vec::with_capacity(self.len() + other.len());
        letters.extend_from_slice(&self.letters);
        letters.extend_from_slice(&other.letters);
        Ok(Word { n: self.n, letters })
    }

    /// If `self = prefix ⧺ rest`, returns `rest`.
    pub fn strip_prefix(&self, prefix: &Word) -> Option<Word> {
        self.letters
            .strip_prefix(prefix.letters.as_slice())
            .map(|rest| Word { n: self.n, letters: rest.to_vec() })
    }

    /// Position of this word among the `n^k` words of its length, in
    /// lexicographic order (first letter most significant).
    pub fn level_index(&self) -> usize {
        self.letters.iter().fold(0, |acc, &l| acc * self.n + (l - 1))
    }

    /// Inverse of [`Word::level_index`].
    pub fn from_level_index(n: usize, len: usize, mut index: usize) -> Word {
        let mut letters = vec![0; len];
        for slot in letters.iter_mut().rev() {
            *slot = index % n + 1;
            index /= n;
        }
        Word { n, letters }
    }

    pub(crate) fn check_alphabet(&self, other: &Word) -> Result<(), AlgebraError> {
        if self.n != other.n {
            Err(AlgebraError::AlphabetMismatch { left: self.n, right: other.n })
        } else {
            Ok(())
        }
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.letters.cmp(&other.letters))
            .then_with(|| self.n.cmp(&other.n))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "∅");
        }
        write!(f, "(")?;
        for (k, l) in self.letters.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}
