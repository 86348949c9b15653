//! Symbolic calculus of the Toeplitz–Cuntz algebra: words, reduced monomials
//! `c · v_μ v_ν*`, their finite linear spans, the gauge action and the
//! conditional expectation onto the gauge-fixed subalgebra.

mod element;
mod parse;
mod word;

use thiserror::Error;

pub use element::{AlgebraElement, Monomial, PRUNE_TOLERANCE, UNIMODULAR_TOLERANCE};
pub use parse::parse_expression;
pub use word::Word;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("alphabet sizes differ: {left} vs {right}")]
    AlphabetMismatch { left: usize, right: usize },

    #[error("letter {letter} is outside 1..={n}")]
    LetterOutOfRange { letter: usize, n: usize },

    #[error("alphabet must have at least one letter")]
    EmptyAlphabet,

    #[error("gauge parameter must be unimodular, got |λ| = {modulus}")]
    NotUnimodular { modulus: f64 },

    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
}
