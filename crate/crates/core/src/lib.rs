//! States on the Toeplitz–Cuntz algebra `E_n` through their density matrices
//! on truncated full Fock space.
//!
//! * [`algebra`]: words, reduced monomials and the symbolic `*`-algebra.
//! * [`fock`]: the truncated Fock space, creation operators, `β`, `δ`, `λ`.
//! * [`density`]: block operator matrices, the slice map, positivity and
//!   decreasing certificates, classification and decomposition of states.
//! * [`product_states`]: unit-vector sequences, product states and their
//!   gauge-invariant extensions.
//! * [`measures`]: probability measures on the circle and moment problems.
//! * [`formats`]: JSON and CSV wire formats.

pub mod algebra;
pub mod density;
pub mod fock;
pub mod formats;
pub mod linalg;
pub mod measures;
pub mod product_states;

pub use algebra::{parse_expression, AlgebraElement, AlgebraError, Monomial, Word};
pub use density::{Block, BlockOperatorMatrix, DensityError, StateHandle, Tolerances};
pub use fock::{FockContext, FockError, FockOperator};
pub use measures::{Atom, CircleMeasure, MeasureError};
pub use product_states::{PhasedSequence, SequenceError, UnitVectorSequence};

pub use num_complex::Complex64 as C64;
