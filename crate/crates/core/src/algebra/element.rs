use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use super::{AlgebraError, Word};

/// Coefficients smaller than this in magnitude are dropped.
pub const PRUNE_TOLERANCE: f64 = 1e-14;

/// Tolerance on `|λ| = 1` for the gauge action.
pub const UNIMODULAR_TOLERANCE: f64 = 1e-12;

/// `coeff · v_left v_right*`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: C64,
    pub left: Word,
    pub right: Word,
}

impl Monomial {
    pub fn new(coeff: C64, left: Word, right: Word) -> Result<Self, AlgebraError> {
        left.check_alphabet(&right)?;
        Ok(Self { coeff, left, right })
    }

    /// `max(|μ|, |ν|)`.
    pub fn degree(&self) -> usize {
        self.left.len().max(self.right.len())
    }

    pub fn adjoint(&self) -> Monomial {
        Monomial { coeff: self.coeff.conj(), left: self.right.clone(), right: self.left.clone() }
    }

    /// Product in the Toeplitz–Cuntz algebra, reduced with `v_j* v_i = δ_ij`.
    /// `None` is the zero element.
    pub fn mul(&self, other: &Monomial) -> Result<Option<Monomial>, AlgebraError> {
        self.left.check_alphabet(&other.left)?;
        let coeff = self.coeff * other.coeff;
        // (v_μ v_ν*)(v_α v_β*)
        if let Some(rest) = other.left.strip_prefix(&self.right) {
            return Ok(Some(Monomial {
                coeff,
                left: self.left.concat(&rest)?,
                right: other.right.clone(),
            }));
        }
        if let Some(rest) = self.right.strip_prefix(&other.left) {
            return Ok(Some(Monomial {
                coeff,
                left: self.left.clone(),
                right: other.right.concat(&rest)?,
            }));
        }
        Ok(None)
    }
}

/// A finite linear combination of reduced monomials `v_μ v_ν*`.
///
/// Always stored in normal form: one coefficient per `(μ, ν)` pair and no
/// coefficient below [`PRUNE_TOLERANCE`].
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    n: usize,
    terms: BTreeMap<(Word, Word), C64>,
}

impl AlgebraElement {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn one(n: usize) -> Self {
        Self::from_monomial(Monomial { coeff: C64::new(1.0, 0.0), left: Word::empty(n), right: Word::empty(n) })
    }

    /// The generator `v_i`.
    pub fn generator(n: usize, i: usize) -> Result<Self, AlgebraError> {
        Ok(Self::from_monomial(Monomial {
            coeff: C64::new(1.0, 0.0),
            left: Word::letter(n, i)?,
            right: Word::empty(n),
        }))
    }

    /// `v_μ v_ν*` with unit coefficient.
    pub fn basic(left: Word, right: Word) -> Result<Self, AlgebraError> {
        Ok(Self::from_monomial(Monomial::new(C64::new(1.0, 0.0), left, right)?))
    }

    pub fn from_monomial(m: Monomial) -> Self {
        let mut out = Self::zero(m.left.alphabet());
        out.accumulate(m.left, m.right, m.coeff);
        out
    }

    pub fn alphabet(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms
            .iter()
            .map(|((l, r), &c)| Monomial { coeff: c, left: l.clone(), right: r.clone() })
    }

    pub fn coefficient(&self, left: &Word, right: &Word) -> C64 {
        self.terms.get(&(left.clone(), right.clone())).copied().unwrap_or_default()
    }

    /// Largest `max(|μ|, |ν|)` over the terms; 0 for the zero element.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|(l, r)| l.len().max(r.len())).max().unwrap_or(0)
    }

    fn accumulate(&mut self, left: Word, right: Word, coeff: C64) {
        let key = (left, right);
        let entry = self.terms.entry(key.clone()).or_default();
        *entry += coeff;
        if entry.norm() < PRUNE_TOLERANCE {
            self.terms.remove(&key);
        }
    }

    fn check_alphabet(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.n != other.n {
            Err(AlgebraError::AlphabetMismatch { left: self.n, right: other.n })
        } else {
            Ok(())
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_alphabet(other)?;
        let mut out = self.clone();
        for ((l, r), &c) in &other.terms {
            out.accumulate(l.clone(), r.clone(), c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.checked_add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_alphabet(other)?;
        let mut out = Self::zero(self.n);
        for x in self.terms() {
            for y in other.terms() {
                if let Some(m) = x.mul(&y)? {
                    out.accumulate(m.left, m.right, m.coeff);
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero(self.n);
        for ((l, r), &v) in &self.terms {
            out.accumulate(l.clone(), r.clone(), v * c);
        }
        out
    }

    /// `(c v_μ v_ν*)* = c̄ v_ν v_μ*`, extended antilinearly.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.n);
        for ((l, r), &c) in &self.terms {
            out.accumulate(r.clone(), l.clone(), c.conj());
        }
        out
    }

    /// The gauge automorphism `γ_λ(v_i) = λ v_i`.
    pub fn gauge(&self, lambda: C64) -> Result<Self, AlgebraError> {
        if (lambda.norm() - 1.0).abs() > UNIMODULAR_TOLERANCE {
            return Err(AlgebraError::NotUnimodular { modulus: lambda.norm() });
        }
        let mut out = Self::zero(self.n);
        for ((l, r), &c) in &self.terms {
            let shift = l.len() as i32 - r.len() as i32;
            out.accumulate(l.clone(), r.clone(), c * lambda.powi(shift));
        }
        Ok(out)
    }

    /// The conditional expectation onto the gauge-fixed subalgebra: keeps the
    /// terms with `|μ| = |ν|`.
    pub fn conditional_expectation(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|((l, r), _)| l.len() == r.len())
            .map(|(k, &c)| (k.clone(), c))
            .collect();
        Self { n: self.n, terms }
    }

    /// Largest coefficient difference against `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, &c) in &self.terms {
            let d = c - other.terms.get(k).copied().unwrap_or_default();
            worst = worst.max(d.norm());
        }
        for (k, &c) in &other.terms {
            if !self.terms.contains_key(k) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }
}

impl From<Monomial> for AlgebraElement {
    fn from(m: Monomial) -> Self {
        Self::from_monomial(m)
    }
}

// Operator sugar panics on mismatched alphabets; use the `checked_*` forms
// when the alphabets are not known to agree.

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: Self) -> AlgebraElement {
        self.checked_add(rhs).expect("alphabet mismatch")
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: Self) -> AlgebraElement {
        self.checked_sub(rhs).expect("alphabet mismatch")
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: Self) -> AlgebraElement {
        self.checked_mul(rhs).expect("alphabet mismatch")
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale(C64::new(-1.0, 0.0))
    }
}

fn fmt_word_factor(f: &mut fmt::Formatter<'_>, w: &Word, star: bool) -> fmt::Result {
    let s = if star { "*" } else { "" };
    match w.letters() {
        [] => Ok(()),
        [l] => write!(f, "v{l}{s}"),
        ls => {
            let body: Vec<String> = ls.iter().map(|l| l.to_string()).collect();
            write!(f, "v[{}]{s}", body.join(","))
        }
    }
}

/// Renders in the expression grammar accepted by [`super::parse_expression`].
impl fmt::Display for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, ((l, r), c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)", c.re, c.im)?;
            if l.is_empty() && r.is_empty() {
                write!(f, " 1")?;
            }
            if !l.is_empty() {
                write!(f, " ")?;
                fmt_word_factor(f, l, false)?;
            }
            if !r.is_empty() {
                write!(f, " ")?;
                fmt_word_factor(f, r, true)?;
            }
        }
        Ok(())
    }
}
