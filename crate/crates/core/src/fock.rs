//! Full Fock space over `C^n`, truncated at depth `K`.
//!
//! Level `k` is spanned by the words of length `k`; the basis of the
//! truncated space is every word of length `≤ K`, ordered by length and then
//! lexicographically. Operators are stored as dense blocks keyed by
//! `(row level, column level)`.
//!
//! Every operator is the compression `P_K A P_K` of an operator on the
//! untruncated space. Creation operators, `β`, `δ`, `λ` and the Fock
//! representation compute that compression exactly; products of compressions
//! may not, because the intermediate space is cut at level `K`. Each operator
//! therefore carries an exact horizon `h`: blocks `(i, j)` with `i, j ≤ h`
//! agree with the untruncated operator.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::algebra::{AlgebraElement, Word};
use crate::linalg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("Fock space needs n ≥ 2, got n = {0}")]
    InvalidAlphabet(usize),

    #[error("operators live on different Fock spaces ({left:?} vs {right:?})")]
    ContextMismatch { left: FockContext, right: FockContext },

    #[error("letter {letter} is outside 1..={n}")]
    LetterOutOfRange { letter: usize, n: usize },

    #[error("alphabet of the element ({element}) does not match the Fock space ({space})")]
    AlphabetMismatch { element: usize, space: usize },

    #[error("term of degree {degree} does not fit in depth {depth}")]
    DegreeExceedsDepth { degree: usize, depth: usize },

    #[error("block ({i}, {j}) has shape {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    BlockShape { i: usize, j: usize, rows: usize, cols: usize, expected_rows: usize, expected_cols: usize },

    #[error("level {level} exceeds depth {depth}")]
    LevelOutOfRange { level: usize, depth: usize },
}

/// Alphabet size and truncation depth of a Fock space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FockContext {
    n: usize,
    depth: usize,
}

impl FockContext {
    pub fn new(n: usize, depth: usize) -> Result<Self, FockError> {
        if n < 2 {
            return Err(FockError::InvalidAlphabet(n));
        }
        Ok(Self { n, depth })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The truncation depth `K`; levels `0..=K` are present.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Same alphabet, different depth.
    pub fn with_depth(&self, depth: usize) -> Self {
        Self { n: self.n, depth }
    }

    /// `n^k`.
    pub fn level_dim(&self, k: usize) -> usize {
        self.n.pow(k as u32)
    }

    /// Position of the first level-`k` basis vector.
    pub fn level_offset(&self, k: usize) -> usize {
        (0..k).map(|i| self.level_dim(i)).sum()
    }

    /// `Σ_{k ≤ K} n^k`.
    pub fn dim(&self) -> usize {
        self.corner_dim(self.depth)
    }

    /// Dimension of levels `0..=k`.
    pub fn corner_dim(&self, k: usize) -> usize {
        self.level_offset(k + 1)
    }

    pub fn words(&self, k: usize) -> impl Iterator<Item = Word> + '_ {
        (0..self.level_dim(k)).map(move |idx| Word::from_level_index(self.n, k, idx))
    }

    /// The ordered basis of the truncated space.
    pub fn basis(&self) -> Vec<Word> {
        (0..=self.depth).flat_map(|k| self.words(k)).collect()
    }

    pub fn index_of(&self, word: &Word) -> Option<usize> {
        (word.alphabet() == self.n && word.len() <= self.depth)
            .then(|| self.level_offset(word.len()) + word.level_index())
    }

    /// The basis vector `v_μ` as a vector on the whole truncated space.
    pub fn basis_vector(&self, word: &Word) -> Option<DVector<C64>> {
        let idx = self.index_of(word)?;
        let mut v = DVector::zeros(self.dim());
        v[idx] = C64::new(1.0, 0.0);
        Some(v)
    }

    fn check_letter(&self, i: usize) -> Result<(), FockError> {
        if i == 0 || i > self.n {
            Err(FockError::LetterOutOfRange { letter: i, n: self.n })
        } else {
            Ok(())
        }
    }
}

/// A compressed operator on truncated Fock space.
#[derive(Clone, Debug)]
pub struct FockOperator {
    ctx: FockContext,
    blocks: BTreeMap<(usize, usize), DMatrix<C64>>,
    /// Range of `row level − column level` the untruncated operator can have.
    shift: (isize, isize),
    exact_horizon: Option<usize>,
}

impl FockOperator {
    pub fn zero(ctx: FockContext) -> Self {
        Self { ctx, blocks: BTreeMap::new(), shift: (0, 0), exact_horizon: Some(ctx.depth) }
    }

    pub fn identity(ctx: FockContext) -> Self {
        Self::range_projection(ctx, ctx.depth)
    }

    /// `E_k`, the projection onto level `k`.
    pub fn level_projection(ctx: FockContext, k: usize) -> Self {
        let mut out = Self::zero(ctx);
        if k <= ctx.depth {
            let d = ctx.level_dim(k);
            out.blocks.insert((k, k), DMatrix::identity(d, d));
        }
        out
    }

    /// `P_k`, the projection onto levels `0..=k`.
    pub fn range_projection(ctx: FockContext, k: usize) -> Self {
        let mut out = Self::zero(ctx);
        for l in 0..=k.min(ctx.depth) {
            let d = ctx.level_dim(l);
            out.blocks.insert((l, l), DMatrix::identity(d, d));
        }
        out
    }

    /// Builds an operator from explicit blocks; absent blocks are zero.
    pub fn from_blocks(
        ctx: FockContext,
        blocks: impl IntoIterator<Item = ((usize, usize), DMatrix<C64>)>,
    ) -> Result<Self, FockError> {
        let mut out = Self::zero(ctx);
        let mut shift: Option<(isize, isize)> = None;
        for ((i, j), m) in blocks {
            for level in [i, j] {
                if level > ctx.depth {
                    return Err(FockError::LevelOutOfRange { level, depth: ctx.depth });
                }
            }
            let (er, ec) = (ctx.level_dim(i), ctx.level_dim(j));
            if m.nrows() != er || m.ncols() != ec {
                return Err(FockError::BlockShape {
                    i,
                    j,
                    rows: m.nrows(),
                    cols: m.ncols(),
                    expected_rows: er,
                    expected_cols: ec,
                });
            }
            let s = i as isize - j as isize;
            shift = Some(shift.map_or((s, s), |(lo, hi)| (lo.min(s), hi.max(s))));
            out.blocks.insert((i, j), m);
        }
        out.shift = shift.unwrap_or((0, 0));
        Ok(out)
    }

    /// The rank-one operator `|v_x⟩⟨v_y| : h ↦ ⟨h, v_y⟩ v_x`.
    pub fn rank_one(ctx: FockContext, x: &Word, y: &Word) -> Result<Self, FockError> {
        for w in [x, y] {
            if w.alphabet() != ctx.n {
                return Err(FockError::AlphabetMismatch { element: w.alphabet(), space: ctx.n });
            }
            if w.len() > ctx.depth {
                return Err(FockError::DegreeExceedsDepth { degree: w.len(), depth: ctx.depth });
            }
        }
        let mut m = DMatrix::zeros(ctx.level_dim(x.len()), ctx.level_dim(y.len()));
        m[(x.level_index(), y.level_index())] = C64::new(1.0, 0.0);
        Self::from_blocks(ctx, [((x.len(), y.len()), m)])
    }

    /// `l(v_i)`: prepends the letter `i`. Level `K` is sent out of the space.
    pub fn left_create(ctx: FockContext, i: usize) -> Result<Self, FockError> {
        ctx.check_letter(i)?;
        let blocks = (0..ctx.depth).map(|k| {
            let d = ctx.level_dim(k);
            let mut m = DMatrix::zeros(ctx.level_dim(k + 1), d);
            for w in 0..d {
                m[((i - 1) * d + w, w)] = C64::new(1.0, 0.0);
            }
            ((k + 1, k), m)
        });
        let mut out = Self::from_blocks(ctx, blocks.collect::<Vec<_>>())?;
        out.shift = (1, 1);
        Ok(out)
    }

    /// `r(v_i)`: appends the letter `i`. Level `K` is sent out of the space.
    pub fn right_create(ctx: FockContext, i: usize) -> Result<Self, FockError> {
        ctx.check_letter(i)?;
        let n = ctx.n;
        let blocks = (0..ctx.depth).map(|k| {
            let d = ctx.level_dim(k);
            let mut m = DMatrix::zeros(ctx.level_dim(k + 1), d);
            for w in 0..d {
                m[(w * n + (i - 1), w)] = C64::new(1.0, 0.0);
            }
            ((k + 1, k), m)
        });
        let mut out = Self::from_blocks(ctx, blocks.collect::<Vec<_>>())?;
        out.shift = (1, 1);
        Ok(out)
    }

    /// The Fock representation `l(x)`, with `l(v_μ v_ν*) = l(v_μ) l(v_ν)*`.
    ///
    /// Computed directly as `v_{ν⧺w} ↦ v_{μ⧺w}`, so the compression is exact.
    pub fn represent(ctx: FockContext, x: &AlgebraElement) -> Result<Self, FockError> {
        if x.alphabet() != ctx.n {
            return Err(FockError::AlphabetMismatch { element: x.alphabet(), space: ctx.n });
        }
        if x.degree() > ctx.depth {
            return Err(FockError::DegreeExceedsDepth { degree: x.degree(), depth: ctx.depth });
        }
        let n = ctx.n;
        let mut blocks: BTreeMap<(usize, usize), DMatrix<C64>> = BTreeMap::new();
        let mut shift: Option<(isize, isize)> = None;
        for term in x.terms() {
            let (mu, nu) = (&term.left, &term.right);
            let s = mu.len() as isize - nu.len() as isize;
            shift = Some(shift.map_or((s, s), |(lo, hi)| (lo.min(s), hi.max(s))));
            let (mi, ni) = (mu.level_index(), nu.level_index());
            let tail_max = ctx.depth - mu.len().max(nu.len());
            for t in 0..=tail_max {
                let (row_level, col_level) = (mu.len() + t, nu.len() + t);
                let tails = n.pow(t as u32);
                let block = blocks
                    .entry((row_level, col_level))
                    .or_insert_with(|| DMatrix::zeros(ctx.level_dim(row_level), ctx.level_dim(col_level)));
                for w in 0..tails {
                    block[(mi * tails + w, ni * tails + w)] += term.coeff;
                }
            }
        }
        Ok(Self { ctx, blocks, shift: shift.unwrap_or((0, 0)), exact_horizon: Some(ctx.depth) })
    }

    pub fn ctx(&self) -> FockContext {
        self.ctx
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&DMatrix<C64>> {
        self.blocks.get(&(i, j))
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&(usize, usize), &DMatrix<C64>)> {
        self.blocks.iter()
    }

    /// Levels `≤ h` are exact; `None` when no level is.
    pub fn exact_horizon(&self) -> Option<usize> {
        self.exact_horizon
    }

    /// Highest level touched by a nonzero entry; `None` for zero.
    pub fn support(&self) -> Option<usize> {
        self.blocks
            .iter()
            .filter(|(_, m)| m.iter().any(|z| *z != C64::default()))
            .map(|(&(i, j), _)| i.max(j))
            .max()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.ctx.dim(), self.ctx.dim());
        for (&(i, j), m) in &self.blocks {
            let (r, c) = (self.ctx.level_offset(i), self.ctx.level_offset(j));
            out.view_mut((r, c), (m.nrows(), m.ncols())).copy_from(m);
        }
        out
    }

    /// Applies the operator to a vector on the whole truncated space.
    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.ctx.dim());
        for (&(i, j), m) in &self.blocks {
            let (r, c) = (self.ctx.level_offset(i), self.ctx.level_offset(j));
            let x = v.rows(c, m.ncols());
            let mut y = out.rows_mut(r, m.nrows());
            y.gemv(C64::new(1.0, 0.0), m, &x, C64::new(1.0, 0.0));
        }
        out
    }

    /// Image of the basis vector `v_word`.
    pub fn apply_word(&self, word: &Word) -> Option<DVector<C64>> {
        self.ctx.basis_vector(word).map(|v| self.apply(&v))
    }

    fn check_ctx(&self, other: &Self) -> Result<(), FockError> {
        if self.ctx != other.ctx {
            Err(FockError::ContextMismatch { left: self.ctx, right: other.ctx })
        } else {
            Ok(())
        }
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self, FockError> {
        self.check_ctx(other)?;
        let mut blocks = self.blocks.clone();
        for (&key, m) in &other.blocks {
            match blocks.get_mut(&key) {
                Some(b) => *b += m * C64::new(sign, 0.0),
                None => {
                    blocks.insert(key, m * C64::new(sign, 0.0));
                }
            }
        }
        Ok(Self {
            ctx: self.ctx,
            blocks,
            shift: (self.shift.0.min(other.shift.0), self.shift.1.max(other.shift.1)),
            exact_horizon: self.exact_horizon.min(other.exact_horizon),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, FockError> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FockError> {
        self.combine(other, -1.0)
    }

    pub fn scale(&self, c: C64) -> Self {
        let blocks = self.blocks.iter().map(|(&k, m)| (k, m * c)).collect();
        Self { blocks, ..self.clone() }
    }

    pub fn adjoint(&self) -> Self {
        let blocks = self.blocks.iter().map(|(&(i, j), m)| ((j, i), m.adjoint())).collect();
        Self { ctx: self.ctx, blocks, shift: (-self.shift.1, -self.shift.0), exact_horizon: self.exact_horizon }
    }

    /// Product of compressions. Its exact horizon shrinks when the right
    /// factor can raise levels past `K` before the left factor lowers them.
    pub fn mul(&self, other: &Self) -> Result<Self, FockError> {
        self.check_ctx(other)?;
        let mut blocks: BTreeMap<(usize, usize), DMatrix<C64>> = BTreeMap::new();
        for (&(m, j), b) in &other.blocks {
            for (&(i, _), a) in self.blocks.iter().filter(|((_, c), _)| *c == m) {
                let prod = a * b;
                match blocks.get_mut(&(i, j)) {
                    Some(acc) => *acc += prod,
                    None => {
                        blocks.insert((i, j), prod);
                    }
                }
            }
        }
        let raise = other.shift.1.max(0) as usize;
        let lower = (-self.shift.0).max(0) as usize;
        let leak = raise.min(lower);
        let horizon = self
            .exact_horizon
            .min(other.exact_horizon)
            .and_then(|h| self.ctx.depth.checked_sub(leak).map(|cap| h.min(cap)));
        Ok(Self {
            ctx: self.ctx,
            blocks,
            shift: (self.shift.0 + other.shift.0, self.shift.1 + other.shift.1),
            exact_horizon: horizon,
        })
    }

    /// `β(A) = Σ_i r(v_i) A r(v_i)*`: block `(i, j)` becomes `A_ij ⊗ I_n` at
    /// `(i+1, j+1)`; anything pushed past level `K` is dropped.
    pub fn beta(&self) -> Self {
        let n = self.ctx.n;
        let blocks = self
            .blocks
            .iter()
            .filter(|(&(i, j), _)| i < self.ctx.depth && j < self.ctx.depth)
            .map(|(&(i, j), m)| ((i + 1, j + 1), linalg::kron_identity(m, n)))
            .collect();
        Self {
            ctx: self.ctx,
            blocks,
            shift: self.shift,
            exact_horizon: self.exact_horizon.map(|h| (h + 1).min(self.ctx.depth)),
        }
    }

    /// `δ(A) = A − β(A)`.
    pub fn delta(&self) -> Self {
        self.sub(&self.beta()).expect("same context")
    }

    /// `λ(B) = Σ_{i ≥ 0} β^i(B)`. Terms with `i > K` vanish on the truncated
    /// space, so the compression is exact wherever `B` is.
    pub fn lambda_sum(&self) -> Self {
        let mut acc = self.clone();
        let mut term = self.clone();
        for _ in 0..self.ctx.depth {
            term = term.beta();
            if term.blocks.is_empty() {
                break;
            }
            acc = acc.add(&term).expect("same context");
        }
        acc.exact_horizon = self.exact_horizon;
        acc
    }

    /// Largest entry difference over blocks `(i, j)` with `i, j ≤ horizon`.
    pub fn max_abs_diff_within(&self, other: &Self, horizon: usize) -> f64 {
        let mut worst: f64 = 0.0;
        let keys: std::collections::BTreeSet<_> = self.blocks.keys().chain(other.blocks.keys()).copied().collect();
        for (i, j) in keys {
            if i > horizon || j > horizon {
                continue;
            }
            let d = match (self.blocks.get(&(i, j)), other.blocks.get(&(i, j))) {
                (Some(a), Some(b)) => linalg::max_abs_diff(a, b),
                (Some(a), None) | (None, Some(a)) => linalg::max_abs(a),
                (None, None) => 0.0,
            };
            worst = worst.max(d);
        }
        worst
    }
}
