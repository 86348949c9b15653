//! Density matrices of positive functionals on `E_n`.
//!
//! A functional `ρ` is stored through its density matrix `Ω`, a Hermitian
//! block matrix with `Ω_{ij} : E_j → E_i`, related to `ρ` by
//! `ρ(v_μ v_ν*) = ⟨Ω v_μ, v_ν⟩`, i.e. the entry of `Ω_{|ν|,|μ|}` at row `ν`
//! and column `μ`. The state criterion is `slice Ω ≤ Ω`, where the slice is
//! the partial trace over the last tensor factor, shifted down one level.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraElement, Word, UNIMODULAR_TOLERANCE};
use crate::fock::{FockContext, FockError, FockOperator};
use crate::linalg;

/// Hermiticity of stored matrices is checked to this absolute tolerance.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error(transparent)]
    Fock(#[from] FockError),

    #[error("density matrices live on different Fock spaces ({left:?} vs {right:?})")]
    ContextMismatch { left: FockContext, right: FockContext },

    #[error("block ({i}, {j}) is not the adjoint of block ({j}, {i}) (deviation {deviation:e})")]
    NotHermitian { i: usize, j: usize, deviation: f64 },

    #[error("monomial of degree {degree} needs depth ≥ {degree}, state has depth {depth}")]
    DegreeExceedsDepth { degree: usize, depth: usize },

    #[error("alphabet of the element ({element}) does not match the state ({space})")]
    AlphabetMismatch { element: usize, space: usize },

    #[error("the slice of a depth-0 matrix has no levels left")]
    SliceOfDepthZero,

    #[error("corner {k} requested from a matrix of depth {depth}")]
    CornerOutOfRange { k: usize, depth: usize },

    #[error("gauge parameter must be unimodular, got |λ| = {modulus}")]
    NotUnimodular { modulus: f64 },

    #[error("undetermined: {reason}")]
    Undetermined { reason: String, trace_profile: Vec<f64> },
}

/// Tolerances for positivity and equality tests.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// A corner `T` is PSD when its smallest eigenvalue is at least
    /// `−psd_factor · max(1, |tr T|)`.
    pub psd_factor: f64,
    /// Absolute tolerance for entrywise and trace-profile comparisons.
    pub equality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { psd_factor: 1e-9, equality: 1e-10 }
    }
}

impl Tolerances {
    pub fn psd(&self, trace: f64) -> f64 {
        self.psd_factor * trace.abs().max(1.0)
    }
}

/// One block of a density matrix: either stored densely or as
/// `coeff · |left⟩⟨right|`, which keeps product-state matrices small.
#[derive(Clone, Debug)]
pub enum Block {
    Dense(DMatrix<C64>),
    Outer { coeff: C64, left: Arc<DVector<C64>>, right: Arc<DVector<C64>> },
}

impl Block {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Block::Dense(m) => m.shape(),
            Block::Outer { left, right, .. } => (left.len(), right.len()),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match self {
            Block::Dense(m) => m.clone(),
            Block::Outer { coeff, left, right } => (left.as_ref() * right.adjoint()) * *coeff,
        }
    }

    pub fn entry(&self, r: usize, c: usize) -> C64 {
        match self {
            Block::Dense(m) => m[(r, c)],
            Block::Outer { coeff, left, right } => coeff * left[r] * right[c].conj(),
        }
    }

    pub fn adjoint(&self) -> Block {
        match self {
            Block::Dense(m) => Block::Dense(m.adjoint()),
            Block::Outer { coeff, left, right } => {
                Block::Outer { coeff: coeff.conj(), left: right.clone(), right: left.clone() }
            }
        }
    }

    pub fn scale(&self, c: C64) -> Block {
        match self {
            Block::Dense(m) => Block::Dense(m * c),
            Block::Outer { coeff, left, right } => {
                Block::Outer { coeff: coeff * c, left: left.clone(), right: right.clone() }
            }
        }
    }

    /// `⟨B x, y⟩ = y^† B x`.
    pub fn pair(&self, x: &DVector<C64>, y: &DVector<C64>) -> C64 {
        match self {
            Block::Dense(m) => y.dotc(&(m * x)),
            Block::Outer { coeff, left, right } => coeff * x.dotc(right).conj() * y.dotc(left),
        }
    }

    pub fn trace(&self) -> C64 {
        match self {
            Block::Dense(m) => m.trace(),
            Block::Outer { coeff, left, right } => coeff * right.dotc(left),
        }
    }

    /// `tr(B A)` for `A` of the transposed shape.
    pub fn trace_against(&self, a: &DMatrix<C64>) -> C64 {
        match self {
            Block::Dense(m) => (m * a).trace(),
            Block::Outer { coeff, left, right } => coeff * right.dotc(&(a * left.as_ref())),
        }
    }

    pub fn partial_trace_last(&self, n: usize) -> DMatrix<C64> {
        match self {
            Block::Dense(m) => linalg::partial_trace_last(m, n),
            Block::Outer { coeff, left, right } => {
                let (rows, cols) = (left.len() / n, right.len() / n);
                DMatrix::from_fn(rows, cols, |x, y| {
                    coeff * (0..n).map(|t| left[x * n + t] * right[y * n + t].conj()).sum::<C64>()
                })
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Block::Dense(m) => linalg::max_abs(m),
            Block::Outer { coeff, left, right } => coeff.norm() * left.camax() * right.camax(),
        }
    }
}

/// The density matrix `Ω` on levels `0..=K`. Absent blocks are zero.
#[derive(Clone, Debug)]
pub struct BlockOperatorMatrix {
    ctx: FockContext,
    blocks: BTreeMap<(usize, usize), Block>,
}

impl BlockOperatorMatrix {
    pub fn zero(ctx: FockContext) -> Self {
        Self { ctx, blocks: BTreeMap::new() }
    }

    /// The vacuum state: `Ω_00 = 1`, everything else zero.
    pub fn vacuum(ctx: FockContext) -> Self {
        let mut out = Self::zero(ctx);
        out.blocks.insert((0, 0), Block::Dense(DMatrix::from_element(1, 1, C64::new(1.0, 0.0))));
        out
    }

    pub fn from_blocks(
        ctx: FockContext,
        blocks: impl IntoIterator<Item = ((usize, usize), Block)>,
    ) -> Result<Self, DensityError> {
        let mut out = Self::zero(ctx);
        for ((i, j), b) in blocks {
            for level in [i, j] {
                if level > ctx.depth() {
                    return Err(FockError::LevelOutOfRange { level, depth: ctx.depth() }.into());
                }
            }
            let (rows, cols) = b.shape();
            let (er, ec) = (ctx.level_dim(i), ctx.level_dim(j));
            if (rows, cols) != (er, ec) {
                return Err(FockError::BlockShape { i, j, rows, cols, expected_rows: er, expected_cols: ec }.into());
            }
            out.blocks.insert((i, j), b);
        }
        Ok(out)
    }

    /// Dense blocks of a Fock operator, read as a density matrix.
    pub fn from_fock_operator(op: &FockOperator) -> Self {
        let blocks = op.blocks().map(|(&k, m)| (k, Block::Dense(m.clone()))).collect();
        Self { ctx: op.ctx(), blocks }
    }

    /// The density matrix of the functional `v_μ v_ν* ↦ f(μ, ν)`.
    pub fn from_functional(ctx: FockContext, f: impl Fn(&Word, &Word) -> C64) -> Self {
        let mut blocks = BTreeMap::new();
        for i in 0..=ctx.depth() {
            for j in 0..=ctx.depth() {
                let mut m = DMatrix::zeros(ctx.level_dim(i), ctx.level_dim(j));
                for (r, nu) in ctx.words(i).enumerate() {
                    for (c, mu) in ctx.words(j).enumerate() {
                        m[(r, c)] = f(&mu, &nu);
                    }
                }
                blocks.insert((i, j), Block::Dense(m));
            }
        }
        Self { ctx, blocks }
    }

    /// Splits a dense `dim × dim` matrix into level blocks.
    pub fn from_dense(ctx: FockContext, m: &DMatrix<C64>) -> Result<Self, DensityError> {
        let dim = ctx.dim();
        if m.shape() != (dim, dim) {
            return Err(FockError::BlockShape {
                i: ctx.depth(),
                j: ctx.depth(),
                rows: m.nrows(),
                cols: m.ncols(),
                expected_rows: dim,
                expected_cols: dim,
            }
            .into());
        }
        let mut blocks = BTreeMap::new();
        for i in 0..=ctx.depth() {
            for j in 0..=ctx.depth() {
                let view = m.view((ctx.level_offset(i), ctx.level_offset(j)), (ctx.level_dim(i), ctx.level_dim(j)));
                if view.iter().any(|z| *z != C64::default()) {
                    blocks.insert((i, j), Block::Dense(view.into_owned()));
                }
            }
        }
        Ok(Self { ctx, blocks })
    }

    pub fn ctx(&self) -> FockContext {
        self.ctx
    }

    pub fn depth(&self) -> usize {
        self.ctx.depth()
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&Block> {
        self.blocks.get(&(i, j))
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&(usize, usize), &Block)> {
        self.blocks.iter()
    }

    /// Block `(i, j)` as a dense matrix, zero when absent.
    pub fn dense_block(&self, i: usize, j: usize) -> DMatrix<C64> {
        match self.blocks.get(&(i, j)) {
            Some(b) => b.to_dense(),
            None => DMatrix::zeros(self.ctx.level_dim(i), self.ctx.level_dim(j)),
        }
    }

    /// Confirms `Ω_{ji} = Ω_{ij}^†` entrywise.
    pub fn check_hermitian(&self, tol: f64) -> Result<(), DensityError> {
        for (&(i, j), b) in &self.blocks {
            if i > j {
                continue;
            }
            let deviation = match (b, self.blocks.get(&(j, i))) {
                (
                    Block::Outer { coeff, left, right },
                    Some(Block::Outer { coeff: c2, left: l2, right: r2 }),
                ) if Arc::ptr_eq(left, r2) && Arc::ptr_eq(right, l2) => (coeff.conj() - c2).norm() * left.camax() * right.camax(),
                (_, Some(other)) => linalg::max_abs_diff(&b.to_dense(), &other.to_dense().adjoint()),
                (_, None) => b.max_abs(),
            };
            if deviation > tol {
                return Err(DensityError::NotHermitian { i, j, deviation });
            }
        }
        for (&(i, j), b) in &self.blocks {
            if i > j && !self.blocks.contains_key(&(j, i)) && b.max_abs() > tol {
                return Err(DensityError::NotHermitian { i: j, j: i, deviation: b.max_abs() });
            }
        }
        Ok(())
    }

    /// `T_k`: levels `0..=k` assembled in basis order.
    pub fn corner(&self, k: usize) -> Result<DMatrix<C64>, DensityError> {
        if k > self.depth() {
            return Err(DensityError::CornerOutOfRange { k, depth: self.depth() });
        }
        let dim = self.ctx.corner_dim(k);
        let mut out = DMatrix::zeros(dim, dim);
        for (&(i, j), b) in self.blocks.range((0, 0)..=(k, k)) {
            if i > k || j > k {
                continue;
            }
            let (r, c) = (self.ctx.level_offset(i), self.ctx.level_offset(j));
            let (rows, cols) = b.shape();
            out.view_mut((r, c), (rows, cols)).copy_from(&b.to_dense());
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.corner(self.depth()).expect("depth is in range")
    }

    /// `ω(E_k) = tr Ω_kk`.
    pub fn level_trace(&self, k: usize) -> f64 {
        self.blocks.get(&(k, k)).map_or(0.0, |b| b.trace().re)
    }

    pub fn trace_profile(&self) -> Vec<f64> {
        (0..=self.depth()).map(|k| self.level_trace(k)).collect()
    }

    /// `(slice Ω)_{ij}` is the partial trace over the last factor of
    /// `Ω_{i+1, j+1}`; the result has depth `K − 1`.
    pub fn slice(&self) -> Result<Self, DensityError> {
        let depth = self.depth().checked_sub(1).ok_or(DensityError::SliceOfDepthZero)?;
        let n = self.ctx.n();
        let sources: Vec<_> = self.blocks.iter().filter(|((i, j), _)| *i >= 1 && *j >= 1).collect();
        let blocks = sources
            .par_iter()
            .map(|(&(i, j), b)| ((i - 1, j - 1), Block::Dense(b.partial_trace_last(n))))
            .collect::<Vec<_>>();
        Ok(Self { ctx: self.ctx.with_depth(depth), blocks: blocks.into_iter().collect() })
    }

    /// Keeps levels `0..=depth`.
    pub fn restrict(&self, depth: usize) -> Self {
        let depth = depth.min(self.depth());
        let blocks = self.blocks.iter().filter(|((i, j), _)| *i <= depth && *j <= depth).map(|(&k, b)| (k, b.clone()));
        Self { ctx: self.ctx.with_depth(depth), blocks: blocks.collect() }
    }

    fn check_ctx(&self, other: &Self) -> Result<(), DensityError> {
        if self.ctx != other.ctx {
            Err(DensityError::ContextMismatch { left: self.ctx, right: other.ctx })
        } else {
            Ok(())
        }
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self, DensityError> {
        self.check_ctx(other)?;
        let keys: BTreeSet<_> = self.blocks.keys().chain(other.blocks.keys()).copied().collect();
        let blocks = keys
            .into_iter()
            .map(|k| {
                let b = match (self.blocks.get(&k), other.blocks.get(&k)) {
                    (Some(a), Some(b)) => Block::Dense(a.to_dense() + b.to_dense() * C64::new(sign, 0.0)),
                    (Some(a), None) => a.clone(),
                    (None, Some(b)) => b.scale(C64::new(sign, 0.0)),
                    (None, None) => unreachable!("key comes from one of the maps"),
                };
                (k, b)
            })
            .collect();
        Ok(Self { ctx: self.ctx, blocks })
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, DensityError> {
        self.combine(other, 1.0)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, DensityError> {
        self.combine(other, -1.0)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { ctx: self.ctx, blocks: self.blocks.iter().map(|(&k, b)| (k, b.scale(c))).collect() }
    }

    /// Largest entry difference over the levels both matrices have.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.max_abs_diff_within(other, self.depth().min(other.depth()))
    }

    /// Largest entry difference over blocks `(i, j)` with `i, j ≤ horizon`.
    pub fn max_abs_diff_within(&self, other: &Self, horizon: usize) -> f64 {
        let keys: BTreeSet<_> = self
            .blocks
            .keys()
            .chain(other.blocks.keys())
            .filter(|(i, j)| *i <= horizon && *j <= horizon)
            .copied()
            .collect();
        keys.into_iter()
            .map(|k| match (self.blocks.get(&k), other.blocks.get(&k)) {
                (Some(a), Some(b)) => linalg::max_abs_diff(&a.to_dense(), &b.to_dense()),
                (Some(a), None) | (None, Some(a)) => a.max_abs(),
                (None, None) => 0.0,
            })
            .fold(0.0, f64::max)
    }

    /// `⟨Ω x, y⟩` for `x ∈ E_j`, `y ∈ E_i`.
    pub fn pair(&self, x: &DVector<C64>, j: usize, y: &DVector<C64>, i: usize) -> C64 {
        self.blocks.get(&(i, j)).map_or(C64::default(), |b| b.pair(x, y))
    }

    /// `ρ(v_μ v_ν*)`.
    pub fn eval_monomial(&self, mu: &Word, nu: &Word) -> Result<C64, DensityError> {
        let degree = mu.len().max(nu.len());
        if degree > self.depth() {
            return Err(DensityError::DegreeExceedsDepth { degree, depth: self.depth() });
        }
        Ok(self
            .blocks
            .get(&(nu.len(), mu.len()))
            .map_or(C64::default(), |b| b.entry(nu.level_index(), mu.level_index())))
    }

    /// `ρ(x)` for an algebra element.
    pub fn eval(&self, x: &AlgebraElement) -> Result<C64, DensityError> {
        if x.alphabet() != self.ctx.n() {
            return Err(DensityError::AlphabetMismatch { element: x.alphabet(), space: self.ctx.n() });
        }
        x.terms().try_fold(C64::default(), |acc, t| Ok(acc + t.coeff * self.eval_monomial(&t.left, &t.right)?))
    }

    /// `tr(Ω A)` for a Fock operator `A` whose levels fit in `Ω`.
    pub fn expectation(&self, a: &FockOperator) -> Result<C64, DensityError> {
        if a.ctx().n() != self.ctx.n() {
            return Err(DensityError::AlphabetMismatch { element: a.ctx().n(), space: self.ctx.n() });
        }
        let mut acc = C64::default();
        for (&(i, j), m) in a.blocks() {
            if i.max(j) > self.depth() {
                if linalg::max_abs(m) == 0.0 {
                    continue;
                }
                return Err(DensityError::DegreeExceedsDepth { degree: i.max(j), depth: self.depth() });
            }
            if let Some(b) = self.blocks.get(&(j, i)) {
                acc += b.trace_against(m);
            }
        }
        Ok(acc)
    }

    /// Density matrix of `ρ ∘ γ_λ`: block `(i, j)` picks up `λ^{j−i}`.
    pub fn gauge(&self, lambda: C64) -> Result<Self, DensityError> {
        let modulus = lambda.norm();
        if (modulus - 1.0).abs() > UNIMODULAR_TOLERANCE {
            return Err(DensityError::NotUnimodular { modulus });
        }
        let blocks = self
            .blocks
            .iter()
            .map(|(&(i, j), b)| ((i, j), b.scale(lambda.powi(j as i32 - i as i32))))
            .collect();
        Ok(Self { ctx: self.ctx, blocks })
    }
}

/// A functional on `E_n` backed by its density matrix.
#[derive(Clone, Debug)]
pub struct StateHandle {
    omega: BlockOperatorMatrix,
    exact_horizon: usize,
    trace_profile: Vec<f64>,
}

impl StateHandle {
    /// Wraps `Ω` after checking Hermiticity.
    pub fn new(omega: BlockOperatorMatrix) -> Result<Self, DensityError> {
        let h = omega.depth();
        Self::with_horizon(omega, h)
    }

    pub fn with_horizon(omega: BlockOperatorMatrix, exact_horizon: usize) -> Result<Self, DensityError> {
        omega.check_hermitian(HERMITIAN_TOLERANCE)?;
        Ok(Self::trusted(omega, exact_horizon))
    }

    fn trusted(omega: BlockOperatorMatrix, exact_horizon: usize) -> Self {
        let trace_profile = omega.trace_profile();
        let exact_horizon = exact_horizon.min(omega.depth());
        Self { omega, exact_horizon, trace_profile }
    }

    pub fn vacuum(ctx: FockContext) -> Self {
        Self::trusted(BlockOperatorMatrix::vacuum(ctx), ctx.depth())
    }

    pub fn omega(&self) -> &BlockOperatorMatrix {
        &self.omega
    }

    pub fn into_omega(self) -> BlockOperatorMatrix {
        self.omega
    }

    pub fn ctx(&self) -> FockContext {
        self.omega.ctx()
    }

    pub fn depth(&self) -> usize {
        self.omega.depth()
    }

    pub fn exact_horizon(&self) -> usize {
        self.exact_horizon
    }

    /// `[ω(E_0), …, ω(E_K)]`.
    pub fn trace_profile(&self) -> &[f64] {
        &self.trace_profile
    }

    /// `ρ(x)`.
    pub fn eval(&self, x: &AlgebraElement) -> Result<C64, DensityError> {
        self.omega.eval(x)
    }

    /// `β*ρ = ρ ∘ β`, whose density matrix is the slice of `Ω`.
    pub fn beta_star(&self) -> Result<Self, DensityError> {
        let sliced = self.omega.slice()?;
        Ok(Self::trusted(sliced, self.exact_horizon.saturating_sub(1)))
    }

    pub fn add(&self, other: &Self) -> Result<Self, DensityError> {
        let sum = self.omega.checked_add(&other.omega)?;
        Ok(Self::trusted(sum, self.exact_horizon.min(other.exact_horizon)))
    }

    pub fn scale(&self, t: f64) -> Self {
        Self::trusted(self.omega.scale(C64::new(t, 0.0)), self.exact_horizon)
    }

    /// `ρ ∘ γ_λ`.
    pub fn gauge(&self, lambda: C64) -> Result<Self, DensityError> {
        Ok(Self::trusted(self.omega.gauge(lambda)?, self.exact_horizon))
    }

    pub fn classify(&self, tol: &Tolerances) -> ClassificationReport {
        classify(self, tol)
    }

    pub fn decompose(&self, tol: &Tolerances) -> Result<Decomposition, DensityError> {
        decompose(self, tol)
    }
}

/// Smallest eigenvalue of every corner `T_0, …, T_K` and the verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdCertificate {
    pub passed: bool,
    pub min_eigenvalues: Vec<f64>,
    pub tolerances: Vec<f64>,
}

fn corner_certificate(m: &BlockOperatorMatrix, tol: &Tolerances) -> PsdCertificate {
    let results: Vec<(f64, f64)> = (0..=m.depth())
        .into_par_iter()
        .map(|k| {
            let t = m.corner(k).expect("k within depth");
            let trace_tol = tol.psd(t.trace().re);
            let min = linalg::hermitian_eigenvalues(&t).first().copied().unwrap_or(0.0);
            (min, trace_tol)
        })
        .collect();
    let passed = results.iter().all(|&(min, t)| min >= -t);
    let (min_eigenvalues, tolerances) = results.into_iter().unzip();
    PsdCertificate { passed, min_eigenvalues, tolerances }
}

/// Every corner of `Ω` is positive semidefinite.
pub fn is_positive(omega: &BlockOperatorMatrix, tol: &Tolerances) -> PsdCertificate {
    corner_certificate(omega, tol)
}

/// `slice Ω ≤ Ω` on the levels both sides share, i.e. every corner of
/// `Ω − slice Ω` (depth `K − 1`) is positive semidefinite.
pub fn is_decreasing(omega: &BlockOperatorMatrix, tol: &Tolerances) -> Result<PsdCertificate, DensityError> {
    let sliced = omega.slice()?;
    let diff = omega.restrict(sliced.depth()).checked_sub(&sliced)?;
    Ok(corner_certificate(&diff, tol))
}

/// `ρ(x)` for a state handle.
pub fn state_eval(state: &StateHandle, x: &AlgebraElement) -> Result<C64, DensityError> {
    state.eval(x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramReport {
    pub passed: bool,
    pub min_eigenvalue: f64,
    /// `G_ab = ρ(x_b* x_a)`.
    pub matrix: DMatrix<C64>,
}

/// Positivity of `ρ` tested on the span of `elements`.
pub fn gram_positivity_check(
    state: &StateHandle,
    elements: &[AlgebraElement],
    tol: &Tolerances,
) -> Result<GramReport, DensityError> {
    let size = elements.len();
    let mut matrix = DMatrix::zeros(size, size);
    for a in 0..size {
        for b in 0..size {
            let n = state.ctx().n();
            if elements[a].alphabet() != n || elements[b].alphabet() != n {
                return Err(DensityError::AlphabetMismatch { element: elements[a].alphabet(), space: n });
            }
            matrix[(a, b)] = state.eval(&(&elements[b].adjoint() * &elements[a]))?;
        }
    }
    let min_eigenvalue = linalg::hermitian_eigenvalues(&matrix).first().copied().unwrap_or(0.0);
    let passed = min_eigenvalue >= -tol.psd(matrix.trace().re);
    Ok(GramReport { passed, min_eigenvalue, matrix })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Essential,
    Singular,
    Mixed,
    Undetermined,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Essential => "essential",
            Classification::Singular => "singular",
            Classification::Mixed => "mixed",
            Classification::Undetermined => "undetermined",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classification: Classification,
    pub trace_profile: Vec<f64>,
    /// Limit of `ω(E_k)` when it is visible inside the horizon.
    pub limit: Option<f64>,
    /// `max |slice Ω − Ω|` over shared levels; `None` at depth 0.
    pub slice_defect: Option<f64>,
}

/// Singular if `ω(E_K)` has died out; essential if the trace profile is flat
/// and `Ω` is slice-invariant; mixed if the profile has settled at a level
/// strictly between 0 and `ω(E_0)`; undetermined otherwise.
pub fn classify(state: &StateHandle, tol: &Tolerances) -> ClassificationReport {
    let profile = state.trace_profile().to_vec();
    let eps = tol.equality;
    let first = profile[0];
    let last = *profile.last().expect("profile has level 0");
    let slice_defect = state
        .omega()
        .slice()
        .ok()
        .map(|s| state.omega().restrict(s.depth()).max_abs_diff(&s));
    let report = |classification, limit| ClassificationReport {
        classification,
        trace_profile: profile.clone(),
        limit,
        slice_defect,
    };

    if last <= eps * first.abs() || (first.abs() <= eps && last.abs() <= eps) {
        return report(Classification::Singular, Some(0.0));
    }
    let flat = profile.iter().all(|t| (t - first).abs() <= eps);
    if flat && slice_defect.is_some_and(|d| d <= eps) {
        return report(Classification::Essential, Some(first));
    }
    // the tail must be visibly flat over at least two steps when the depth allows
    let steps = if profile.len() >= 3 { 2 } else { 1 };
    if profile.len() > steps {
        let tail = &profile[profile.len() - 1 - steps..];
        let settled = tail.windows(2).all(|w| (w[1] - w[0]).abs() <= eps);
        if settled && last > eps && last < first - eps {
            return report(Classification::Mixed, Some(last));
        }
    }
    report(Classification::Undetermined, None)
}

/// Singular and essential parts of a functional.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub singular: StateHandle,
    pub essential: StateHandle,
    /// Smallest `m` from which `slice^m Ω` no longer changes.
    pub stabilized_at: usize,
    /// Levels `≤ K − m` on which both parts are pinned by the data.
    pub horizon: usize,
    /// `max |Ω_s − Σ_i slice^i(Ω − slice Ω)|` on the horizon.
    pub telescoping_error: f64,
    /// `max |ρ_s(v_μ v_ν*) − tr(D · l(v_μ v_ν*))|` with `D = Ω − slice Ω`.
    pub phi_error: f64,
}

/// Splits `Ω` into `Ω_s + Ω_e`, with `Ω_e = lim slice^m Ω` and `Ω_s` the
/// telescoping sum `Σ_i slice^i(Ω − slice Ω)`.
///
/// At depth `K` the limit is detected as the first `m` with
/// `slice^{m'+1} Ω = slice^{m'} Ω` for all `m' ≥ m`. The singular part is then
/// supported below level `m`, so `slice^m Ω` must agree with `Ω` on levels
/// `m..=K−m`; that needs `2m ≤ K + 1`. Above level `K − m` the essential part
/// is read off `Ω` itself.
pub fn decompose(state: &StateHandle, tol: &Tolerances) -> Result<Decomposition, DensityError> {
    let omega = state.omega();
    let depth = omega.depth();
    let profile = state.trace_profile().to_vec();
    let undetermined = |reason: String| DensityError::Undetermined { reason, trace_profile: profile.clone() };

    if depth == 0 {
        return Err(undetermined("depth 0 cannot separate the parts".into()));
    }
    let mut iterates = vec![omega.clone()];
    for _ in 0..depth {
        let next = iterates.last().expect("nonempty").slice()?;
        iterates.push(next);
    }
    // diffs[m] = |slice^{m+1} Ω − slice^m Ω|
    let diffs: Vec<f64> = (0..depth).map(|m| iterates[m + 1].max_abs_diff(&iterates[m])).collect();
    let settled_from = diffs.iter().rposition(|&d| d > tol.equality).map_or(0, |m| m + 1);
    if settled_from >= depth {
        return Err(undetermined(format!("slice iterates still change at depth {depth}")));
    }
    let m_star = settled_from;
    if 2 * m_star > depth + 1 {
        return Err(undetermined(format!(
            "slice iterates settle after {m_star} steps, depth {depth} is too shallow to separate the parts"
        )));
    }
    let horizon = depth - m_star;
    let limit = &iterates[m_star];
    for i in 0..=horizon {
        for j in 0..=horizon {
            if i.max(j) < m_star {
                continue;
            }
            let d = linalg::max_abs_diff(&limit.dense_block(i, j), &omega.dense_block(i, j));
            if d > tol.equality {
                return Err(undetermined(format!(
                    "limit of slice iterates disagrees with Ω at block ({i}, {j}) by {d:e}"
                )));
            }
        }
    }

    let ctx = omega.ctx();
    let mut essential_blocks = BTreeMap::new();
    for i in 0..=depth {
        for j in 0..=depth {
            let source = if i.max(j) <= horizon { limit } else { omega };
            if let Some(b) = source.block(i, j) {
                essential_blocks.insert((i, j), b.clone());
            }
        }
    }
    let essential = BlockOperatorMatrix { ctx, blocks: essential_blocks };
    let singular = omega.checked_sub(&essential)?;

    let defect = omega.restrict(depth - 1).checked_sub(&iterates[1])?;
    let telescoping_error = telescoping_error(&defect, &singular, horizon)?;
    let phi_error = phi_error(&defect, &singular, horizon.min(3));

    let h = state.exact_horizon();
    Ok(Decomposition {
        singular: StateHandle::trusted(singular, h),
        essential: StateHandle::trusted(essential, h),
        stabilized_at: m_star,
        horizon,
        telescoping_error,
        phi_error,
    })
}

/// Compares `Ω_s` with `Σ_i slice^i(D)` on levels `≤ horizon`.
fn telescoping_error(
    defect: &BlockOperatorMatrix,
    singular: &BlockOperatorMatrix,
    horizon: usize,
) -> Result<f64, DensityError> {
    let mut sum: BTreeMap<(usize, usize), DMatrix<C64>> = BTreeMap::new();
    let mut term = defect.clone();
    loop {
        for (&k, b) in term.blocks() {
            let d = b.to_dense();
            match sum.get_mut(&k) {
                Some(acc) => *acc += d,
                None => {
                    sum.insert(k, d);
                }
            }
        }
        if term.depth() == 0 {
            break;
        }
        term = term.slice()?;
    }
    let mut worst: f64 = 0.0;
    for i in 0..=horizon.min(defect.depth()) {
        for j in 0..=horizon.min(defect.depth()) {
            let expect = singular.dense_block(i, j);
            let d = match sum.get(&(i, j)) {
                Some(s) => linalg::max_abs_diff(s, &expect),
                None => linalg::max_abs(&expect),
            };
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

/// Checks `ρ_s(v_μ v_ν*) = tr(D · l(v_μ v_ν*)) = Σ_w ⟨D v_{μw}, v_{νw}⟩` for all
/// words of length `≤ levels`.
fn phi_error(defect: &BlockOperatorMatrix, singular: &BlockOperatorMatrix, levels: usize) -> f64 {
    let ctx = defect.ctx();
    let n = ctx.n();
    let words: Vec<Word> = (0..=levels.min(ctx.depth())).flat_map(|k| ctx.words(k).collect::<Vec<_>>()).collect();
    let mut worst: f64 = 0.0;
    for mu in &words {
        for nu in &words {
            let top = mu.len().max(nu.len());
            let mut phi = C64::default();
            for t in 0..=(ctx.depth() - top) {
                let Some(b) = defect.block(nu.len() + t, mu.len() + t) else { continue };
                let tails = n.pow(t as u32);
                for w in 0..tails {
                    phi += b.entry(nu.level_index() * tails + w, mu.level_index() * tails + w);
                }
            }
            let direct = singular.eval_monomial(mu, nu).unwrap_or_default();
            worst = worst.max((phi - direct).norm());
        }
    }
    worst
}
