//! Random generators and reference computations shared by the integration
//! tests. The reference routines work on dense matrices with explicit word
//! arithmetic and do not go through the library's block code.

#![allow(dead_code)]

use std::f64::consts::TAU;

use fockstate::algebra::{AlgebraElement, Monomial, Word};
use fockstate::density::{Block, BlockOperatorMatrix};
use fockstate::fock::FockContext;
use fockstate::measures::{Atom, CircleMeasure};
use fockstate::product_states::UnitVectorSequence;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 0x5eed_f0c5;

/// Seeded generator; `FOCKSTATE_SEED` overrides the default, `salt` keeps
/// separate tests on separate streams.
pub fn rng(salt: u64) -> ChaCha8Rng {
    let seed = std::env::var("FOCKSTATE_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_SEED);
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn complex(rng: &mut impl Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn unit_vector(rng: &mut impl Rng, n: usize) -> DVector<C64> {
    let v = DVector::from_fn(n, |_, _| complex(rng));
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

pub fn matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| complex(rng))
}

pub fn word(rng: &mut impl Rng, n: usize, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    Word::new(n, (0..len).map(|_| rng.gen_range(1..=n)).collect()).unwrap()
}

pub fn monomial(rng: &mut impl Rng, n: usize, max_len: usize) -> AlgebraElement {
    AlgebraElement::from_monomial(Monomial { coeff: complex(rng), left: word(rng, n, max_len), right: word(rng, n, max_len) })
}

/// `Σ c_μ v_μ` over all words of length `≤ max_len`.
pub fn creation_polynomial(rng: &mut impl Rng, n: usize, max_len: usize) -> AlgebraElement {
    let ctx = FockContext::new(n, max_len).unwrap();
    ctx.basis().into_iter().fold(AlgebraElement::zero(n), |acc, mu| {
        let t = AlgebraElement::basic(mu, Word::empty(n)).unwrap().scale(complex(rng));
        &acc + &t
    })
}

pub fn point(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Up to `max_atoms` atoms with random angles and weights.
pub fn atomic_measure(rng: &mut impl Rng, max_atoms: usize) -> CircleMeasure {
    let k = rng.gen_range(1..=max_atoms);
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let atoms = raw.iter().map(|w| Atom { angle: rng.gen_range(0.0..TAU), weight: w / total });
    CircleMeasure::new(0.0, atoms.collect::<Vec<_>>()).unwrap()
}

/// Haar weight in `[0, 0.5]` plus up to `max_atoms` atoms.
pub fn mixed_measure(rng: &mut impl Rng, max_atoms: usize) -> CircleMeasure {
    let h = rng.gen_range(0.0..0.5);
    CircleMeasure::mixture(1.0 - h, &atomic_measure(rng, max_atoms), &CircleMeasure::haar()).unwrap()
}

/// An eventually periodic sequence with period exactly `p`: `p` generic unit
/// vectors repeated `reps` times with random phases, after a random prefix.
pub fn sequence(rng: &mut impl Rng, n: usize, max_prefix: usize, p: usize, reps: usize) -> UnitVectorSequence {
    let prefix_len = rng.gen_range(0..=max_prefix);
    let prefix = (0..prefix_len).map(|_| unit_vector(rng, n)).collect();
    let base: Vec<DVector<C64>> = (0..p).map(|_| unit_vector(rng, n)).collect();
    let cycle = (0..p * reps).map(|i| &base[i % p] * point(rng.gen_range(0.0..TAU))).collect();
    UnitVectorSequence::new(n, prefix, cycle).unwrap()
}

/// Random PSD matrix `G G^†` of the given rank.
pub fn psd(rng: &mut impl Rng, dim: usize, rank: usize) -> DMatrix<C64> {
    let g = matrix(rng, dim, rank);
    &g * g.adjoint()
}

/// Index of a word in the ordered basis of `ctx`.
pub fn index(ctx: FockContext, w: &Word) -> usize {
    ctx.index_of(w).unwrap()
}

/// Reference slice: `(ΣT)[x, y] = Σ_t T[x⧺t, y⧺t]`, computed on the dense
/// matrix of depth `K` and returned at depth `K − 1`.
pub fn reference_slice(ctx: FockContext, t: &DMatrix<C64>) -> DMatrix<C64> {
    let lower = ctx.with_depth(ctx.depth() - 1);
    let basis = lower.basis();
    let n = ctx.n();
    DMatrix::from_fn(basis.len(), basis.len(), |r, c| {
        (1..=n)
            .map(|letter| {
                let last = Word::new(n, vec![letter]).unwrap();
                let x = basis[r].concat(&last).unwrap();
                let y = basis[c].concat(&last).unwrap();
                t[(index(ctx, &x), index(ctx, &y))]
            })
            .sum()
    })
}

/// `Σ_{i ≥ 0} slice^i(D)` with `D` dense on levels `0..=K`.
pub fn reference_lambda_dual(ctx: FockContext, d: &DMatrix<C64>) -> DMatrix<C64> {
    let mut acc = d.clone();
    let mut term = d.clone();
    let mut level_ctx = ctx;
    while level_ctx.depth() > 0 {
        term = reference_slice(level_ctx, &term);
        level_ctx = level_ctx.with_depth(level_ctx.depth() - 1);
        let dim = term.nrows();
        let mut view = acc.view_mut((0, 0), (dim, dim));
        view += &term;
    }
    acc
}

/// A random finitely supported singular density matrix: `Σ_i slice^i(D)`
/// with `D ⪰ 0` living on levels `≤ support`, normalized to `ω(E_0) = 1`.
pub fn finitely_supported(rng: &mut impl Rng, ctx: FockContext, support: usize) -> DMatrix<C64> {
    let dim = ctx.dim();
    let low = ctx.corner_dim(support);
    let mut d = DMatrix::zeros(dim, dim);
    let rank = rng.gen_range(1..=low);
    d.view_mut((0, 0), (low, low)).copy_from(&psd(rng, low, rank));
    let omega = reference_lambda_dual(ctx, &d);
    let norm = omega[(0, 0)].re;
    omega / C64::new(norm, 0.0)
}

pub fn dense_matrix(ctx: FockContext, m: &DMatrix<C64>) -> BlockOperatorMatrix {
    BlockOperatorMatrix::from_dense(ctx, m).unwrap()
}

pub fn dense_block(m: DMatrix<C64>) -> Block {
    Block::Dense(m)
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Sum of `terms` random monomials.
pub fn element(rng: &mut impl Rng, n: usize, terms: usize, max_len: usize) -> AlgebraElement {
    (0..terms).fold(AlgebraElement::zero(n), |acc, _| &acc + &monomial(rng, n, max_len))
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
