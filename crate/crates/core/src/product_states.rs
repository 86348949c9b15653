//! Product states of the fixed-point algebra `F_n` built from eventually
//! periodic unit-vector sequences, and their extensions `ρ_σ` to `E_n`
//! parameterized by probability measures on the circle.
//!
//! With `𝐞_k = e_1 ⊗ ⋯ ⊗ e_k`, the extension has density matrix blocks
//! `Ω_{ij} = λ_{j,i} |𝐞_i⟩⟨𝐞_j|` where
//! `λ_{k,l} = σ̂((k−l)/p) Π_{i≥1} ⟨e_{l+i}, e_{k+i}⟩` on the period lattice
//! `p | k − l` and `0` off it.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::algebra::UNIMODULAR_TOLERANCE;
use crate::density::{Block, BlockOperatorMatrix, DensityError, StateHandle};
use crate::fock::{FockContext, FockOperator};
use crate::linalg;
use crate::measures::{CircleMeasure, MomentSequence};

/// Vectors must have norm 1 within this.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// `|⟨e_i, e_{i+p}⟩|` counts as 1 within this when detecting the period.
pub const PERIOD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SequenceError {
    #[error("vector {index} has dimension {found}, expected {expected}")]
    Dimension { index: usize, found: usize, expected: usize },

    #[error("vector {index} has norm {norm}, expected 1")]
    NotUnit { index: usize, norm: f64 },

    #[error("the cycle of an eventually periodic sequence cannot be empty")]
    EmptyCycle,

    #[error("sequence is aperiodic")]
    Aperiodic,

    #[error("dimension of the sequence ({sequence}) does not match the Fock space ({space})")]
    AlphabetMismatch { sequence: usize, space: usize },

    #[error("moment {moment} needs depth {needed}, state has depth {depth}")]
    HorizonTooSmall { moment: usize, needed: usize, depth: usize },

    #[error("tail product vanishes for moment {0}")]
    VanishingTail(usize),

    #[error("gauge parameter must be unimodular, got |λ| = {modulus}")]
    NotUnimodular { modulus: f64 },

    #[error(transparent)]
    Density(#[from] DensityError),
}

/// `e_1, e_2, …` given as a finite prefix followed by a repeating cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVectorSequence {
    n: usize,
    prefix: Vec<DVector<C64>>,
    cycle: Vec<DVector<C64>>,
}

/// Smallest shift `p` with `|⟨e_i, e_{i+p}⟩| = 1` along the tail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Period {
    Periodic(usize),
    Aperiodic,
}

impl UnitVectorSequence {
    pub fn new(n: usize, prefix: Vec<DVector<C64>>, cycle: Vec<DVector<C64>>) -> Result<Self, SequenceError> {
        if cycle.is_empty() {
            return Err(SequenceError::EmptyCycle);
        }
        for (idx, v) in prefix.iter().chain(&cycle).enumerate() {
            if v.len() != n {
                return Err(SequenceError::Dimension { index: idx + 1, found: v.len(), expected: n });
            }
            let norm = v.norm();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(SequenceError::NotUnit { index: idx + 1, norm });
            }
        }
        Ok(Self { n, prefix, cycle })
    }

    /// The constant sequence `(e, e, e, …)`.
    pub fn constant(e: DVector<C64>) -> Result<Self, SequenceError> {
        Self::new(e.len(), Vec::new(), vec![e])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prefix(&self) -> &[DVector<C64>] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[DVector<C64>] {
        &self.cycle
    }

    /// `e_k` for `k ≥ 1`.
    pub fn get(&self, k: usize) -> &DVector<C64> {
        assert!(k >= 1, "sequences are indexed from 1");
        let p = self.prefix.len();
        if k <= p {
            &self.prefix[k - 1]
        } else {
            &self.cycle[(k - p - 1) % self.cycle.len()]
        }
    }

    /// `Σ_i (1 − |⟨e_i, e_{i+p}⟩|)` converges iff every tail term vanishes, so
    /// only one pass over the cycle is needed for each candidate `p`.
    pub fn period(&self) -> Period {
        let start = self.prefix.len() + 1;
        let len = self.cycle.len();
        (1..=len)
            .find(|&p| {
                (start..start + len)
                    .all(|i| (1.0 - linalg::inner(self.get(i), self.get(i + p)).norm()).abs() <= PERIOD_TOLERANCE)
            })
            .map_or(Period::Aperiodic, Period::Periodic)
    }

    /// `𝐞_k = e_1 ⊗ ⋯ ⊗ e_k`, with `𝐞_0 = 1`.
    pub fn product_vector(&self, k: usize) -> DVector<C64> {
        (1..=k).fold(DVector::from_element(1, C64::new(1.0, 0.0)), |acc, i| linalg::kron_vec(&acc, self.get(i)))
    }

    fn product_vectors(&self, depth: usize) -> Vec<Arc<DVector<C64>>> {
        let mut out = Vec::with_capacity(depth + 1);
        let mut acc = DVector::from_element(1, C64::new(1.0, 0.0));
        out.push(Arc::new(acc.clone()));
        for i in 1..=depth {
            acc = linalg::kron_vec(&acc, self.get(i));
            out.push(Arc::new(acc.clone()));
        }
        out
    }

    /// Rephases so that `⟨e_i, e_{i+p}⟩ ≥ 0` for every `i`.
    ///
    /// Along the tail `e_{i+p}` is a phase times `e_i`, so the tail is replaced
    /// by the exactly periodic repetition of its first `p` vectors. The prefix
    /// is then rephased backwards from its last entry.
    pub fn rephase(&self) -> Result<PhasedSequence, SequenceError> {
        let Period::Periodic(p) = self.period() else {
            return Err(SequenceError::Aperiodic);
        };
        let plen = self.prefix.len();
        let cycle: Vec<DVector<C64>> = (plen + 1..=plen + p).map(|i| self.get(i).clone()).collect();
        let mut prefix = self.prefix.clone();
        for i in (0..plen).rev() {
            let next = if i + p < plen { &prefix[i + p] } else { &cycle[(i + p - plen) % p] };
            let t = linalg::inner(&prefix[i], next);
            if t.norm() > PERIOD_TOLERANCE && (t.im != 0.0 || t.re < 0.0) {
                let c = t.conj() / t.norm();
                prefix[i] *= c;
            }
        }
        Ok(PhasedSequence { seq: Self { n: self.n, prefix, cycle }, period: p })
    }

    /// The gauge-invariant product state `ρ ∘ Φ`: diagonal blocks
    /// `Ω_kk = |𝐞_k⟩⟨𝐞_k|`.
    pub fn product_state(&self, ctx: FockContext) -> Result<StateHandle, SequenceError> {
        self.check_ctx(ctx)?;
        let vectors = self.product_vectors(ctx.depth());
        let blocks = (0..=ctx.depth()).map(|k| {
            let v = vectors[k].clone();
            ((k, k), Block::Outer { coeff: C64::new(1.0, 0.0), left: v.clone(), right: v })
        });
        Ok(StateHandle::new(BlockOperatorMatrix::from_blocks(ctx, blocks.collect::<Vec<_>>())?)?)
    }

    fn check_ctx(&self, ctx: FockContext) -> Result<(), SequenceError> {
        if ctx.n() != self.n {
            Err(SequenceError::AlphabetMismatch { sequence: self.n, space: ctx.n() })
        } else {
            Ok(())
        }
    }
}

/// A sequence rephased along its period `p`: the tail is exactly periodic
/// with cycle length `p` and `⟨e_i, e_{i+p}⟩ ≥ 0` everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasedSequence {
    seq: UnitVectorSequence,
    period: usize,
}

impl PhasedSequence {
    pub fn sequence(&self) -> &UnitVectorSequence {
        &self.seq
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn prefix_len(&self) -> usize {
        self.seq.prefix.len()
    }

    pub fn get(&self, k: usize) -> &DVector<C64> {
        self.seq.get(k)
    }

    /// `⟨e_i, e_j⟩`, exactly 1 when both indices lie in the tail and differ by
    /// a multiple of the period.
    pub fn overlap(&self, i: usize, j: usize) -> C64 {
        let plen = self.prefix_len();
        if i > plen && j > plen && i.abs_diff(j).is_multiple_of(self.period) {
            C64::new(1.0, 0.0)
        } else {
            linalg::inner(self.get(i), self.get(j))
        }
    }

    /// `Π_{i≥1} ⟨e_{l+i}, e_{k+i}⟩` for `p | k − l`. Factors with both indices
    /// in the tail are 1, so the product stops at the prefix. Multiplication
    /// runs from the innermost factor outwards, which makes the recursion
    /// `λ_{k,l} = λ_{k+1,l+1}·⟨e_{l+1}, e_{k+1}⟩` hold bit for bit.
    pub fn tail_product(&self, k: usize, l: usize) -> C64 {
        let m = k.min(l);
        let plen = self.prefix_len();
        let mut x = C64::new(1.0, 0.0);
        for i in (1..=plen.saturating_sub(m)).rev() {
            x *= self.overlap(l + i, k + i);
        }
        x
    }

    pub fn product_vector(&self, k: usize) -> DVector<C64> {
        self.seq.product_vector(k)
    }
}

/// `λ_{k,l}` for `0 ≤ k, l ≤ K`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionCoefficients {
    period: usize,
    table: DMatrix<C64>,
}

impl ExtensionCoefficients {
    pub fn compute(seq: &PhasedSequence, sigma: &CircleMeasure, depth: usize) -> Self {
        let p = seq.period();
        let plen = seq.prefix_len();
        let table = DMatrix::from_fn(depth + 1, depth + 1, |k, l| {
            if k.abs_diff(l) % p != 0 {
                return C64::default();
            }
            let base = sigma.fourier((k as i64 - l as i64) / p as i64);
            if k.min(l) >= plen {
                base
            } else {
                let mut x = base;
                for i in (1..=plen - k.min(l)).rev() {
                    x *= seq.overlap(l + i, k + i);
                }
                x
            }
        });
        Self { period: p, table }
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn depth(&self) -> usize {
        self.table.nrows() - 1
    }

    pub fn get(&self, k: usize, l: usize) -> C64 {
        self.table[(k, l)]
    }

    /// `max |λ_{k,l} − λ_{k+1,l+1}⟨e_{l+1}, e_{k+1}⟩|` over `k, l < K`.
    pub fn recursion_defect(&self, seq: &PhasedSequence) -> f64 {
        let d = self.depth();
        let mut worst: f64 = 0.0;
        for k in 0..d {
            for l in 0..d {
                let rhs = self.get(k + 1, l + 1) * seq.overlap(l + 1, k + 1);
                worst = worst.max((self.get(k, l) - rhs).norm());
            }
        }
        worst
    }

    /// Largest `|λ_{k,l}|` with `p ∤ k − l`.
    pub fn off_lattice_max(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..=self.depth() {
            for l in 0..=self.depth() {
                if k.abs_diff(l) % self.period != 0 {
                    worst = worst.max(self.get(k, l).norm());
                }
            }
        }
        worst
    }
}

/// An extension `ρ_σ` together with the data it was built from.
#[derive(Clone, Debug)]
pub struct Extension {
    pub state: StateHandle,
    /// `None` for aperiodic sequences, whose only extension is `ρ ∘ Φ`.
    pub phased: Option<PhasedSequence>,
    pub coefficients: Option<ExtensionCoefficients>,
    /// Set when the product state has exactly one extension.
    pub is_unique_extension: bool,
}

/// The extension `ρ_σ` of the product state of `seq` on levels `0..=K`.
pub fn extend(seq: &UnitVectorSequence, sigma: &CircleMeasure, ctx: FockContext) -> Result<Extension, SequenceError> {
    seq.check_ctx(ctx)?;
    let phased = match seq.rephase() {
        Ok(p) => p,
        Err(SequenceError::Aperiodic) => {
            return Ok(Extension {
                state: seq.product_state(ctx)?,
                phased: None,
                coefficients: None,
                is_unique_extension: true,
            });
        }
        Err(e) => return Err(e),
    };
    let depth = ctx.depth();
    let coefficients = ExtensionCoefficients::compute(&phased, sigma, depth);
    let vectors = phased.seq.product_vectors(depth);
    let mut blocks = Vec::new();
    for i in 0..=depth {
        for j in 0..=depth {
            let coeff = coefficients.get(j, i);
            if coeff != C64::default() {
                blocks.push(((i, j), Block::Outer { coeff, left: vectors[i].clone(), right: vectors[j].clone() }));
            }
        }
    }
    let state = StateHandle::new(BlockOperatorMatrix::from_blocks(ctx, blocks)?)?;
    Ok(Extension { state, phased: Some(phased), coefficients: Some(coefficients), is_unique_extension: false })
}

/// `ρ ∘ γ_λ`. For a point-measure extension at `z` this is the extension at
/// `λ^p z`.
pub fn gauge_orbit(state: &StateHandle, lambda: C64) -> Result<StateHandle, SequenceError> {
    let modulus = lambda.norm();
    if (modulus - 1.0).abs() > UNIMODULAR_TOLERANCE {
        return Err(SequenceError::NotUnimodular { modulus });
    }
    Ok(state.gauge(lambda)?)
}

/// Reads `σ̂(a)` for `0 ≤ a ≤ a_max` back off an extension:
/// `ρ(𝐞_{P+ap} 𝐞_P*) = σ̂(a) · Π_{i>P} ⟨e_i, e_{i+ap}⟩`, and the product is 1
/// for a rephased sequence with prefix length `P`.
pub fn recover_measure_moments(
    state: &StateHandle,
    seq: &PhasedSequence,
    a_max: usize,
) -> Result<MomentSequence, SequenceError> {
    let ctx = state.ctx();
    seq.seq.check_ctx(ctx)?;
    let plen = seq.prefix_len();
    let p = seq.period();
    let needed = plen + a_max * p;
    if needed > state.depth() {
        return Err(SequenceError::HorizonTooSmall { moment: a_max, needed, depth: state.depth() });
    }
    let base = seq.product_vector(plen);
    let mut values = Vec::with_capacity(a_max + 1);
    let mut top = base.clone();
    for a in 0..=a_max {
        if a > 0 {
            for i in 1..=p {
                top = linalg::kron_vec(&top, seq.get(plen + (a - 1) * p + i));
            }
        }
        let tail = seq.tail_product(plen + a * p, plen);
        if tail.norm() < 1e-300 {
            return Err(SequenceError::VanishingTail(a));
        }
        let value = state.omega().pair(&top, plen + a * p, &base, plen);
        values.push(value / tail);
    }
    Ok(MomentSequence::from_nonnegative(values))
}

/// `ω(B*B)` evaluated through the vectors `f_{c,a}` instead of `Ω`:
///
/// `Σ_c [ h Σ_a ‖f_{c,a}‖² ‖u_{c,a}‖² + Σ_j w_j ‖Σ_a conj(z_j)^a f_{c,a} ⊗ u_{c,a}‖² ]`
///
/// where `u_{c,a} = B 𝐞_{ap+c}`, `h` is the Haar weight, the atoms are
/// `w_j δ_{z_j}`, and `⟨f_{c,b}, f_{c,a}⟩ = Π_{i≥1} ⟨e_{bp+c+i}, e_{ap+c+i}⟩`.
pub fn gram_form_energy(seq: &PhasedSequence, sigma: &CircleMeasure, b: &FockOperator) -> Result<f64, SequenceError> {
    let ctx = b.ctx();
    seq.seq.check_ctx(ctx)?;
    let p = seq.period();
    let depth = ctx.depth();
    let embedded: Vec<DVector<C64>> = (0..=depth)
        .map(|k| {
            let mut v = DVector::zeros(ctx.dim());
            v.rows_mut(ctx.level_offset(k), ctx.level_dim(k)).copy_from(&seq.product_vector(k));
            b.apply(&v)
        })
        .collect();
    let mut total = 0.0;
    for c in 0..p.min(depth + 1) {
        let levels: Vec<usize> = (c..=depth).step_by(p).collect();
        let f_gram = DMatrix::from_fn(levels.len(), levels.len(), |x, y| seq.tail_product(levels[y], levels[x]));
        let u_gram = DMatrix::from_fn(levels.len(), levels.len(), |x, y| linalg::inner(&embedded[levels[x]], &embedded[levels[y]]));
        // ⟨f_a ⊗ u_a, f_b ⊗ u_b⟩ with f_gram[(a, b)] = ⟨f_a, f_b⟩
        let joint = f_gram.component_mul(&u_gram);
        let haar: f64 = (0..levels.len()).map(|a| joint[(a, a)].re).sum();
        total += sigma.haar_weight() * haar;
        for atom in sigma.atoms() {
            let coeffs = DVector::from_fn(levels.len(), |a, _| atom.point().conj().powu(a as u32));
            // ‖Σ_a c_a X_a‖² = Σ_{a,b} c_a conj(c_b) ⟨X_a, X_b⟩
            let norm2: C64 = (0..levels.len())
                .flat_map(|a| (0..levels.len()).map(move |b| (a, b)))
                .map(|(a, bb)| coeffs[a] * coeffs[bb].conj() * joint[(a, bb)])
                .sum();
            total += atom.weight * norm2.re;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{parse_expression, AlgebraElement, Word};
    use crate::density::{classify, is_decreasing, is_positive, Classification, Tolerances};
    use std::f64::consts::PI;

    fn vec2(a: C64, b: C64) -> DVector<C64> {
        DVector::from_vec(vec![a, b])
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn basis(n: usize, i: usize) -> DVector<C64> {
        let mut v = DVector::zeros(n);
        v[i - 1] = c(1.0, 0.0);
        v
    }

    fn unit(v: DVector<C64>) -> DVector<C64> {
        let n = v.norm();
        v / C64::new(n, 0.0)
    }

    #[test]
    fn period_examples() {
        let f = unit(vec2(c(1.0, 0.0), c(1.0, 1.0)));
        let g = vec2(f[1].conj() * -1.0, f[0].conj());
        assert!(linalg::inner(&f, &g).norm() < 1e-15);
        assert_eq!(UnitVectorSequence::constant(f.clone()).unwrap().period(), Period::Periodic(1));
        let fg = UnitVectorSequence::new(2, vec![], vec![f.clone(), g]).unwrap();
        assert_eq!(fg.period(), Period::Periodic(2));
        let phased = UnitVectorSequence::new(2, vec![], vec![f.clone(), &f * C64::i()]).unwrap();
        assert_eq!(phased.period(), Period::Periodic(1));
        for i in 1..=100 {
            assert!((1.0 - linalg::inner(phased.get(i), phased.get(i + 1)).norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn validation() {
        assert!(matches!(UnitVectorSequence::new(2, vec![], vec![]), Err(SequenceError::EmptyCycle)));
        let long = vec2(c(1.0, 0.0), c(1.0, 0.0));
        assert!(matches!(UnitVectorSequence::new(2, vec![], vec![long]), Err(SequenceError::NotUnit { .. })));
        assert!(matches!(
            UnitVectorSequence::new(2, vec![], vec![basis(3, 1)]),
            Err(SequenceError::Dimension { .. })
        ));
    }

    #[test]
    fn rephase_examples() {
        let f = unit(vec2(c(0.6, 0.0), c(0.0, 0.8)));
        let seq = UnitVectorSequence::new(2, vec![], vec![f.clone(), &f * C64::i(), &f * c(-1.0, 0.0)]).unwrap();
        let ph = seq.rephase().unwrap();
        assert_eq!(ph.period(), 1);
        for i in 1..10 {
            assert!((ph.get(i) - &f).norm() < 1e-15);
        }
        let g = unit(vec2(c(1.0, 0.0), c(2.0, 0.0)));
        let plain = UnitVectorSequence::new(2, vec![basis(2, 1)], vec![g.clone()]).unwrap();
        let ph = plain.rephase().unwrap();
        assert_eq!(ph.sequence(), &plain);
    }

    #[test]
    fn rephased_prefix_has_nonnegative_overlaps() {
        let a = unit(vec2(c(0.3, 0.4), c(-0.2, 0.7)));
        let b = unit(vec2(c(-1.0, 0.5), c(0.1, 0.2)));
        let t = unit(vec2(c(0.9, -0.1), c(0.3, 0.3)));
        let u = unit(vec2(c(0.1, 0.2), c(-0.5, 0.4)));
        let seq = UnitVectorSequence::new(2, vec![a, b], vec![t, u]).unwrap();
        let ph = seq.rephase().unwrap();
        assert_eq!(ph.period(), 2);
        for i in 1..=6 {
            let o = linalg::inner(ph.get(i), ph.get(i + 2));
            assert!(o.im.abs() < 1e-15 && o.re >= 0.0, "{i}: {o}");
        }
    }

    #[test]
    fn product_state_values() {
        let e = unit(vec2(c(0.6, 0.0), c(0.0, 0.8)));
        let f = unit(vec2(c(1.0, 0.0), c(1.0, 0.0)));
        let seq = UnitVectorSequence::new(2, vec![e.clone()], vec![f.clone()]).unwrap();
        let ctx = FockContext::new(2, 3).unwrap();
        let s = seq.product_state(ctx).unwrap();
        assert!((s.eval(&AlgebraElement::one(2)).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let mu = Word::new(2, vec![2, 1, 1]).unwrap();
        let expect = e[1].norm_sqr() * f[0].norm_sqr() * f[0].norm_sqr();
        assert!((s.omega().eval_monomial(&mu, &mu).unwrap() - c(expect, 0.0)).norm() < 1e-15);
        for k in 0..=3 {
            assert!((s.trace_profile()[k] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn coherent_extension_values() {
        let ctx = FockContext::new(2, 4).unwrap();
        let z = C64::from_polar(1.0, 0.7);
        let seq = UnitVectorSequence::constant(basis(2, 1)).unwrap();
        let ext = extend(&seq, &CircleMeasure::point_at(z), ctx).unwrap();
        for k in 1..=4u32 {
            let x = parse_expression(&format!("v[{}]", vec!["1"; k as usize].join(",")), 2).unwrap();
            assert!((ext.state.eval(&x).unwrap() - z.powu(k)).norm() < 1e-14);
        }
        assert!(!ext.is_unique_extension);
        let tol = Tolerances::default();
        assert!(is_positive(ext.state.omega(), &tol).passed);
        assert!(is_decreasing(ext.state.omega(), &tol).unwrap().passed);
        assert_eq!(classify(&ext.state, &tol).classification, Classification::Essential);
    }

    #[test]
    fn haar_extension_is_the_product_state() {
        let ctx = FockContext::new(2, 4).unwrap();
        let e = unit(vec2(c(0.6, 0.1), c(0.2, 0.7)));
        let f = unit(vec2(c(1.0, -1.0), c(0.5, 0.0)));
        let seq = UnitVectorSequence::new(2, vec![e], vec![f.clone(), &f * C64::from_polar(1.0, 1.0)]).unwrap();
        let ext = extend(&seq, &CircleMeasure::haar(), ctx).unwrap();
        let prod = seq.product_state(ctx).unwrap();
        assert!(ext.state.omega().max_abs_diff(prod.omega()) < 1e-12);
    }

    #[test]
    fn coefficients_obey_recursion_and_lattice() {
        let a = unit(vec2(c(0.3, 0.4), c(-0.2, 0.7)));
        let t = unit(vec2(c(0.9, -0.1), c(0.3, 0.3)));
        let u = unit(vec2(c(0.1, 0.2), c(-0.5, 0.4)));
        let seq = UnitVectorSequence::new(2, vec![a.clone(), a], vec![t, u]).unwrap();
        let ph = seq.rephase().unwrap();
        let sigma = CircleMeasure::mixture(0.5, &CircleMeasure::point(1.0), &CircleMeasure::haar()).unwrap();
        let coeffs = ExtensionCoefficients::compute(&ph, &sigma, 6);
        assert_eq!(coeffs.recursion_defect(&ph), 0.0);
        assert_eq!(coeffs.off_lattice_max(), 0.0);
        for k in 0..=6 {
            assert!((coeffs.get(k, k) - c(1.0, 0.0)).norm() < 1e-12);
            for l in 0..=6 {
                assert!((coeffs.get(k, l) - coeffs.get(l, k).conj()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn gauge_orbit_moves_point_mass() {
        let ctx = FockContext::new(2, 4).unwrap();
        let seq = UnitVectorSequence::constant(unit(vec2(c(1.0, 0.0), c(0.0, 1.0)))).unwrap();
        let at_one = extend(&seq, &CircleMeasure::point(0.0), ctx).unwrap();
        let moved = gauge_orbit(&at_one.state, C64::i()).unwrap();
        let at_i = extend(&seq, &CircleMeasure::point(PI / 2.0), ctx).unwrap();
        assert!(moved.omega().max_abs_diff(at_i.state.omega()) < 1e-12);
        assert!(gauge_orbit(&at_one.state, c(1.0, 1.0)).is_err());
    }

    #[test]
    fn moments_round_trip() {
        let ctx = FockContext::new(2, 9).unwrap();
        let seq = UnitVectorSequence::new(
            2,
            vec![unit(vec2(c(0.3, 0.1), c(0.9, 0.0)))],
            vec![basis(2, 1), unit(vec2(c(1.0, 0.0), c(0.0, 1.0)))],
        )
        .unwrap();
        let sigma = CircleMeasure::mixture(0.3, &CircleMeasure::point(2.0), &CircleMeasure::point(-0.5)).unwrap();
        let ext = extend(&seq, &sigma, ctx).unwrap();
        let ph = ext.phased.as_ref().unwrap();
        let tau = recover_measure_moments(&ext.state, ph, 4).unwrap();
        assert!(tau.max_abs_diff(&sigma.moments(4)) < 1e-10);
        assert!(matches!(recover_measure_moments(&ext.state, ph, 5), Err(SequenceError::HorizonTooSmall { .. })));
    }

    #[test]
    fn gram_form_matches_density() {
        let ctx = FockContext::new(2, 3).unwrap();
        let seq = UnitVectorSequence::new(
            2,
            vec![unit(vec2(c(0.3, 0.1), c(0.9, 0.0)))],
            vec![unit(vec2(c(0.2, 0.5), c(-0.4, 0.3))), unit(vec2(c(1.0, 0.0), c(0.0, 1.0)))],
        )
        .unwrap();
        let sigma = CircleMeasure::new(
            0.25,
            [crate::measures::Atom { angle: 0.4, weight: 0.5 }, crate::measures::Atom { angle: 2.5, weight: 0.25 }],
        )
        .unwrap();
        let ext = extend(&seq, &sigma, ctx).unwrap();
        let b = FockOperator::from_blocks(
            ctx,
            (0..=3).flat_map(|i| (0..=3).map(move |j| (i, j))).map(|(i, j)| {
                let m = DMatrix::from_fn(ctx.level_dim(i), ctx.level_dim(j), |r, s| {
                    C64::new(((r * 7 + s * 3 + i) % 5) as f64 - 2.0, ((r + 2 * s + j) % 3) as f64 - 1.0)
                });
                ((i, j), m)
            }),
        )
        .unwrap();
        let bb = b.adjoint().mul(&b).unwrap();
        let via_omega = ext.state.omega().expectation(&bb).unwrap();
        let via_gram = gram_form_energy(ext.phased.as_ref().unwrap(), &sigma, &b).unwrap();
        assert!(via_omega.im.abs() < 1e-9);
        assert!((via_omega.re - via_gram).abs() < 1e-9 * via_gram.abs().max(1.0), "{via_omega} vs {via_gram}");
    }
}
