//! Probability measures on the circle (Haar plus finitely many atoms), their
//! Fourier coefficients `σ̂(m) = ∫ z^m dσ(z)`, Toeplitz positivity of moment
//! windows, and recovery of atomic measures from finitely many moments.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

/// Total mass must be 1 within this.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Atoms closer than this (in radians) are the same point.
pub const ANGLE_TOLERANCE: f64 = 1e-9;

/// Toeplitz windows are PSD when the smallest eigenvalue is above `-HERGLOTZ_TOLERANCE`.
pub const HERGLOTZ_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("weight {0} is negative or not finite")]
    InvalidWeight(f64),

    #[error("angle {0} is not finite")]
    InvalidAngle(f64),

    #[error("total mass is {0}, expected 1")]
    NotProbability(f64),

    #[error("moment window of size {window} cannot pin down the measure (Toeplitz matrix has full rank)")]
    InsufficientMoments { window: usize },

    #[error("moments are not those of a finitely atomic measure (residual {residual:e})")]
    NotAtomic { residual: f64 },

    #[error("moment sequence needs τ(0) to be real, got {0}")]
    NonRealMass(C64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    /// Radians, canonicalized to `[0, 2π)`.
    pub angle: f64,
    pub weight: f64,
}

impl Atom {
    /// The point `e^{iθ}`.
    pub fn point(&self) -> C64 {
        C64::from_polar(1.0, self.angle)
    }
}

/// `haar_weight · Haar + Σ w_j δ_{z_j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleMeasure {
    haar_weight: f64,
    atoms: Vec<Atom>,
}

pub fn canonical_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if TAU - t < ANGLE_TOLERANCE {
        0.0
    } else {
        t
    }
}

impl CircleMeasure {
    /// Validates and canonicalizes: angles go to `[0, 2π)`, coincident atoms
    /// merge, zero-weight atoms are dropped, atoms are sorted by angle.
    pub fn new(haar_weight: f64, atoms: impl IntoIterator<Item = Atom>) -> Result<Self, MeasureError> {
        if !haar_weight.is_finite() || haar_weight < 0.0 {
            return Err(MeasureError::InvalidWeight(haar_weight));
        }
        let mut merged: Vec<Atom> = Vec::new();
        for a in atoms {
            if !a.weight.is_finite() || a.weight < 0.0 {
                return Err(MeasureError::InvalidWeight(a.weight));
            }
            if !a.angle.is_finite() {
                return Err(MeasureError::InvalidAngle(a.angle));
            }
            if a.weight == 0.0 {
                continue;
            }
            let angle = canonical_angle(a.angle);
            match merged.iter_mut().find(|b| angle_distance(b.angle, angle) < ANGLE_TOLERANCE) {
                Some(b) => b.weight += a.weight,
                None => merged.push(Atom { angle, weight: a.weight }),
            }
        }
        merged.sort_by(|a, b| a.angle.total_cmp(&b.angle));
        let total = haar_weight + merged.iter().map(|a| a.weight).sum::<f64>();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(MeasureError::NotProbability(total));
        }
        Ok(Self { haar_weight, atoms: merged })
    }

    pub fn haar() -> Self {
        Self { haar_weight: 1.0, atoms: Vec::new() }
    }

    /// Point mass at `e^{iθ}`.
    pub fn point(angle: f64) -> Self {
        Self { haar_weight: 0.0, atoms: vec![Atom { angle: canonical_angle(angle), weight: 1.0 }] }
    }

    /// Point mass at the unimodular `z`.
    pub fn point_at(z: C64) -> Self {
        Self::point(z.arg())
    }

    /// `t·a + (1 − t)·b` for `t ∈ [0, 1]`.
    pub fn mixture(t: f64, a: &Self, b: &Self) -> Result<Self, MeasureError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(MeasureError::InvalidWeight(t));
        }
        let scaled = |m: &Self, s: f64| m.atoms.iter().map(|x| Atom { angle: x.angle, weight: s * x.weight }).collect::<Vec<_>>();
        let atoms: Vec<Atom> = scaled(a, t).into_iter().chain(scaled(b, 1.0 - t)).collect();
        Self::new(t * a.haar_weight + (1.0 - t) * b.haar_weight, atoms)
    }

    pub fn haar_weight(&self) -> f64 {
        self.haar_weight
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_atomic(&self) -> bool {
        self.haar_weight == 0.0
    }

    /// `σ̂(m) = ∫ z^m dσ(z)`.
    pub fn fourier(&self, m: i64) -> C64 {
        let haar = if m == 0 { self.haar_weight } else { 0.0 };
        let atoms: C64 = self.atoms.iter().map(|a| a.weight * C64::from_polar(1.0, m as f64 * a.angle)).sum();
        C64::new(haar, 0.0) + atoms
    }

    /// `σ̂(0..=window)`.
    pub fn moments(&self, window: usize) -> MomentSequence {
        MomentSequence { values: (0..=window as i64).map(|m| self.fourier(m)).collect() }
    }

    /// Push-forward under `z ↦ ζ z`.
    pub fn rotate(&self, zeta: C64) -> Self {
        let phi = zeta.arg();
        let atoms = self.atoms.iter().map(|a| Atom { angle: a.angle + phi, weight: a.weight });
        Self::new(self.haar_weight, atoms.collect::<Vec<_>>()).expect("rotation keeps the mass")
    }

    /// Same measure up to `ANGLE_TOLERANCE` and `weight_tol`.
    pub fn approx_eq(&self, other: &Self, weight_tol: f64) -> bool {
        (self.haar_weight - other.haar_weight).abs() <= weight_tol
            && self.atoms.len() == other.atoms.len()
            && self.atoms.iter().all(|a| {
                other
                    .atoms
                    .iter()
                    .any(|b| angle_distance(a.angle, b.angle) < ANGLE_TOLERANCE && (a.weight - b.weight).abs() <= weight_tol)
            })
    }
}

fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// A window `τ(−A..=A)` stored as `τ(0..=A)`; negative indices are the
/// conjugates, so Hermitian symmetry holds by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSequence {
    values: Vec<C64>,
}

impl MomentSequence {
    /// From `τ(0), τ(1), …, τ(A)`.
    pub fn from_nonnegative(values: Vec<C64>) -> Self {
        Self { values }
    }

    /// The largest `A` with `τ(A)` stored; `None` for an empty window.
    pub fn window(&self) -> Option<usize> {
        self.values.len().checked_sub(1)
    }

    pub fn get(&self, a: i64) -> Option<C64> {
        let v = *self.values.get(a.unsigned_abs() as usize)?;
        Some(if a < 0 { v.conj() } else { v })
    }

    pub fn nonnegative(&self) -> &[C64] {
        &self.values
    }

    /// `[τ(a − b)]_{a,b = 0..size}`.
    pub fn toeplitz(&self, size: usize) -> DMatrix<C64> {
        DMatrix::from_fn(size, size, |a, b| self.get(a as i64 - b as i64).expect("inside window"))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.values.len() != other.values.len() {
            return f64::INFINITY;
        }
        self.values.iter().zip(&other.values).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HerglotzReport {
    pub positive: bool,
    pub min_eigenvalue: f64,
}

/// Positive definiteness of the full `(A+1)×(A+1)` Toeplitz window.
pub fn herglotz_check(tau: &MomentSequence) -> HerglotzReport {
    let size = tau.values.len();
    let min_eigenvalue = linalg::hermitian_eigenvalues(&tau.toeplitz(size)).first().copied().unwrap_or(0.0);
    HerglotzReport { positive: min_eigenvalue >= -HERGLOTZ_TOLERANCE, min_eigenvalue }
}

/// Recovers a finitely atomic probability measure from its moment window.
///
/// With `T = Σ w_j u_j u_j^†`, `u_j = (z_j^a)_a`, the rank of the Toeplitz
/// window is the number of atoms `r`. A kernel vector `c` of the leading
/// `(r+1)×(r+1)` window satisfies `Σ_b c_b conj(z_j)^b = 0`, so the atoms are
/// the conjugated roots of that polynomial. Weights come from a least-squares
/// fit and the result is accepted only if it reproduces every moment.
pub fn atomic_from_moments(tau: &MomentSequence) -> Result<CircleMeasure, MeasureError> {
    let window = tau.window().unwrap_or(0);
    let mass = tau.get(0).unwrap_or_default();
    if mass.im.abs() > MASS_TOLERANCE {
        return Err(MeasureError::NonRealMass(mass));
    }
    let size = window + 1;
    let full = tau.toeplitz(size);
    let eig = full.clone().symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1.0);
    let rank = eig.eigenvalues.iter().filter(|&&x| x > 1e-9 * scale).count();
    if rank == size {
        return Err(MeasureError::InsufficientMoments { window });
    }
    if rank == 0 {
        return Err(MeasureError::NotProbability(mass.re));
    }

    let lead = tau.toeplitz(rank + 1).symmetric_eigen();
    let min_idx = lead.eigenvalues.imin();
    let c: DVector<C64> = lead.eigenvectors.column(min_idx).into_owned();
    let roots = polynomial_roots(c.as_slice());
    let points: Vec<C64> = roots.iter().map(|y| y.conj() / y.norm().max(f64::MIN_POSITIVE)).collect();
    if points.len() != rank {
        return Err(MeasureError::NotAtomic { residual: f64::INFINITY });
    }

    let vander = DMatrix::from_fn(size, rank, |m, j| points[j].powu(m as u32));
    let rhs = DVector::from_iterator(size, (0..size).map(|m| tau.get(m as i64).expect("inside window")));
    let weights = vander
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|_| MeasureError::NotAtomic { residual: f64::INFINITY })?;
    let residual = (&vander * &weights - &rhs).camax();
    let imag = weights.iter().fold(0.0f64, |m, w| m.max(w.im.abs()));
    if residual > 1e-8 || imag > 1e-8 || weights.iter().any(|w| w.re < -1e-8) {
        return Err(MeasureError::NotAtomic { residual: residual.max(imag) });
    }
    let atoms: Vec<Atom> =
        points.iter().zip(weights.iter()).map(|(z, w)| Atom { angle: z.arg(), weight: w.re.max(0.0) }).collect();
    let total: f64 = atoms.iter().map(|a| a.weight).sum();
    let normalized = atoms.into_iter().map(|a| Atom { weight: a.weight / total, ..a });
    let measure = CircleMeasure::new(0.0, normalized.collect::<Vec<_>>())?;
    let check = measure.moments(window).max_abs_diff(tau);
    if check > 1e-8 {
        return Err(MeasureError::NotAtomic { residual: check });
    }
    Ok(measure)
}

/// Roots of `Σ_b c_b y^b` (ascending coefficients) via the companion matrix.
fn polynomial_roots(c: &[C64]) -> Vec<C64> {
    let tol = 1e-13 * c.iter().fold(0.0f64, |m, x| m.max(x.norm()));
    let Some(deg) = c.iter().rposition(|x| x.norm() > tol) else {
        return Vec::new();
    };
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let mut companion = DMatrix::<C64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -c[i] / lead;
    }
    companion.schur().eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn fourier_examples() {
        assert_eq!(CircleMeasure::haar().fourier(3), C64::new(0.0, 0.0));
        assert_eq!(CircleMeasure::haar().fourier(0), C64::new(1.0, 0.0));
        let p = CircleMeasure::point(0.0);
        for m in -4..=4 {
            assert!(close(p.fourier(m), C64::new(1.0, 0.0), 1e-15));
        }
        let two = CircleMeasure::new(0.0, [Atom { angle: 0.0, weight: 0.5 }, Atom { angle: PI, weight: 0.5 }]).unwrap();
        assert!(close(two.fourier(1), C64::new(0.0, 0.0), 1e-15));
        assert!(close(two.fourier(2), C64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn fourier_negative_index_is_conjugate() {
        let m = CircleMeasure::new(0.2, [Atom { angle: 0.3, weight: 0.5 }, Atom { angle: 4.0, weight: 0.3 }]).unwrap();
        for k in 0..6 {
            assert!(close(m.fourier(-k), m.fourier(k).conj(), 1e-15));
        }
    }

    #[test]
    fn validation_and_canonical_form() {
        assert!(matches!(CircleMeasure::new(0.5, []), Err(MeasureError::NotProbability(_))));
        assert!(matches!(CircleMeasure::new(-0.1, []), Err(MeasureError::InvalidWeight(_))));
        let m = CircleMeasure::new(0.0, [Atom { angle: -PI / 2.0, weight: 0.25 }, Atom { angle: 1.5 * PI, weight: 0.75 }])
            .unwrap();
        assert_eq!(m.atoms().len(), 1);
        assert!((m.atoms()[0].angle - 1.5 * PI).abs() < 1e-12);
        assert_eq!(CircleMeasure::point(TAU).atoms()[0].angle, 0.0);
    }

    #[test]
    fn herglotz_examples() {
        let ones = MomentSequence::from_nonnegative(vec![C64::new(1.0, 0.0); 4]);
        assert!(herglotz_check(&ones).positive);
        let bad = MomentSequence::from_nonnegative(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
        let r = herglotz_check(&bad);
        assert!(!r.positive && (r.min_eigenvalue + 1.0).abs() < 1e-12);
        let mixed = CircleMeasure::new(0.3, [Atom { angle: 1.0, weight: 0.7 }]).unwrap();
        for a in 1..=8 {
            assert!(herglotz_check(&mixed.moments(a)).positive);
        }
    }

    #[test]
    fn recovers_single_atom() {
        let z = C64::from_polar(1.0, 2.2);
        let tau = MomentSequence::from_nonnegative((0..4).map(|a| z.powu(a)).collect());
        let m = atomic_from_moments(&tau).unwrap();
        assert!(m.approx_eq(&CircleMeasure::point(2.2), 1e-9));
    }

    #[test]
    fn recovers_two_atoms() {
        let m = CircleMeasure::new(0.0, [Atom { angle: 0.4, weight: 0.5 }, Atom { angle: 3.9, weight: 0.5 }]).unwrap();
        let tau = m.moments(3);
        let r = atomic_from_moments(&tau).unwrap();
        assert!(r.moments(3).max_abs_diff(&tau) < 1e-8);
        assert!(r.approx_eq(&m, 1e-8));
    }

    #[test]
    fn haar_moments_are_not_atomic() {
        let tau = CircleMeasure::haar().moments(2);
        assert!(matches!(atomic_from_moments(&tau), Err(MeasureError::InsufficientMoments { window: 2 })));
    }

    #[test]
    fn rotation_moves_atoms() {
        let m = CircleMeasure::point(0.5).rotate(C64::from_polar(1.0, 1.0));
        assert!(m.approx_eq(&CircleMeasure::point(1.5), 1e-12));
        assert_eq!(CircleMeasure::haar().rotate(C64::i()), CircleMeasure::haar());
    }
}
