//! Small dense helpers shared by the Fock and density layers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// `⟨x, y⟩`, linear in the first argument.
pub fn inner(x: &DVector<C64>, y: &DVector<C64>) -> C64 {
    y.dotc(x)
}

/// Eigenvalues of a Hermitian matrix in ascending order. Only the lower
/// triangle is read.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Partial trace over the last tensor factor of dimension `n`:
/// `out[x, y] = Σ_t m[x·n + t, y·n + t]`.
pub fn partial_trace_last(m: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    let (rows, cols) = (m.nrows() / n, m.ncols() / n);
    DMatrix::from_fn(rows, cols, |x, y| (0..n).map(|t| m[(x * n + t, y * n + t)]).sum())
}

/// `m ⊗ I_n`, with the identity as the last (least significant) factor.
pub fn kron_identity(m: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(m.nrows() * n, m.ncols() * n);
    for y in 0..m.ncols() {
        for x in 0..m.nrows() {
            let v = m[(x, y)];
            if v != C64::default() {
                for t in 0..n {
                    out[(x * n + t, y * n + t)] = v;
                }
            }
        }
    }
    out
}

/// `a ⊗ b` for vectors, first factor most significant.
pub fn kron_vec(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    let mut out = DVector::zeros(a.len() * b.len());
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}
