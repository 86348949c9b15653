//! Deterministic inputs for the benchmarks.

use fockstate::algebra::{parse_expression, Word};
use fockstate::measures::Atom;
use fockstate::{BlockOperatorMatrix, CircleMeasure, FockContext, FockOperator, StateHandle, UnitVectorSequence, C64};
use nalgebra::DVector;

fn phase(w: &Word) -> f64 {
    w.letters().iter().enumerate().map(|(k, &l)| 0.37 * (k + 1) as f64 * l as f64).sum()
}

/// A dense Hermitian matrix on every level pair; not a state.
pub fn hermitian(ctx: FockContext) -> BlockOperatorMatrix {
    BlockOperatorMatrix::from_functional(ctx, |mu, nu| {
        C64::from_polar(1.0 / (1 + mu.len() + nu.len()) as f64, phase(mu) - phase(nu))
    })
}

/// Period-`p` sequence in `C^n` with a one-vector prefix.
pub fn sequence(n: usize, p: usize) -> UnitVectorSequence {
    let vector = |k: usize| {
        let v = DVector::from_fn(n, |i, _| C64::from_polar(1.0 + ((i + k) % 3) as f64, 0.9 * (i * k) as f64));
        let norm = v.norm();
        v / C64::new(norm, 0.0)
    };
    UnitVectorSequence::new(n, vec![vector(0)], (1..=p).map(vector).collect()).expect("unit vectors")
}

pub fn measure() -> CircleMeasure {
    let atoms = [Atom { angle: 0.4, weight: 0.3 }, Atom { angle: 2.9, weight: 0.2 }];
    CircleMeasure::new(0.5, atoms).expect("probability measure")
}

/// Half vacuum, half extension.
pub fn mixture(ctx: FockContext) -> StateHandle {
    let ext = fockstate::product_states::extend(&sequence(ctx.n(), 2), &measure(), ctx).expect("valid inputs");
    StateHandle::vacuum(ctx).scale(0.5).add(&ext.state.scale(0.5)).expect("same context")
}

/// Representations of two fixed polynomials.
pub fn operators(ctx: FockContext) -> (FockOperator, FockOperator) {
    let x = parse_expression("v[1,2] v1* + (0.5-1i) v2 v[2,2]* + v1", ctx.n()).expect("valid expression");
    let y = parse_expression("v2 v[1,1]* - v[2,1] + 2", ctx.n()).expect("valid expression");
    (FockOperator::represent(ctx, &x).expect("fits"), FockOperator::represent(ctx, &y).expect("fits"))
}
