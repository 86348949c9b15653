mod common;

use fockstate::measures::{atomic_from_moments, herglotz_check, Atom, CircleMeasure, MomentSequence};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moments_of_measures_pass_herglotz(seed in any::<u64>(), window in 0usize..9) {
        let mut rng = common::seeded(seed);
        let sigma = common::mixed_measure(&mut rng, 4);
        prop_assert!(herglotz_check(&sigma.moments(window)).positive);
    }

    #[test]
    fn separated_atomic_measures_round_trip(base in 0.0f64..6.3, count in 1usize..4, raw in proptest::collection::vec(0.1f64..1.0, 3)) {
        // recovery is ill-conditioned for nearly coincident atoms, so keep them 2 rad apart
        let total: f64 = raw[..count].iter().sum();
        let atoms = (0..count).map(|k| Atom { angle: base + 2.0 * k as f64, weight: raw[k] / total });
        let sigma = CircleMeasure::new(0.0, atoms.collect::<Vec<_>>()).unwrap();
        let back = atomic_from_moments(&sigma.moments(6)).unwrap();
        prop_assert!(back.approx_eq(&sigma, 1e-8), "{:?} vs {:?}", back, sigma);
    }

    #[test]
    fn rotation_multiplies_moments(seed in any::<u64>(), phi in 0.0f64..6.3, m in -6i64..7) {
        let mut rng = common::seeded(seed);
        let sigma = common::mixed_measure(&mut rng, 3);
        let zeta = C64::from_polar(1.0, phi);
        let lhs = sigma.rotate(zeta).fourier(m);
        let rhs = zeta.powi(m as i32) * sigma.fourier(m);
        prop_assert!((lhs - rhs).norm() <= 1e-12);
        prop_assert!((sigma.fourier(-m) - sigma.fourier(m).conj()).norm() <= 1e-15);
    }
}

#[test]
fn non_positive_windows_fail() {
    let tau = MomentSequence::from_nonnegative(vec![C64::new(1.0, 0.0), C64::new(1.5, 0.0)]);
    let report = herglotz_check(&tau);
    assert!(!report.positive);
    assert!(report.min_eigenvalue < -0.4);
}

#[test]
fn haar_moments_need_more_data_than_atoms() {
    assert!(atomic_from_moments(&CircleMeasure::haar().moments(4)).is_err());
    // two atoms are invisible to a window of one moment
    let two = CircleMeasure::new(0.0, [Atom { angle: 0.3, weight: 0.5 }, Atom { angle: 2.0, weight: 0.5 }]).unwrap();
    assert!(atomic_from_moments(&two.moments(1)).is_err());
    assert!(atomic_from_moments(&two.moments(2)).unwrap().approx_eq(&two, 1e-9));
}

#[test]
fn construction_validates_and_canonicalizes() {
    assert!(CircleMeasure::new(-0.1, [Atom { angle: 0.0, weight: 1.1 }]).is_err());
    assert!(CircleMeasure::new(0.5, [Atom { angle: 0.0, weight: 0.4 }]).is_err());
    assert!(CircleMeasure::new(0.0, [Atom { angle: f64::NAN, weight: 1.0 }]).is_err());
    let m = CircleMeasure::new(
        0.0,
        [Atom { angle: 1.0, weight: 0.25 }, Atom { angle: 1.0 + std::f64::consts::TAU, weight: 0.75 }],
    )
    .unwrap();
    assert_eq!(m.atoms().len(), 1);
    assert!((m.atoms()[0].weight - 1.0).abs() < 1e-15);
    assert!(m.is_atomic());
    assert!(!CircleMeasure::haar().is_atomic());
}
