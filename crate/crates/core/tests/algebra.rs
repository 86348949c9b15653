mod common;

use fockstate::algebra::{parse_expression, AlgebraElement, Word};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

const EPS: f64 = 1e-12;

fn triple(seed: u64, n: usize) -> (AlgebraElement, AlgebraElement, AlgebraElement) {
    let mut rng = common::seeded(seed);
    (common::element(&mut rng, n, 3, 3), common::element(&mut rng, n, 3, 3), common::element(&mut rng, n, 3, 3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiplication_is_associative(seed in any::<u64>(), n in 2usize..4) {
        let (x, y, z) = triple(seed, n);
        let lhs = &(&x * &y) * &z;
        let rhs = &x * &(&y * &z);
        prop_assert!(lhs.max_abs_diff(&rhs) <= EPS);
    }

    #[test]
    fn adjoint_is_an_anti_multiplicative_involution(seed in any::<u64>(), n in 2usize..4) {
        let (x, y, _) = triple(seed, n);
        prop_assert!((&x * &y).adjoint().max_abs_diff(&(&y.adjoint() * &x.adjoint())) <= EPS);
        prop_assert_eq!(x.adjoint().adjoint(), x);
    }

    #[test]
    fn gauge_action_is_multiplicative(seed in any::<u64>(), theta in 0.0f64..6.3, phi in 0.0f64..6.3) {
        let (x, y, _) = triple(seed, 2);
        let lambda = C64::from_polar(1.0, theta);
        let mu = C64::from_polar(1.0, phi);
        let gx = x.gauge(lambda).unwrap();
        prop_assert!((&x * &y).gauge(lambda).unwrap().max_abs_diff(&(&gx * &y.gauge(lambda).unwrap())) <= EPS);
        prop_assert!(x.adjoint().gauge(lambda).unwrap().max_abs_diff(&gx.adjoint()) <= EPS);
        // γ_λ γ_μ = γ_{λμ}
        prop_assert!(gx.gauge(mu).unwrap().max_abs_diff(&x.gauge(lambda * mu).unwrap()) <= EPS);
    }

    #[test]
    fn conditional_expectation_is_a_gauge_invariant_projection(seed in any::<u64>(), theta in 0.0f64..6.3) {
        let (x, y, _) = triple(seed, 2);
        let phi = x.conditional_expectation();
        prop_assert_eq!(phi.conditional_expectation(), phi.clone());
        prop_assert!(phi.gauge(C64::from_polar(1.0, theta)).unwrap().max_abs_diff(&phi) <= EPS);
        // bimodule property over the fixed-point algebra
        let fixed = y.conditional_expectation();
        prop_assert!((&fixed * &x).conditional_expectation().max_abs_diff(&(&fixed * &phi)) <= EPS);
    }

    #[test]
    fn display_round_trips_through_the_parser(seed in any::<u64>(), n in 2usize..5) {
        let mut rng = common::seeded(seed);
        let x = common::element(&mut rng, n, 4, 3);
        prop_assert_eq!(parse_expression(&x.to_string(), n).unwrap(), x);
    }
}

#[test]
fn cuntz_relations_hold() {
    let n = 3;
    let v: Vec<_> = (1..=n).map(|i| AlgebraElement::generator(n, i).unwrap()).collect();
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { AlgebraElement::one(n) } else { AlgebraElement::zero(n) };
            assert_eq!(&v[i].adjoint() * &v[j], expected);
        }
    }
    // Σ v_i v_i* is a projection, not the unit
    let range = v.iter().fold(AlgebraElement::zero(n), |acc, g| &acc + &(g * &g.adjoint()));
    assert_eq!(&range * &range, range);
    assert_ne!(range, AlgebraElement::one(n));
}

#[test]
fn parser_reads_the_documented_forms() {
    let n = 2;
    let w = |l: &[usize]| Word::new(n, l.to_vec()).unwrap();
    let x = parse_expression("v[1,2] v1* + (2-1i) v2", n).unwrap();
    assert_eq!(x.coefficient(&w(&[1, 2]), &w(&[1])), C64::new(1.0, 0.0));
    assert_eq!(x.coefficient(&w(&[2]), &w(&[])), C64::new(2.0, -1.0));
    assert_eq!(parse_expression("v1* v2", n).unwrap(), AlgebraElement::zero(n));
    assert_eq!(parse_expression("(v1 v2)*", n).unwrap(), parse_expression("v2* v1*", n).unwrap());
    assert!(parse_expression("v3", n).is_err());
    assert!(parse_expression("v1 +", n).is_err());
}
