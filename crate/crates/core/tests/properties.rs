mod common;

use gpnash::acquisition::gamma_hat;
use gpnash::game::{nash_extract, PayoffTensor};
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn nash_extraction_matches_the_definition() {
    eprintln!("{}", common::nash_matches_brute_force(100, 0).unwrap());
}

#[test]
fn player_probabilities_partition_each_slice() {
    eprintln!("{}", common::pi_partition(50, 0, 2e-2).unwrap());
}

#[test]
fn exact_and_monte_carlo_pe_agree() {
    eprintln!("{}", common::pe_exact_vs_mc(20, 0, 10_000, 3.0).unwrap());
}

#[test]
fn ensemble_update_matches_refit() {
    eprintln!("{}", common::foxy_vs_refit(10, 0, 2000, 3.0).unwrap());
}

#[test]
fn evaluation_at_an_observed_point_is_uninformative() {
    eprintln!("{}", common::j_no_information(5, 0, 1e-10).unwrap());
}

#[test]
fn spread_scales_with_the_squared_determinant() {
    eprintln!("{}", common::gamma_affine(20, 0, 1e-8).unwrap());
}

fn tensor_strategy() -> impl Strategy<Value = (Vec<usize>, Vec<f64>)> {
    prop::collection::vec(2usize..=4, 2..=3).prop_flat_map(|shape| {
        let n: usize = shape.iter().product();
        let p = shape.len();
        (Just(shape), prop::collection::vec((0u8..5).prop_map(f64::from), n * p))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn extraction_agrees_with_brute_force((shape, flat) in tensor_strategy()) {
        let n: usize = shape.iter().product();
        let values = DMatrix::from_column_slice(n, shape.len(), &flat);
        let expected = common::brute_force_equilibria(&shape, &values);
        let got = nash_extract(&PayoffTensor::new(shape, values).unwrap()).indices;
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn constant_shift_preserves_equilibria((shape, flat) in tensor_strategy(), shift in -10.0f64..10.0) {
        let n: usize = shape.iter().product();
        let values = DMatrix::from_column_slice(n, shape.len(), &flat);
        let shifted = values.map(|v| v + shift);
        let a = nash_extract(&PayoffTensor::new(shape.clone(), values).unwrap()).indices;
        let b = nash_extract(&PayoffTensor::new(shape, shifted).unwrap()).indices;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn spread_is_translation_invariant(
        pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 3..20),
        shift in prop::collection::vec(-100.0f64..100.0, 2),
    ) {
        let moved: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().zip(&shift).map(|(a, b)| a + b).collect()).collect();
        let (g0, g1) = (gamma_hat(&pts), gamma_hat(&moved));
        prop_assert!(g0 >= 0.0);
        prop_assert!((g0 - g1).abs() <= 1e-7 * (1.0 + g0));
    }
}
