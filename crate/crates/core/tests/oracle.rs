mod common;

use common::*;
use cpl_core::oracle::{enumerate_equilibria_2d, solve_scalar, DEFAULT_GRID_DENSITY};
use cpl_core::{classify, ClassifyOptions, Outcome, SystemData};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scalar_classifier_matches_closed_form(
        a in 0.1f64..5.0,
        b in (-5.0f64..5.0).prop_filter("nonzero", |b| b.abs() >= 0.05),
        w in -2.0f64..8.0,
    ) {
        let list = solve_scalar(a, b, w).unwrap();
        let sys = SystemData::scalar(a, b, w).unwrap();
        let outcome = classify(&sys, &ClassifyOptions::default()).unwrap().outcome;
        match &outcome {
            Outcome::Dominant { x_max, .. } => {
                let stable = list.points.iter().filter(|p| p.hurwitz).map(|p| p.x[0]).fold(f64::NAN, f64::max);
                prop_assert!((x_max[0] - stable).abs() <= 1e-6 * stable, "{x_max:?} vs {list:?}");
            }
            Outcome::NoEquilibrium { .. } => prop_assert!(list.is_empty(), "{list:?}"),
            Outcome::Inconclusive { .. } => {
                // only near the double root
                let disc = w * w - 4.0 * a * b;
                prop_assert!(disc.abs() <= 1e-6 * w * w, "{outcome:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn two_node_classifier_matches_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, 2);
        let top = check_oracle_agreement(&sys);
        prop_assert!(top.is_ok(), "{top:?}");
        if let Ok(Some(x)) = top {
            prop_assert_eq!(check_right_attraction(&sys, &x), Ok(()));
        }
    }

    #[test]
    fn same_sign_loads_have_one_stable_point(seed in any::<u64>(), sign in prop::bool::ANY) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, 2);
        let s = if sign { 1.0 } else { -1.0 };
        let b = sys.b().map(|v| s * v.abs());
        let sys = sys.with_b(b).unwrap();
        let list = enumerate_equilibria_2d(&sys, DEFAULT_GRID_DENSITY).unwrap();
        if !list.is_empty() {
            prop_assert_eq!(list.points.iter().filter(|p| p.hurwitz).count(), 1, "{:?}", list);
        }
        if !sign {
            prop_assert_eq!(list.points.len(), 1);
        }
    }
}

#[test]
fn fixed_corpus_two_node_agreement() {
    let mut r = rng(42);
    let mut feasible = 0;
    for _ in 0..40 {
        let sys = random_system(&mut r, 2);
        if check_oracle_agreement(&sys).unwrap().is_some() {
            feasible += 1;
        }
    }
    assert!(feasible > 0 && feasible < 40, "{feasible}");
}

#[test]
fn random_generator_respects_structure() {
    let mut r = rng(7);
    for _ in 0..100 {
        let n = r.gen_range(1..=5);
        let sys = random_system(&mut r, n);
        let (_, report) = sys.validated().unwrap();
        assert!(report.passed);
        assert!(sys.b().iter().all(|v| v.abs() >= 0.05 && v.abs() <= 5.0));
    }
}
