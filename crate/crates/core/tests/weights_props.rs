mod common;

use proptest::prelude::*;

use expander_wl1::weights::{
    best_weighted_s_term, best_weighted_s_term_exact, greedy_gap_bound, polynomial_budget_bound,
    recommend_parameters, weighted_cardinality, weighted_norm, GammaRule, OrderConstants,
    RecommendInput, WeightVector,
};

fn weights(len: usize) -> impl Strategy<Value = WeightVector> {
    proptest::collection::vec(1.0f64..4.0, len).prop_map(|w| WeightVector::custom(w).unwrap())
}

fn signal_and_weights() -> impl Strategy<Value = (Vec<f64>, WeightVector)> {
    (1usize..=10).prop_flat_map(|n| (proptest::collection::vec(-5.0f64..5.0, n), weights(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn uniform_norm_is_l1(x in proptest::collection::vec(-1e3f64..1e3, 0..40)) {
        let w = WeightVector::uniform(x.len());
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        prop_assert_eq!(weighted_norm(&x, &w, 1.0).unwrap(), l1);
    }

    #[test]
    fn norm_decomposes((x, w) in signal_and_weights(), mask in any::<u16>()) {
        let inside: Vec<f64> = x.iter().enumerate().map(|(i, v)| if mask >> i & 1 == 1 { *v } else { 0.0 }).collect();
        let outside: Vec<f64> = x.iter().zip(&inside).map(|(a, b)| a - b).collect();
        let sum = weighted_norm(&inside, &w, 1.0).unwrap() + weighted_norm(&outside, &w, 1.0).unwrap();
        prop_assert!((sum - weighted_norm(&x, &w, 1.0).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn uniform_best_term_keeps_largest(x in proptest::collection::vec(-5i32..5, 1..12), s in 0usize..12) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let w = WeightVector::uniform(x.len());
        let got = best_weighted_s_term(&x, &w, s as f64).unwrap();
        let mut order: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
        order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
        order.truncate(s);
        order.sort_unstable();
        prop_assert_eq!(&got.support, &order);
        let tail: f64 = (0..x.len()).filter(|i| !order.contains(i)).map(|i| x[i].abs()).sum();
        prop_assert!((got.sigma - tail).abs() <= 1e-12);
    }

    #[test]
    fn sigma_non_increasing_in_s((x, w) in signal_and_weights()) {
        let mut prev = f64::INFINITY;
        for step in 0..40 {
            let s = step as f64 * 0.5;
            let sigma = best_weighted_s_term_exact(&x, &w, s, None).unwrap().sigma;
            prop_assert!(sigma <= prev + 1e-12);
            prev = sigma;
        }
    }

    #[test]
    fn greedy_within_gap_of_knapsack_optimum((x, w) in signal_and_weights(), s in 0.0f64..30.0) {
        let greedy = best_weighted_s_term(&x, &w, s).unwrap();
        let optimum = common::brute_sigma(&x, w.omega(), s);
        let exact = best_weighted_s_term_exact(&x, &w, s, None).unwrap();
        prop_assert!((exact.sigma - optimum).abs() <= 1e-9);
        prop_assert!(greedy.sigma >= optimum - 1e-9);
        prop_assert!(greedy.sigma <= optimum + greedy_gap_bound(&x, &w, s).unwrap() + 1e-9);
        prop_assert!(weighted_cardinality(&greedy.support, &w).unwrap() <= s + 1e-9);
    }

    #[test]
    fn weighted_cardinality_at_least_size(w in weights(12), mask in any::<u16>()) {
        let set: Vec<usize> = (0..12).filter(|i| mask >> i & 1 == 1).collect();
        prop_assert!(weighted_cardinality(&set, &w).unwrap() >= set.len() as f64);
    }

    #[test]
    fn two_level_cardinality_identity(wl in 0.05f64..1.0, est in any::<u16>(), mask in any::<u16>()) {
        let big_n = 16;
        let s_est: Vec<usize> = (0..big_n).filter(|i| est >> i & 1 == 1).collect();
        let set: Vec<usize> = (0..big_n).filter(|i| mask >> i & 1 == 1).collect();
        let omega = WeightVector::two_level(big_n, wl, &s_est).unwrap();
        let on = set.iter().filter(|i| s_est.contains(i)).count() as f64;
        let off = set.len() as f64 - on;
        let want = on + off / (wl * wl);
        let got = weighted_cardinality(&set, &omega).unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0));
    }
}

#[test]
fn budget_bound_dominates_exact_sum() {
    for r in 1..=6 {
        let alpha = 1.0 / r as f64;
        for k in 1..=50usize {
            let exact: f64 = (1..=k).map(|i| (i as f64).powf(alpha)).sum();
            assert!(exact <= polynomial_budget_bound(k, alpha), "k={k} alpha={alpha}");
        }
    }
}

#[test]
fn two_level_without_confidence_tracks_uniform() {
    let input = RecommendInput {
        big_n: 1024,
        k: 16,
        s: 16.0,
        epsilon: 0.1,
        delta: 0.05,
    };
    let c = OrderConstants::default();
    let uniform = recommend_parameters(&GammaRule::Uniform, &input, c).unwrap();
    let prior = recommend_parameters(&GammaRule::PriorSupport { w: 1.0 }, &input, c).unwrap();
    // both reduce to n ~ k log(N/k) / eps^2 and agree up to a constant factor
    assert_eq!(uniform.n, prior.n);
    assert_eq!(uniform.d, prior.d);
}
