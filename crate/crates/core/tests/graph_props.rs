mod common;

use proptest::prelude::*;

use expander_wl1::analysis::{certify, expansion_failure_estimate, rnsp_constants};
use expander_wl1::graph::{ExpansionMode, SparseBinaryMatrix};

fn matrix() -> impl Strategy<Value = SparseBinaryMatrix> {
    (2usize..=12, 2usize..=10, any::<u64>()).prop_flat_map(|(big_n, n, seed)| {
        (1usize..=n.min(4)).prop_map(move |d| SparseBinaryMatrix::generate(big_n, n, d, seed).unwrap())
    })
}

fn subset(big_n: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::btree_set(0..big_n, 0..=big_n).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn apply_is_linear(a in matrix(), seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let mut r = expander_wl1::rng::from_seed(seed);
        let z: Vec<f64> = (0..a.big_n()).map(|_| common::gauss(&mut r)).collect();
        let w: Vec<f64> = (0..a.big_n()).map(|_| common::gauss(&mut r)).collect();
        let combo: Vec<f64> = z.iter().zip(&w).map(|(p, q)| alpha * p + beta * q).collect();
        let lhs = a.apply(&combo).unwrap();
        let (az, aw) = (a.apply(&z).unwrap(), a.apply(&w).unwrap());
        for j in 0..a.n() {
            prop_assert!((lhs[j] - (alpha * az[j] + beta * aw[j])).abs() <= 1e-12);
        }
    }

    #[test]
    fn apply_matches_dense_product(a in matrix(), seed in any::<u64>()) {
        let mut r = expander_wl1::rng::from_seed(seed);
        let z: Vec<f64> = (0..a.big_n()).map(|_| common::gauss(&mut r)).collect();
        let got = a.apply(&z).unwrap();
        for (j, row) in common::dense_rows(&a).iter().enumerate() {
            let want: f64 = row.iter().zip(&z).map(|(p, q)| p * q).sum();
            prop_assert!((got[j] - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn neighbourhood_bounds(a in matrix(), set in subset(12)) {
        let set: Vec<usize> = set.into_iter().filter(|&i| i < a.big_n()).collect();
        let gamma = a.neighbors(&set).unwrap();
        prop_assert!(gamma.len() <= a.d() * set.len());
        prop_assert!(gamma.len() <= a.n());
        prop_assert_eq!(gamma.len(), common::naive_neighbors(&a, &set));
    }

    #[test]
    fn edge_count_matches_intersection(a in matrix(), sa in subset(12), sb in subset(12)) {
        let sa: Vec<usize> = sa.into_iter().filter(|&i| i < a.big_n()).collect();
        let sb: Vec<usize> = sb.into_iter().filter(|&i| i < a.big_n() && !sa.contains(&i)).collect();
        let ga = a.neighbors(&sa).unwrap();
        let gb = a.neighbors(&sb).unwrap();
        let shared = ga.iter().filter(|j| gb.contains(j)).count();
        prop_assert_eq!(a.edge_count_between(&sa, &sb).unwrap(), shared);
    }

    #[test]
    fn epsilon_is_monotone_in_k(a in matrix()) {
        let mut prev = 0.0;
        for k in 1..=a.big_n().min(5) {
            let eps = a.expansion_coefficient(k, ExpansionMode::exhaustive()).unwrap().epsilon;
            prop_assert!(eps >= prev);
            prop_assert_eq!(eps, common::naive_epsilon(&a, k));
            prev = eps;
        }
    }

    #[test]
    fn collision_prefixes_respect_epsilon(a in matrix(), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..a.big_n()).collect();
        let mut r = expander_wl1::rng::from_seed(seed);
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut r);
        let k = a.big_n().min(5);
        let eps = a.expansion_coefficient(k, ExpansionMode::exhaustive()).unwrap().epsilon;
        for kp in 1..=k {
            let e = a.collision_set(&order[..kp]).unwrap();
            prop_assert!(e.len() as f64 <= eps * (a.d() * kp) as f64 + 1e-12);
        }
        let full = a.collision_set(&order).unwrap();
        let all: Vec<usize> = (0..a.big_n()).collect();
        prop_assert_eq!(full.len(), a.d() * a.big_n() - a.neighbors(&all).unwrap().len());
        let mut edges: Vec<(usize, usize)> = full.edges.to_vec();
        edges.sort_unstable();
        prop_assert_eq!(edges, common::naive_collisions(&a, &order));
    }

    #[test]
    fn rho_and_tau_increase_with_epsilon(e1 in 0.0f64..0.166, e2 in 0.0f64..0.166, d in 1usize..40) {
        prop_assume!(e1 < e2);
        let (c1, c2) = (rnsp_constants(e1, d).unwrap(), rnsp_constants(e2, d).unwrap());
        prop_assert!(c1.rho < c2.rho);
        prop_assert!(c1.tau < c2.tau);
    }
}

#[test]
fn edge_count_between_rejects_overlap() {
    let a = SparseBinaryMatrix::generate(10, 7, 3, 11).unwrap();
    assert!(a.edge_count_between(&[0, 2], &[2, 3]).is_err());
}

#[test]
fn exhaustive_matches_enumeration_small_case() {
    for seed in 0..10 {
        let a = SparseBinaryMatrix::generate(12, 8, 2, seed).unwrap();
        let r = a.expansion_coefficient(4, ExpansionMode::exhaustive()).unwrap();
        assert_eq!(r.epsilon, common::naive_epsilon(&a, 4));
    }
}

#[test]
fn certify_matches_brute_force() {
    for seed in 0..20 {
        let a = SparseBinaryMatrix::generate(16, 12, 4, seed).unwrap();
        let cert = certify(&a, 2, ExpansionMode::exhaustive()).unwrap();
        let eps = common::naive_epsilon(&a, 4);
        let (g, s) = common::naive_worst_ratio(&a, 4);
        assert_eq!(cert.epsilon_2k, eps);
        assert_eq!(cert.certified, 6 * (4 * s - g) < 4 * s);
        assert!(cert.exhaustive);
    }
}

fn failure_rates(big_n: usize, rows: &[usize], d: usize) -> Vec<f64> {
    rows.iter()
        .map(|&n| {
            expansion_failure_estimate(big_n, n, d, 2, 0.25, 500, 3)
                .unwrap()
                .probability
        })
        .collect()
}

#[test]
fn failure_rate_does_not_rise_with_rows() {
    // at N = 64, d = 8 some pair almost always shares 5 rows, so all are ~1
    let rates = failure_rates(64, &[16, 24, 32], 8);
    assert!(rates[0] >= rates[1] && rates[1] >= rates[2], "{rates:?}");
}

#[test]
fn failure_rate_falls_as_rows_grow() {
    let rates = failure_rates(16, &[16, 32, 64], 4);
    assert!(rates.windows(2).all(|w| w[0] > w[1]), "{rates:?}");
}
