//! Weight schemes, weighted sparsity and sample-complexity recommendations.
//!
//!     cargo run --example weights

use expander_wl1::weights::{
    best_weighted_s_term, polynomial_budget_bound, recommend_parameters, weighted_cardinality,
    weighted_norm, GammaRule, OrderConstants, RecommendInput, WeightVector,
};

fn main() -> expander_wl1::Result<()> {
    let big_n = 10;
    let poly = WeightVector::polynomial(big_n, 0.4)?;
    let prior = WeightVector::two_level(big_n, 0.5, &[0, 1, 2])?;
    println!("polynomial: {:.3?}", poly.omega());
    println!("two-level:  {:?}", prior.omega());

    let x = [3.0, -1.0, 0.0, 0.5, 0.0, 0.0, 2.0, 0.0, 0.0, -0.25];
    println!("‖x‖_ω,1 = {:.4}", weighted_norm(&x, &poly, 1.0)?);
    println!("ω(supp x) = {:.4}", weighted_cardinality(&[0, 1, 3, 6, 9], &poly)?);

    let best = best_weighted_s_term(&x, &poly, 4.0)?;
    println!("best s-term, s = 4: keep {:?}, sigma = {:.4}", best.support, best.sigma);

    println!("budget for k = 8, α = 0.4: {:.2}", polynomial_budget_bound(8, 0.4));

    let input = RecommendInput { big_n: 1024, k: 16, s: 16.0, epsilon: 0.1, delta: 0.05 };
    for rule in [GammaRule::Uniform, GammaRule::PriorSupport { w: 0.3 }, GammaRule::KnownSupport] {
        let r = recommend_parameters(&rule, &input, OrderConstants::default())?;
        println!("{rule:?}: gamma = {:.4}, n = {}, d = {}", r.gamma, r.n, r.d);
    }
    Ok(())
}
