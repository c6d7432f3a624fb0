//! Certify an expander, then check the null space property and the error
//! bound on a noisy, compressible signal.
//!
//!     cargo run --example certify

use expander_wl1::analysis::{certify, check_collision_bound, check_rnsp_sampled, error_bound};
use expander_wl1::decoder::{decode, DecodeProblem};
use expander_wl1::experiments::add_noise;
use expander_wl1::graph::{ExpansionMode, SparseBinaryMatrix};
use expander_wl1::weights::WeightVector;

fn main() -> expander_wl1::Result<()> {
    // certification needs eps_2k < 1/6, which random graphs only reach when
    // n is large compared to N d
    let (big_n, n, d, k) = (12, 160, 6, 2);
    let (a, cert) = (0u64..)
        .map(|seed| {
            let a = SparseBinaryMatrix::generate(big_n, n, d, seed).unwrap();
            let c = certify(&a, k, ExpansionMode::exhaustive()).unwrap();
            (a, c)
        })
        .find(|(_, c)| c.certified)
        .expect("some seed certifies");
    let (rnsp, errs) = cert.constants()?;
    println!("matrix {} eps_2k = {:.4}", cert.matrix_id, cert.epsilon_2k);
    println!("rho = {:.4}, tau = {:.4}, C1 = {:.3}, C2 = {:.3}", rnsp.rho, rnsp.tau, errs.big_c1, errs.big_c2);

    let omega = WeightVector::polynomial(big_n, 0.4)?;
    let s = k as f64;
    let report = check_rnsp_sampled(&a, &omega, s, &cert, 1000, 0)?;
    println!("sampled check: {} violations in {} probes, max slack {:.3}", report.violations, report.trials, report.max_slack);

    let mut x = vec![0.01; big_n];
    x[4] = 2.0;
    let collision = check_collision_bound(&a, &x, &omega)?;
    println!("collision bound: {:.4} <= {:.4}", collision.lhs, collision.rhs);

    let noisy = add_noise(&a.apply(&x)?, 1e-3, 9)?;
    let res = decode(&DecodeProblem::new(&a, &noisy.y, &omega, noisy.eta1)?)?;
    let bound = error_bound(&x, &res.x_hat, &omega, s, noisy.eta1, &errs)?;
    println!("error {:.4e} <= bound {:.4e}: {}", bound.lhs, bound.rhs, bound.holds);
    Ok(())
}
