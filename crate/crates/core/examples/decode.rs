//! Recover a weighted-sparse signal from noisy expander measurements.
//!
//!     cargo run --example decode

use expander_wl1::decoder::{decode, DecodeProblem};
use expander_wl1::experiments::{add_noise, draw_signal, sample_support, SignalModel};
use expander_wl1::graph::SparseBinaryMatrix;
use expander_wl1::weights::WeightVector;

fn main() -> expander_wl1::Result<()> {
    let (big_n, n, d) = (256, 96, 8);
    let a = SparseBinaryMatrix::generate(big_n, n, d, 11)?;
    let omega = WeightVector::polynomial(big_n, 0.4)?;

    let mut model = SignalModel::new(omega.clone(), 30.0);
    model.max_support = Some(8);
    let support = sample_support(&model, 1)?;
    let signal = draw_signal(&model, &support, 2)?;
    println!("support {:?}", signal.support);

    let noisy = add_noise(&a.apply(&signal.x)?, 1e-4, 3)?;
    let uniform = WeightVector::uniform(big_n);
    for (name, w) in [("weighted", &omega), ("unweighted", &uniform)] {
        let res = decode(&DecodeProblem::new(&a, &noisy.y, w, noisy.eta1)?)?;
        let err: f64 = res
            .x_hat
            .iter()
            .zip(&signal.x)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt();
        println!(
            "{name:>10}: {:?} after {} pivots, ‖x̂ − x‖_2 = {err:.2e}, residual {:.2e} <= η = {:.2e}",
            res.status, res.iterations, res.residual, noisy.eta1
        );
    }
    Ok(())
}
