//! Expander versus dense Gaussian matrix-vector products, and an end-to-end
//! benchmark across matrix kinds.
//!
//!     cargo run --release --example apply_speed

use expander_wl1::experiments::{compare_apply, run_benchmark, PhaseConfig};

fn main() -> expander_wl1::Result<()> {
    let t = compare_apply(4096, 1024, 24, 100, 0)?;
    println!(
        "apply N=4096 m=1024 d=24: expander {:.2e}s, dense {:.2e}s, {:.1}x faster",
        t.expander_median_s, t.dense_median_s, t.speedup
    );

    let cfg = PhaseConfig {
        big_n: 128,
        m_over_n_points: 3,
        s_over_m_points: 2,
        trials: 3,
        ..PhaseConfig::default()
    };
    for c in run_benchmark(&cfg, 0)? {
        println!(
            "{:>15} m = {:>3} s = {:>6.1}: {:.2e}s per trial, {}/{} recovered",
            c.kind.to_string(), c.m, c.s, c.mean_runtime_s, c.successes, c.trials
        );
    }
    Ok(())
}
