//! A small phase-transition grid of paired weighted/unweighted trials,
//! written as CSV.
//!
//!     cargo run --release --example phase_grid -- grid.csv

use expander_wl1::experiments::{emit_csv, run_phase_grid, DecoderKind, PhaseConfig};

fn main() -> expander_wl1::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "phase_grid.csv".into());
    let cfg = PhaseConfig {
        big_n: 128,
        m_over_n_points: 4,
        s_over_m_points: 5,
        trials: 6,
        ..PhaseConfig::default()
    };
    let grid = run_phase_grid(&cfg, 0)?;

    for decoder in [DecoderKind::Weighted, DecoderKind::Unweighted] {
        println!("{decoder} (rows m/N, columns s/m):");
        for (r, row) in cfg.m_over_n_axis().iter().zip(grid.probabilities(decoder)) {
            let cells: Vec<String> = row.iter().map(|p| format!("{p:.2}")).collect();
            println!("  {r:.3}  {}", cells.join(" "));
        }
        println!("  50% area {:.3}", grid.superlevel_area(decoder, 0.5));
    }
    let (wins, total) = grid.paired_dominance();
    println!("weighted >= unweighted in {wins}/{total} cells");
    emit_csv(&grid.cells, std::path::Path::new(&out))?;
    println!("wrote {out}");
    Ok(())
}
