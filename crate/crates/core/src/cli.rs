//! The `ewl1` command line.
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success (decode: optimal)                 |
//! | 2    | decode: LP infeasible                     |
//! | 3    | decode: iteration limit reached           |
//! | 64   | usage error                               |
//! | 65   | invalid data, configuration or parameters |
//! | 66   | a file could not be read or written       |
//!
//! Human-readable summaries go to stdout, progress to stderr, and machine
//! outputs only to the files named by flags.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{self, Certificate, RnspReport};
use crate::decoder::{decode_with, DecodeOptions, DecodeProblem, DecodeStatus, Formulation};
use crate::error::Error;
use crate::experiments::{self, PhaseConfig, RunMetadata};
use crate::graph::{ExpansionMode, ExpansionReport, SparseBinaryMatrix, DEFAULT_ENUMERATION_BUDGET};
use crate::io;
use crate::weights::{weighted_norm, WeightVector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_ITERATION_LIMIT: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_FILE: i32 = 66;

#[derive(Debug, Parser)]
#[command(name = "ewl1", version, about = "Weighted l1 recovery with sparse expander matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Uniform,
    Polynomial,
    TwoLevel,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Mc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormulationArg {
    Split,
    Epigraph,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a random left-d-regular sparse binary matrix.
    Generate {
        #[arg(long = "N")]
        big_n: usize,
        #[arg(long = "n")]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a weight vector.
    Weights {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long = "N")]
        big_n: usize,
        /// Polynomial exponent: `ω_i = i^{α/2}`.
        #[arg(long)]
        alpha: Option<f64>,
        /// Two-level off-support weight parameter in [0, 1].
        #[arg(long)]
        w: Option<f64>,
        /// Estimated support, one index per line.
        #[arg(long)]
        support_file: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve min ‖z‖_{ω,1} s.t. ‖Az − y‖_1 <= η.
    Decode {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// Defaults to uniform weights.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long, value_enum, default_value = "split")]
        formulation: FormulationArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Expansion coefficient, certification and optional recovery checks.
    Verify {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "exhaustive")]
        mode: ModeArg,
        /// Monte-Carlo subsets, and probes for the sampled property check.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Weights for the sampled null space property check.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Weighted sparsity budget for the sampled check; enables it.
        #[arg(long)]
        s: Option<f64>,
        /// True signal, to grade `--estimate`.
        #[arg(long)]
        signal: Option<PathBuf>,
        #[arg(long)]
        estimate: Option<PathBuf>,
        /// Noise level used for the success threshold.
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        /// JSON report destination.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Phase-transition grid of paired weighted/unweighted trials.
    Phase {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Runtime comparison across matrix kinds.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult = std::result::Result<i32, Failure>;

/// Parse `argv` (program name first) and run the subcommand.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            if e.is_file_error() {
                EXIT_FILE
            } else {
                EXIT_DATA
            }
        }
    }
}

fn require_input(path: &Path) -> Result<(), Error> {
    std::fs::metadata(path).map(|_| ()).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// The output's directory must exist and the output must not be an input.
fn require_output(out: &Path, inputs: &[&Path]) -> std::result::Result<(), Failure> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        require_input(dir)?;
    }
    let same = |a: &Path, b: &Path| match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    };
    if let Some(input) = inputs.iter().find(|i| same(out, i)) {
        return Err(Failure::Usage(format!(
            "output {} would overwrite input {}",
            out.display(),
            input.display()
        )));
    }
    Ok(())
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> std::result::Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(f))
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Generate {
            big_n,
            n,
            d,
            seed,
            out,
        } => {
            require_output(&out, &[])?;
            let a = SparseBinaryMatrix::generate(big_n, n, d, seed)?;
            io::write_matrix(&a, &out)?;
            println!("wrote {n} x {big_n} matrix with d = {d} (seed {seed}) to {}", out.display());
            Ok(EXIT_OK)
        }
        Command::Weights {
            scheme,
            big_n,
            alpha,
            w,
            support_file,
            out,
        } => {
            if let Some(f) = &support_file {
                require_input(f)?;
            }
            let inputs: Vec<&Path> = support_file.iter().map(PathBuf::as_path).collect();
            require_output(&out, &inputs)?;
            let weights = match scheme {
                SchemeArg::Uniform => WeightVector::uniform(big_n),
                SchemeArg::Polynomial => {
                    let alpha = alpha.ok_or_else(|| Failure::Usage("--scheme polynomial requires --alpha".into()))?;
                    WeightVector::polynomial(big_n, alpha)?
                }
                SchemeArg::TwoLevel => {
                    let w = w.ok_or_else(|| Failure::Usage("--scheme two-level requires --w".into()))?;
                    let file = support_file
                        .ok_or_else(|| Failure::Usage("--scheme two-level requires --support-file".into()))?;
                    WeightVector::two_level(big_n, w, &io::read_indices(&file)?)?
                }
            };
            io::write_weights(&weights, &out)?;
            println!("wrote {big_n} weights to {}", out.display());
            Ok(EXIT_OK)
        }
        Command::Decode {
            matrix,
            y,
            weights,
            eta,
            formulation,
            out,
        } => {
            require_input(&matrix)?;
            require_input(&y)?;
            if let Some(w) = &weights {
                require_input(w)?;
            }
            let mut inputs = vec![matrix.as_path(), y.as_path()];
            inputs.extend(weights.as_deref());
            require_output(&out, &inputs)?;
            let a = io::read_matrix(&matrix)?;
            let yv = io::read_vector(&y)?;
            let w = match &weights {
                Some(p) => io::read_weights(p)?,
                None => WeightVector::uniform(a.big_n()),
            };
            let problem = DecodeProblem::new(&a, &yv, &w, eta)?;
            let opts = DecodeOptions {
                formulation: match formulation {
                    FormulationArg::Split => Formulation::Split,
                    FormulationArg::Epigraph => Formulation::Epigraph,
                },
                ..DecodeOptions::default()
            };
            let clock = Instant::now();
            let result = decode_with(&problem, &opts)?;
            eprintln!(
                "decode: {} pivots in {:.3}s",
                result.iterations,
                clock.elapsed().as_secs_f64()
            );
            io::write_vector(&result.x_hat, &out)?;
            println!(
                "status {:?}, objective {:.12e}, residual {:.3e}, duality gap {:.1e}",
                result.status, result.objective, result.residual, result.duality_gap
            );
            Ok(match result.status {
                DecodeStatus::Optimal => EXIT_OK,
                DecodeStatus::Infeasible => EXIT_INFEASIBLE,
                DecodeStatus::IterationLimit => EXIT_ITERATION_LIMIT,
            })
        }
        Command::Verify {
            matrix,
            k,
            mode,
            trials,
            seed,
            weights,
            s,
            signal,
            estimate,
            eta,
            report,
        } => verify(VerifyArgs {
            matrix,
            k,
            mode,
            trials,
            seed,
            weights,
            s,
            signal,
            estimate,
            eta,
            report,
        }),
        Command::Phase {
            config,
            out,
            seed,
            jobs,
        } => {
            require_input(&config)?;
            require_output(&out, &[&config])?;
            let cfg = PhaseConfig::from_file(&config)?;
            let cells = cfg.m_over_n_axis().len() * cfg.s_over_m_axis().len();
            eprintln!(
                "phase: {cells} cells x {} trials, N = {}, d = {}",
                cfg.trials,
                cfg.big_n,
                cfg.degree()
            );
            let clock = Instant::now();
            let grid = with_pool(jobs, || experiments::run_phase_grid(&cfg, seed))??;
            eprintln!("phase: done in {:.1}s", clock.elapsed().as_secs_f64());
            experiments::emit_csv(&grid.cells, &out)?;
            RunMetadata::new(&cfg, seed).write(&meta_path(&out))?;
            let (wins, total) = grid.paired_dominance();
            println!("wrote {} rows to {}", grid.cells.len(), out.display());
            if total > 0 {
                println!("weighted >= unweighted in {wins}/{total} cells");
            }
            Ok(EXIT_OK)
        }
        Command::Bench {
            config,
            out,
            seed,
            jobs,
        } => {
            require_input(&config)?;
            require_output(&out, &[&config])?;
            let cfg = PhaseConfig::from_file(&config)?;
            let rows = with_pool(jobs, || experiments::run_benchmark(&cfg, seed))??;
            experiments::emit_csv(&rows, &out)?;
            RunMetadata::new(&cfg, seed).write(&meta_path(&out))?;
            for r in &rows {
                println!(
                    "{:<15} m = {:>5}  s = {:>8.2}  mean runtime {:.4}s  success {}/{}",
                    r.kind.to_string(),
                    r.m,
                    r.s,
                    r.mean_runtime_s,
                    r.successes,
                    r.trials
                );
            }
            Ok(EXIT_OK)
        }
    }
}

/// `<out>.meta.json`.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

struct VerifyArgs {
    matrix: PathBuf,
    k: usize,
    mode: ModeArg,
    trials: usize,
    seed: u64,
    weights: Option<PathBuf>,
    s: Option<f64>,
    signal: Option<PathBuf>,
    estimate: Option<PathBuf>,
    eta: f64,
    report: Option<PathBuf>,
}

#[derive(Serialize)]
struct RecoveryReport {
    l2_error: f64,
    weighted_l1_error: f64,
    eta: f64,
    success: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    matrix_id: String,
    n: usize,
    #[serde(rename = "N")]
    big_n: usize,
    d: usize,
    expansion: ExpansionReport,
    certificate: Option<Certificate>,
    rnsp_check: Option<RnspReport>,
    recovery: Option<RecoveryReport>,
}

fn verify(args: VerifyArgs) -> CliResult {
    let mut inputs = vec![args.matrix.as_path()];
    inputs.extend(args.weights.as_deref());
    inputs.extend(args.signal.as_deref());
    inputs.extend(args.estimate.as_deref());
    for p in &inputs {
        require_input(p)?;
    }
    if let Some(r) = &args.report {
        require_output(r, &inputs)?;
    }
    if args.signal.is_some() != args.estimate.is_some() {
        return Err(Failure::Usage("--signal and --estimate go together".into()));
    }
    let a = io::read_matrix(&args.matrix)?;
    let weights = match &args.weights {
        Some(p) => io::read_weights(p)?,
        None => WeightVector::uniform(a.big_n()),
    };
    let mode = match args.mode {
        ModeArg::Exhaustive => ExpansionMode::Exhaustive {
            budget: DEFAULT_ENUMERATION_BUDGET,
        },
        ModeArg::Mc => ExpansionMode::MonteCarlo {
            trials: args.trials,
            seed: args.seed,
        },
    };
    let expansion = a.expansion_coefficient(args.k, mode)?;
    let certificate = if 2 * args.k <= a.big_n() {
        Some(analysis::certify(&a, args.k, mode)?)
    } else {
        None
    };
    let rnsp_check = match (args.s, &certificate) {
        (Some(s), Some(c)) if c.certified => Some(analysis::check_rnsp_sampled(
            &a,
            &weights,
            s,
            c,
            args.trials,
            args.seed,
        )?),
        _ => None,
    };
    let recovery = match (&args.signal, &args.estimate) {
        (Some(sp), Some(ep)) => {
            let x = io::read_vector(sp)?;
            let x_hat = io::read_vector(ep)?;
            if x.len() != x_hat.len() {
                return Err(Error::Dimension {
                    expected: x.len(),
                    got: x_hat.len(),
                }
                .into());
            }
            let diff: Vec<f64> = x.iter().zip(&x_hat).map(|(p, q)| q - p).collect();
            Some(RecoveryReport {
                l2_error: diff.iter().map(|v| v * v).sum::<f64>().sqrt(),
                weighted_l1_error: weighted_norm(&diff, &weights, 1.0)?,
                eta: args.eta,
                success: experiments::success_criterion(
                    &x,
                    &x_hat,
                    args.eta,
                    experiments::DEFAULT_SUCCESS_FACTOR,
                ),
            })
        }
        _ => None,
    };

    let report = VerifyReport {
        matrix_id: analysis::matrix_id(&a),
        n: a.n(),
        big_n: a.big_n(),
        d: a.d(),
        expansion,
        certificate,
        rnsp_check,
        recovery,
    };
    print_verify(&report);
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(path, json + "\n").map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    Ok(EXIT_OK)
}

fn print_verify(r: &VerifyReport) {
    println!("matrix {}: n = {}, N = {}, d = {}", r.matrix_id, r.n, r.big_n, r.d);
    let e = &r.expansion;
    println!(
        "epsilon_{} = {:.6} ({}, {} subsets, worst set {:?})",
        e.k,
        e.epsilon,
        if e.exhaustive { "exact" } else { "sampled lower bound" },
        e.examined,
        e.worst_set
    );
    match &r.certificate {
        Some(c) => {
            println!(
                "epsilon_2k = {:.6}: {}",
                c.epsilon_2k,
                if c.certified { "certified" } else { "not certified" }
            );
            if let (Some(p), Some(q)) = (c.rnsp, c.errors) {
                println!(
                    "rho = {:.6}, tau = {:.6}, C1 = {:.6}, C2 = {:.6}",
                    p.rho, p.tau, q.big_c1, q.big_c2
                );
            }
        }
        None => println!("2k exceeds N: no certificate"),
    }
    if let Some(c) = &r.rnsp_check {
        println!(
            "sampled null space check: {} violations in {} probes, max slack {:.3e}",
            c.violations, c.trials, c.max_slack
        );
    }
    if let Some(rec) = &r.recovery {
        println!(
            "recovery: l2 error {:.3e}, success {}",
            rec.l2_error, rec.success
        );
    }
}
