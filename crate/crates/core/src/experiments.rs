//! Monte-Carlo harness: weighted-sparse signals, noisy measurements, paired
//! decode trials over a phase grid, runtime benchmarks and CSV output.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{decode_with, DecodeOptions, DecodeProblem, DecodeStatus};
use crate::error::{check_len, Error, Result};
use crate::graph::SparseBinaryMatrix;
use crate::operator::{DenseMatrix, SensingOperator};
use crate::rng::{self, purpose};
use crate::weights::{weighted_norm, WeightVector, WeightedSignal};

/// Absolute ℓ2 threshold used when `η = 0`.
pub const NOISELESS_FLOOR: f64 = 1e-6;

pub const DEFAULT_SUCCESS_FACTOR: f64 = 10.0;

pub const CSV_HEADER: [&str; 13] = [
    "kind",
    "decoder",
    "m_over_N",
    "s_over_m_norm",
    "m",
    "s",
    "k",
    "trials",
    "successes",
    "prob",
    "mean_rel_err_l2",
    "mean_rel_err_lw1",
    "mean_runtime_s",
];

/// Weighted-sparse signal model.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalModel {
    pub weights: WeightVector,
    /// Weighted sparsity budget `s`.
    pub budget: f64,
    /// Non-zeros are `amplitude_scale · (g + u)`, `g ~ N(0,1)`, `u ~ U(0,1)`.
    pub amplitude_scale: f64,
    /// Optional cap on `|S|`.
    pub max_support: Option<usize>,
}

impl SignalModel {
    pub fn new(weights: WeightVector, budget: f64) -> Self {
        SignalModel {
            weights,
            budget,
            amplitude_scale: 1.0,
            max_support: None,
        }
    }

    pub fn big_n(&self) -> usize {
        self.weights.len()
    }
}

/// Draw a support without replacement with probability `∝ ω_i^{-2}`,
/// keeping only indices that still fit in the budget, until none fits.
///
/// A drawn index that does not fit can never fit later, so drawing among the
/// fitting indices only gives the same distribution.
pub fn sample_support(model: &SignalModel, seed: u64) -> Result<Vec<usize>> {
    let w = model.weights.omega();
    let min_cost = w.iter().map(|v| v * v).fold(f64::INFINITY, f64::min);
    if !(model.budget >= min_cost) {
        return Err(Error::domain(format!(
            "budget s = {} is below the smallest squared weight {min_cost}; no index fits",
            model.budget
        )));
    }
    let mut rng = rng::from_seed(seed);
    let cap = model.max_support.unwrap_or(usize::MAX);
    let mut remaining: Vec<usize> = (0..w.len()).collect();
    let mut used = 0.0;
    let mut support = Vec::new();
    while support.len() < cap {
        remaining.retain(|&i| used + w[i] * w[i] <= model.budget);
        if remaining.is_empty() {
            break;
        }
        let total: f64 = remaining.iter().map(|&i| 1.0 / (w[i] * w[i])).sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = remaining.len() - 1;
        for (p, &i) in remaining.iter().enumerate() {
            target -= 1.0 / (w[i] * w[i]);
            if target < 0.0 {
                pick = p;
                break;
            }
        }
        let i = remaining.swap_remove(pick);
        used += w[i] * w[i];
        support.push(i);
    }
    support.sort_unstable();
    Ok(support)
}

/// Fill `support` with `scale · (g + u)` amplitudes.
pub fn draw_signal(model: &SignalModel, support: &[usize], seed: u64) -> Result<WeightedSignal> {
    let mut rng = rng::from_seed(seed);
    let mut x = vec![0.0; model.big_n()];
    for &i in support {
        let slot = x.get_mut(i).ok_or_else(|| {
            Error::domain(format!(
                "support index {i} out of range for N = {}",
                model.big_n()
            ))
        })?;
        let g: f64 = StandardNormal.sample(&mut rng);
        let u: f64 = rng.random();
        *slot = model.amplitude_scale * (g + u);
    }
    WeightedSignal::new(x, &model.weights, model.budget)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoisyMeasurement {
    pub y: Vec<f64>,
    /// `‖e‖_1` of the realized noise.
    pub eta1: f64,
    /// `‖e‖_2`, equal to the requested level.
    pub eta2: f64,
}

/// Add Gaussian noise rescaled to `‖e‖_2 = sigma_level`.
pub fn add_noise(y: &[f64], sigma_level: f64, seed: u64) -> Result<NoisyMeasurement> {
    if !(sigma_level >= 0.0 && sigma_level.is_finite()) {
        return Err(Error::domain(format!(
            "noise level must be finite and >= 0, got {sigma_level}"
        )));
    }
    if sigma_level == 0.0 || y.is_empty() {
        return Ok(NoisyMeasurement {
            y: y.to_vec(),
            eta1: 0.0,
            eta2: 0.0,
        });
    }
    let mut rng = rng::from_seed(seed);
    let mut e: Vec<f64> = (0..y.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    e.iter_mut().for_each(|v| *v *= sigma_level / norm);
    Ok(NoisyMeasurement {
        y: y.iter().zip(&e).map(|(a, b)| a + b).collect(),
        eta1: e.iter().map(|v| v.abs()).sum(),
        eta2: sigma_level,
    })
}

/// `‖x̂ − x‖_2 < factor · η`, or `< 1e-6` when `η = 0`.
pub fn success_criterion(x: &[f64], x_hat: &[f64], eta: f64, factor: f64) -> bool {
    let threshold = if eta > 0.0 {
        factor * eta
    } else {
        NOISELESS_FLOOR
    };
    l2_distance(x, x_hat) < threshold
}

fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Expander,
    GaussianDense,
    /// `cols[i] = {i}`; needs `m = N`.
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    Weighted,
    Unweighted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderChoice {
    Both,
    Weighted,
    Unweighted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsScheme {
    Uniform,
    Polynomial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DRule {
    /// `d = ⌈2 ln N⌉`.
    TwoLnN,
    Fixed(usize),
}

/// Which noise norm sets the success threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessEta {
    Eta1,
    Eta2,
}

macro_rules! name_table {
    ($ty:ty { $($variant:ident => $name:literal),* $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str(match self { $(<$ty>::$variant => $name),* })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(<$ty>::$variant),)*
                    _ => Err(Error::Config(format!(
                        "unknown value {s:?}; expected one of: {}",
                        [$($name),*].join(", ")
                    ))),
                }
            }
        }
    };
}

name_table!(MatrixKind { Expander => "expander", GaussianDense => "gaussian_dense", Identity => "identity" });
name_table!(DecoderKind { Weighted => "weighted", Unweighted => "unweighted" });
name_table!(DecoderChoice { Both => "both", Weighted => "weighted", Unweighted => "unweighted" });
name_table!(WeightsScheme { Uniform => "uniform", Polynomial => "polynomial" });
name_table!(SuccessEta { Eta1 => "eta1", Eta2 => "eta2" });

impl DecoderChoice {
    pub fn decoders(self) -> &'static [DecoderKind] {
        match self {
            DecoderChoice::Both => &[DecoderKind::Weighted, DecoderKind::Unweighted],
            DecoderChoice::Weighted => &[DecoderKind::Weighted],
            DecoderChoice::Unweighted => &[DecoderKind::Unweighted],
        }
    }
}

impl DRule {
    pub fn degree(self, big_n: usize) -> usize {
        match self {
            DRule::TwoLnN => (2.0 * (big_n as f64).ln()).ceil() as usize,
            DRule::Fixed(d) => d,
        }
    }
}

impl fmt::Display for DRule {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            DRule::TwoLnN => f.write_str("2lnN"),
            DRule::Fixed(d) => write!(f, "{d}"),
        }
    }
}

impl FromStr for DRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "2lnN" {
            return Ok(DRule::TwoLnN);
        }
        s.parse()
            .map(DRule::Fixed)
            .map_err(|_| Error::Config(format!("d_rule must be 2lnN or an integer, got {s:?}")))
    }
}

/// Phase-grid and benchmark configuration.
///
/// Text form is one `key = value` per line, `#` starts a comment and lists
/// are comma separated. Keys: `N`, `d_rule`, `m_over_N_list`,
/// `s_over_m_list`, `m_over_N_points`, `s_over_m_points`, `trials`, `matrix`,
/// `weights_scheme`, `alpha`, `noise_l2`, `decoder`, `amplitude_scale`,
/// `success_factor`, `success_eta`, `bench_matrices`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub big_n: usize,
    pub d_rule: DRule,
    /// Explicit m/N values; when empty, `m_over_n_points` evenly spaced
    /// values on `[max(2d/N, 0.05), 0.35]`.
    pub m_over_n: Vec<f64>,
    /// Explicit s/m values; when empty, `s_over_m_points` evenly spaced
    /// values on `[1/min(m), 2.5]`.
    pub s_over_m: Vec<f64>,
    pub m_over_n_points: usize,
    pub s_over_m_points: usize,
    pub trials: usize,
    pub matrix: MatrixKind,
    pub weights_scheme: WeightsScheme,
    pub alpha: f64,
    pub noise_l2: f64,
    pub decoder: DecoderChoice,
    pub amplitude_scale: f64,
    pub success_factor: f64,
    pub success_eta: SuccessEta,
    pub bench_matrices: Vec<MatrixKind>,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig {
            big_n: 256,
            d_rule: DRule::TwoLnN,
            m_over_n: Vec::new(),
            s_over_m: Vec::new(),
            m_over_n_points: 13,
            s_over_m_points: 20,
            trials: 25,
            matrix: MatrixKind::Expander,
            weights_scheme: WeightsScheme::Polynomial,
            alpha: 0.4,
            noise_l2: 1e-6,
            decoder: DecoderChoice::Both,
            amplitude_scale: 1.0,
            success_factor: DEFAULT_SUCCESS_FACTOR,
            success_eta: SuccessEta::Eta1,
            bench_matrices: vec![MatrixKind::Expander, MatrixKind::GaussianDense],
        }
    }
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, T::Err> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(str::parse)
        .collect()
}

impl PhaseConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PhaseConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Config(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |what: &str| bad(format!("{key}: cannot parse {value:?} as {what}"));
            match key {
                "N" => cfg.big_n = value.parse().map_err(|_| num("an integer"))?,
                "d_rule" => cfg.d_rule = value.parse()?,
                "m_over_N_list" => {
                    cfg.m_over_n = parse_list(value).map_err(|_| num("a list of numbers"))?
                }
                "s_over_m_list" => {
                    cfg.s_over_m = parse_list(value).map_err(|_| num("a list of numbers"))?
                }
                "m_over_N_points" => {
                    cfg.m_over_n_points = value.parse().map_err(|_| num("an integer"))?
                }
                "s_over_m_points" => {
                    cfg.s_over_m_points = value.parse().map_err(|_| num("an integer"))?
                }
                "trials" => cfg.trials = value.parse().map_err(|_| num("an integer"))?,
                "matrix" => cfg.matrix = value.parse()?,
                "weights_scheme" => cfg.weights_scheme = value.parse()?,
                "alpha" => cfg.alpha = value.parse().map_err(|_| num("a number"))?,
                "noise_l2" => cfg.noise_l2 = value.parse().map_err(|_| num("a number"))?,
                "decoder" => cfg.decoder = value.parse()?,
                "amplitude_scale" => {
                    cfg.amplitude_scale = value.parse().map_err(|_| num("a number"))?
                }
                "success_factor" => {
                    cfg.success_factor = value.parse().map_err(|_| num("a number"))?
                }
                "success_eta" => cfg.success_eta = value.parse()?,
                "bench_matrices" => cfg.bench_matrices = parse_list(value)?,
                _ => return Err(bad(format!("unknown key {key:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Render as the text format accepted by [`PhaseConfig::parse`].
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut out = format!(
            "N = {}\nd_rule = {}\nm_over_N_points = {}\ns_over_m_points = {}\ntrials = {}\nmatrix = {}\n\
             weights_scheme = {}\nalpha = {}\nnoise_l2 = {}\ndecoder = {}\namplitude_scale = {}\n\
             success_factor = {}\nsuccess_eta = {}\nbench_matrices = {}\n",
            self.big_n,
            self.d_rule,
            self.m_over_n_points,
            self.s_over_m_points,
            self.trials,
            self.matrix,
            self.weights_scheme,
            self.alpha,
            self.noise_l2,
            self.decoder,
            self.amplitude_scale,
            self.success_factor,
            self.success_eta,
            self.bench_matrices.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
        );
        if !self.m_over_n.is_empty() {
            out.push_str(&format!("m_over_N_list = {}\n", join(&self.m_over_n)));
        }
        if !self.s_over_m.is_empty() {
            out.push_str(&format!("s_over_m_list = {}\n", join(&self.s_over_m)));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.big_n < 2 {
            return fail(format!("N must be at least 2, got {}", self.big_n));
        }
        let d = self.degree();
        if d == 0 {
            return fail("d must be at least 1".into());
        }
        if self
            .m_over_n
            .iter()
            .chain(&self.s_over_m)
            .any(|v| !(*v > 0.0 && v.is_finite()))
        {
            return fail("axis values must be positive and finite".into());
        }
        if (self.m_over_n.is_empty() && self.m_over_n_points == 0)
            || (self.s_over_m.is_empty() && self.s_over_m_points == 0)
        {
            return fail("axis point counts must be positive".into());
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        if !(self.noise_l2 >= 0.0 && self.noise_l2.is_finite()) {
            return fail(format!(
                "noise_l2 must be finite and >= 0, got {}",
                self.noise_l2
            ));
        }
        if !(self.success_factor > 0.0) {
            return fail(format!(
                "success_factor must be positive, got {}",
                self.success_factor
            ));
        }
        if !(self.amplitude_scale > 0.0 && self.amplitude_scale.is_finite()) {
            return fail(format!(
                "amplitude_scale must be positive, got {}",
                self.amplitude_scale
            ));
        }
        for m in self.m_values() {
            if m == 0 || m > self.big_n {
                return fail(format!("m = {m} must lie in 1..=N"));
            }
            if self.matrix == MatrixKind::Expander && d > m {
                return fail(format!("degree d = {d} exceeds m = {m}"));
            }
            if self.matrix == MatrixKind::Identity && m != self.big_n {
                return fail(format!("identity matrices need m = N, got m = {m}"));
            }
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        match self.matrix {
            MatrixKind::Identity => 1,
            _ => self.d_rule.degree(self.big_n),
        }
    }

    pub fn m_over_n_axis(&self) -> Vec<f64> {
        if !self.m_over_n.is_empty() {
            return self.m_over_n.clone();
        }
        let lo = (2.0 * self.degree() as f64 / self.big_n as f64).max(0.05);
        linspace(lo, 0.35_f64.max(lo), self.m_over_n_points)
    }

    pub fn m_values(&self) -> Vec<usize> {
        self.m_over_n_axis()
            .iter()
            .map(|r| ((r * self.big_n as f64).round() as usize).max(1))
            .collect()
    }

    pub fn s_over_m_axis(&self) -> Vec<f64> {
        if !self.s_over_m.is_empty() {
            return self.s_over_m.clone();
        }
        let min_m = self.m_values().into_iter().min().unwrap_or(1) as f64;
        linspace(1.0 / min_m, 2.5, self.s_over_m_points)
    }

    pub fn weights(&self) -> Result<WeightVector> {
        match self.weights_scheme {
            WeightsScheme::Uniform => Ok(WeightVector::uniform(self.big_n)),
            WeightsScheme::Polynomial => WeightVector::polynomial(self.big_n, self.alpha),
        }
    }
}

fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Map values affinely onto `[0, 1]`; a constant axis maps to 0.
pub fn normalize_axis(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
        .collect()
}

/// One decode within one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub matrix: MatrixKind,
    pub decoder: DecoderKind,
    pub m: usize,
    pub s: f64,
    pub k: usize,
    pub eta: f64,
    pub generation_s: f64,
    pub encode_s: f64,
    pub decode_s: f64,
    pub status: DecodeStatus,
    pub success: bool,
    pub rel_err_l2: f64,
    pub rel_err_l1: f64,
    pub rel_err_lw1: f64,
}

/// A generated sensing matrix of any kind.
pub enum Operator {
    Sparse(SparseBinaryMatrix),
    Dense(DenseMatrix),
}

impl Operator {
    pub fn generate(kind: MatrixKind, big_n: usize, m: usize, d: usize, seed: u64) -> Result<Self> {
        Ok(match kind {
            MatrixKind::Expander => {
                Operator::Sparse(SparseBinaryMatrix::generate(big_n, m, d, seed)?)
            }
            MatrixKind::GaussianDense => Operator::Dense(DenseMatrix::gaussian(m, big_n, seed)),
            MatrixKind::Identity => {
                check_len(big_n, m)?;
                Operator::Sparse(SparseBinaryMatrix::from_columns(
                    m,
                    (0..m).map(|i| vec![i]).collect(),
                )?)
            }
        })
    }

    pub fn as_operator(&self) -> &dyn SensingOperator {
        match self {
            Operator::Sparse(a) => a,
            Operator::Dense(a) => a,
        }
    }
}

fn relative(err: f64, reference: f64) -> f64 {
    if reference > 0.0 {
        err / reference
    } else {
        err
    }
}

/// Everything that identifies one trial.
#[derive(Clone, Copy, Debug)]
pub struct TrialSpec {
    pub matrix: MatrixKind,
    pub m: usize,
    pub s: f64,
    pub seed: u64,
}

/// Run one end-to-end trial (fresh matrix, signal and noise) and decode it
/// with each requested decoder on the same measurements.
pub fn run_trial(
    cfg: &PhaseConfig,
    spec: TrialSpec,
    decoders: &[DecoderKind],
) -> Result<Vec<TrialRecord>> {
    let sub = |p: u64| rng::derive_seed(spec.seed, &[p]);
    let weights = cfg.weights()?;
    let mut model = SignalModel::new(weights.clone(), spec.s);
    model.amplitude_scale = cfg.amplitude_scale;

    let clock = Instant::now();
    let op = Operator::generate(
        spec.matrix,
        cfg.big_n,
        spec.m,
        cfg.degree(),
        sub(purpose::MATRIX),
    )?;
    let generation_s = clock.elapsed().as_secs_f64();

    let support = sample_support(&model, sub(purpose::SUPPORT))?;
    let signal = draw_signal(&model, &support, sub(purpose::AMPLITUDE))?;

    let clock = Instant::now();
    let clean = op.as_operator().apply(&signal.x)?;
    let encode_s = clock.elapsed().as_secs_f64();

    let noisy = add_noise(&clean, cfg.noise_l2, sub(purpose::NOISE))?;
    let eta = noisy.eta1;
    let threshold_eta = match cfg.success_eta {
        SuccessEta::Eta1 => noisy.eta1,
        SuccessEta::Eta2 => noisy.eta2,
    };
    let x = &signal.x;
    let x_l2 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let x_l1 = x.iter().map(|v| v.abs()).sum::<f64>();
    let x_lw1 = weighted_norm(x, &weights, 1.0)?;
    let uniform = WeightVector::uniform(cfg.big_n);

    decoders
        .iter()
        .map(|&decoder| {
            let w = match decoder {
                DecoderKind::Weighted => &weights,
                DecoderKind::Unweighted => &uniform,
            };
            let problem = DecodeProblem::new(op.as_operator(), &noisy.y, w, eta)?;
            let clock = Instant::now();
            let result = decode_with(&problem, &DecodeOptions::default())?;
            let decode_s = clock.elapsed().as_secs_f64();
            let diff: Vec<f64> = x.iter().zip(&result.x_hat).map(|(a, b)| b - a).collect();
            Ok(TrialRecord {
                seed: spec.seed,
                matrix: spec.matrix,
                decoder,
                m: spec.m,
                s: spec.s,
                k: signal.k(),
                eta,
                generation_s,
                encode_s,
                decode_s,
                status: result.status,
                success: result.status == DecodeStatus::Optimal
                    && success_criterion(x, &result.x_hat, threshold_eta, cfg.success_factor),
                rel_err_l2: relative(l2_distance(x, &result.x_hat), x_l2),
                rel_err_l1: relative(diff.iter().map(|v| v.abs()).sum(), x_l1),
                rel_err_lw1: relative(weighted_norm(&diff, &weights, 1.0)?, x_lw1),
            })
        })
        .collect()
}

/// Aggregated results of one (matrix, decoder, m, s) cell; also one CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub kind: MatrixKind,
    pub decoder: DecoderKind,
    #[serde(rename = "m_over_N")]
    pub m_over_n: f64,
    pub s_over_m_norm: f64,
    pub m: usize,
    pub s: f64,
    /// Largest `|S|` over the cell's trials.
    pub k: usize,
    pub trials: usize,
    pub successes: usize,
    pub prob: f64,
    pub mean_rel_err_l2: f64,
    pub mean_rel_err_lw1: f64,
    pub mean_runtime_s: f64,
}

impl CellSummary {
    fn sort_key(&self) -> (MatrixKind, DecoderKind, f64, f64) {
        (self.kind, self.decoder, self.m_over_n, self.s_over_m_norm)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub m_over_n: Vec<f64>,
    pub s_over_m: Vec<f64>,
    pub s_over_m_norm: Vec<f64>,
    pub cells: Vec<CellSummary>,
}

/// Which trial timings feed `mean_runtime_s`.
#[derive(Clone, Copy)]
enum Timing {
    Decode,
    EndToEnd,
}

fn summarize(
    kind: MatrixKind,
    decoder: DecoderKind,
    (m_over_n, s_over_m_norm): (f64, f64),
    (m, s): (usize, f64),
    trials: &[&TrialRecord],
    timing: Timing,
) -> CellSummary {
    let count = trials.len();
    let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
        if count == 0 {
            0.0
        } else {
            trials.iter().map(|t| f(t)).sum::<f64>() / count as f64
        }
    };
    let successes = trials.iter().filter(|t| t.success).count();
    CellSummary {
        kind,
        decoder,
        m_over_n,
        s_over_m_norm,
        m,
        s,
        k: trials.iter().map(|t| t.k).max().unwrap_or(0),
        trials: count,
        successes,
        prob: if count == 0 {
            0.0
        } else {
            successes as f64 / count as f64
        },
        mean_rel_err_l2: mean(&|t| t.rel_err_l2),
        mean_rel_err_lw1: mean(&|t| t.rel_err_lw1),
        mean_runtime_s: match timing {
            Timing::Decode => mean(&|t| t.decode_s),
            Timing::EndToEnd => mean(&|t| t.generation_s + t.encode_s + t.decode_s),
        },
    }
}

struct CellPlan {
    index: usize,
    kind: MatrixKind,
    m_over_n: f64,
    s_norm: f64,
    m: usize,
    s: f64,
}

fn run_cells(
    cfg: &PhaseConfig,
    plans: &[CellPlan],
    decoders: &[DecoderKind],
    seed: u64,
    timing: Timing,
) -> Result<Vec<CellSummary>> {
    let jobs: Vec<(usize, usize)> = (0..plans.len())
        .flat_map(|c| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(c, t)| {
            let plan = &plans[c];
            let spec = TrialSpec {
                matrix: plan.kind,
                m: plan.m,
                s: plan.s,
                seed: rng::derive_seed(seed, &[plan.index as u64, t as u64]),
            };
            run_trial(cfg, spec, decoders)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut by_cell: BTreeMap<(usize, DecoderKind), Vec<&TrialRecord>> = BTreeMap::new();
    for (&(c, _), recs) in jobs.iter().zip(&records) {
        for r in recs {
            by_cell.entry((c, r.decoder)).or_default().push(r);
        }
    }
    let mut cells: Vec<CellSummary> = Vec::new();
    for (c, plan) in plans.iter().enumerate() {
        for &decoder in decoders {
            let trials = by_cell.get(&(c, decoder)).map(Vec::as_slice).unwrap_or(&[]);
            cells.push(summarize(
                plan.kind,
                decoder,
                (plan.m_over_n, plan.s_norm),
                (plan.m, plan.s),
                trials,
                timing,
            ));
        }
    }
    cells.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        (ka.0, ka.1)
            .cmp(&(kb.0, kb.1))
            .then(ka.2.total_cmp(&kb.2))
            .then(ka.3.total_cmp(&kb.3))
    });
    Ok(cells)
}

fn grid_plans(
    cfg: &PhaseConfig,
    kinds: &[MatrixKind],
) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<CellPlan>) {
    let m_axis = cfg.m_over_n_axis();
    let m_values = cfg.m_values();
    let s_axis = cfg.s_over_m_axis();
    let s_norm = normalize_axis(&s_axis);
    let mut plans = Vec::new();
    for &kind in kinds {
        for (mi, (&r, &m)) in m_axis.iter().zip(&m_values).enumerate() {
            for (si, &sm) in s_axis.iter().enumerate() {
                plans.push(CellPlan {
                    index: mi * s_axis.len() + si,
                    kind,
                    m_over_n: r,
                    s_norm: s_norm[si],
                    m,
                    s: sm * m as f64,
                });
            }
        }
    }
    (m_axis, s_axis, s_norm, plans)
}

/// Run `cfg.trials` paired trials per grid cell.
///
/// Trial `t` of cell `c` draws everything from the stream
/// `(seed, c, t)`, so the weighted and unweighted decoders see identical
/// instances and results do not depend on the worker count.
pub fn run_phase_grid(cfg: &PhaseConfig, seed: u64) -> Result<PhaseGrid> {
    cfg.validate()?;
    let (m_over_n, s_over_m, s_over_m_norm, plans) = grid_plans(cfg, &[cfg.matrix]);
    let cells = run_cells(cfg, &plans, cfg.decoder.decoders(), seed, Timing::Decode)?;
    Ok(PhaseGrid {
        m_over_n,
        s_over_m,
        s_over_m_norm,
        cells,
    })
}

/// Mean generation + encode + decode time per (matrix kind, m, s) cell for
/// every kind in `cfg.bench_matrices`, weighted decoder only.
pub fn run_benchmark(cfg: &PhaseConfig, seed: u64) -> Result<Vec<CellSummary>> {
    if cfg.trials == 0 {
        return Ok(Vec::new());
    }
    let mut cfg = cfg.clone();
    cfg.matrix = MatrixKind::Expander;
    cfg.validate()?;
    let (_, _, _, plans) = grid_plans(&cfg, &cfg.bench_matrices);
    run_cells(
        &cfg,
        &plans,
        &[DecoderKind::Weighted],
        seed,
        Timing::EndToEnd,
    )
}

impl PhaseGrid {
    pub fn cell(
        &self,
        decoder: DecoderKind,
        m_index: usize,
        s_index: usize,
    ) -> Option<&CellSummary> {
        let r = *self.m_over_n.get(m_index)?;
        let s = *self.s_over_m_norm.get(s_index)?;
        self.cells
            .iter()
            .find(|c| c.decoder == decoder && c.m_over_n == r && c.s_over_m_norm == s)
    }

    /// Success probabilities indexed `[m][s]`; missing cells are NaN.
    pub fn probabilities(&self, decoder: DecoderKind) -> Vec<Vec<f64>> {
        (0..self.m_over_n.len())
            .map(|mi| {
                (0..self.s_over_m.len())
                    .map(|si| self.cell(decoder, mi, si).map_or(f64::NAN, |c| c.prob))
                    .collect()
            })
            .collect()
    }

    /// Area of `{p >= level}` over the unit square spanned by the normalized
    /// m/N and s/m axes, with `p` interpolated bilinearly between cells.
    pub fn superlevel_area(&self, decoder: DecoderKind, level: f64) -> f64 {
        let p = self.probabilities(decoder);
        let mx = normalize_axis(&self.m_over_n);
        let sx = self.s_over_m_norm.clone();
        superlevel_area(&mx, &sx, &p, level)
    }

    /// Cells where the weighted decoder succeeded at least as often as the
    /// unweighted one, and the number of compared cells.
    pub fn paired_dominance(&self) -> (usize, usize) {
        let (mut wins, mut total) = (0, 0);
        for mi in 0..self.m_over_n.len() {
            for si in 0..self.s_over_m.len() {
                if let (Some(w), Some(u)) = (
                    self.cell(DecoderKind::Weighted, mi, si),
                    self.cell(DecoderKind::Unweighted, mi, si),
                ) {
                    total += 1;
                    if w.successes >= u.successes {
                        wins += 1;
                    }
                }
            }
        }
        (wins, total)
    }
}

/// Sub-samples per cell edge used by [`superlevel_area`].
const AREA_RESOLUTION: usize = 64;

/// Area of `{p >= level}` for a function given on a tensor grid with
/// ascending axes, bilinearly interpolated, by midpoint sampling.
pub fn superlevel_area(xs: &[f64], ys: &[f64], p: &[Vec<f64>], level: f64) -> f64 {
    if xs.len() < 2 || ys.len() < 2 {
        return 0.0;
    }
    let mut area = 0.0;
    for i in 0..xs.len() - 1 {
        for j in 0..ys.len() - 1 {
            let (w, h) = (xs[i + 1] - xs[i], ys[j + 1] - ys[j]);
            let corners = [p[i][j], p[i + 1][j], p[i][j + 1], p[i + 1][j + 1]];
            if corners.iter().any(|v| v.is_nan()) {
                continue;
            }
            let mut inside = 0usize;
            for a in 0..AREA_RESOLUTION {
                let u = (a as f64 + 0.5) / AREA_RESOLUTION as f64;
                for b in 0..AREA_RESOLUTION {
                    let v = (b as f64 + 0.5) / AREA_RESOLUTION as f64;
                    let value = corners[0] * (1.0 - u) * (1.0 - v)
                        + corners[1] * u * (1.0 - v)
                        + corners[2] * (1.0 - u) * v
                        + corners[3] * u * v;
                    if value >= level {
                        inside += 1;
                    }
                }
            }
            area += w * h * inside as f64 / (AREA_RESOLUTION * AREA_RESOLUTION) as f64;
        }
    }
    area
}

/// Median wall time of sparse versus dense matrix-vector products.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApplyTiming {
    pub expander_median_s: f64,
    pub dense_median_s: f64,
    /// `dense / expander`.
    pub speedup: f64,
}

pub fn compare_apply(
    big_n: usize,
    m: usize,
    d: usize,
    repetitions: usize,
    seed: u64,
) -> Result<ApplyTiming> {
    if repetitions == 0 {
        return Err(Error::domain("need at least one repetition"));
    }
    let sparse =
        SparseBinaryMatrix::generate(big_n, m, d, rng::derive_seed(seed, &[purpose::MATRIX]))?;
    let dense = DenseMatrix::gaussian(m, big_n, rng::derive_seed(seed, &[purpose::MATRIX, 1]));
    let mut r = rng::stream(seed, &[purpose::AMPLITUDE]);
    let z: Vec<f64> = (0..big_n).map(|_| StandardNormal.sample(&mut r)).collect();
    let median = |op: &dyn SensingOperator| -> Result<f64> {
        let mut times = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let clock = Instant::now();
            std::hint::black_box(op.apply(std::hint::black_box(&z))?);
            times.push(clock.elapsed().as_secs_f64());
        }
        times.sort_by(f64::total_cmp);
        Ok(times[times.len() / 2])
    };
    let expander_median_s = median(&sparse)?;
    let dense_median_s = median(&dense)?;
    Ok(ApplyTiming {
        expander_median_s,
        dense_median_s,
        speedup: dense_median_s / expander_median_s.max(f64::MIN_POSITIVE),
    })
}

/// Write cells as CSV, sorted by matrix kind, decoder, m/N and normalized s/m.
pub fn emit_csv(cells: &[CellSummary], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut sorted: Vec<&CellSummary> = cells.iter().collect();
    sorted.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        (ka.0, ka.1)
            .cmp(&(kb.0, kb.1))
            .then(ka.2.total_cmp(&kb.2))
            .then(ka.3.total_cmp(&kb.3))
    });
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for c in sorted {
        w.serialize(c).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<CellSummary>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

/// Run metadata written next to a CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub degree: usize,
    pub amplitude_rule: String,
    pub config: PhaseConfig,
}

impl RunMetadata {
    pub fn new(cfg: &PhaseConfig, seed: u64) -> Self {
        RunMetadata {
            seed,
            degree: cfg.degree(),
            amplitude_rule: format!("gauss_plus_uniform(scale = {})", cfg.amplitude_scale),
            config: cfg.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("metadata serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_support_has_exact_size() {
        let model = SignalModel::new(WeightVector::uniform(10), 3.0);
        for seed in 0..20 {
            assert_eq!(sample_support(&model, seed).unwrap().len(), 3);
        }
    }

    #[test]
    fn budget_below_min_weight_fails() {
        let model = SignalModel::new(WeightVector::polynomial(5, 1.0).unwrap(), 0.5);
        assert!(sample_support(&model, 1).is_err());
    }

    #[test]
    fn max_support_caps() {
        let mut model = SignalModel::new(WeightVector::uniform(10), 8.0);
        model.max_support = Some(2);
        assert_eq!(sample_support(&model, 3).unwrap().len(), 2);
    }

    #[test]
    fn signal_is_seeded_and_empty_support_is_zero() {
        let model = SignalModel::new(WeightVector::uniform(6), 3.0);
        let z = draw_signal(&model, &[], 1).unwrap();
        assert!(z.x.iter().all(|v| *v == 0.0));
        assert_eq!(
            draw_signal(&model, &[1, 4], 9).unwrap(),
            draw_signal(&model, &[1, 4], 9).unwrap()
        );
    }

    #[test]
    fn noise_examples() {
        let y = vec![1.0; 16];
        let z = add_noise(&y, 0.0, 1).unwrap();
        assert_eq!((z.eta1, z.eta2), (0.0, 0.0));
        assert_eq!(z.y, y);
        let z = add_noise(&y, 1e-6, 2).unwrap();
        let e: Vec<f64> = z.y.iter().zip(&y).map(|(a, b)| a - b).collect();
        let l2 = e.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((l2 - 1e-6).abs() < 1e-15);
        assert!(z.eta1 <= 4.0 * 1e-6 + 1e-18);
    }

    #[test]
    fn success_examples() {
        let x = [1.0, 0.0];
        assert!(success_criterion(&x, &[1.0 + 1e-7, 0.0], 1e-6, 10.0));
        assert!(!success_criterion(&x, &[1.0 + 1e-4, 0.0], 1e-6, 10.0));
        assert!(success_criterion(&x, &x, 0.0, 10.0));
        assert!(!success_criterion(&x, &[1.0 + 2e-6, 0.0], 0.0, 10.0));
    }

    #[test]
    fn config_round_trip_and_errors() {
        let cfg = PhaseConfig::parse(
            "# desk grid\nN = 64\nd_rule = 4\nm_over_N_list = 0.25, 0.5\ns_over_m_points = 3\n\
             trials = 2\ndecoder = weighted\nnoise_l2 = 0\n",
        )
        .unwrap();
        assert_eq!(cfg.big_n, 64);
        assert_eq!(cfg.m_values(), vec![16, 32]);
        assert_eq!(cfg.s_over_m_axis().len(), 3);
        assert_eq!(PhaseConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert!(PhaseConfig::parse("bogus = 1").is_err());
        assert!(PhaseConfig::parse("N = x").is_err());
        assert!(PhaseConfig::parse("matrix = circulant").is_err());
        assert!(PhaseConfig::parse("N = 16\nd_rule = 9\nm_over_N_list = 0.25").is_err());
    }

    #[test]
    fn default_axes() {
        let cfg = PhaseConfig::default();
        assert_eq!(cfg.degree(), 12);
        let m = cfg.m_over_n_axis();
        assert_eq!(m.len(), 13);
        assert!((m[0] - 24.0 / 256.0).abs() < 1e-15);
        assert!((m[12] - 0.35).abs() < 1e-15);
        let s = cfg.s_over_m_axis();
        assert!((s[0] - 1.0 / 24.0).abs() < 1e-15);
        assert_eq!(normalize_axis(&s)[19], 1.0);
        assert_eq!(normalize_axis(&[3.0]), vec![0.0]);
    }

    #[test]
    fn identity_grid_always_succeeds() {
        let cfg = PhaseConfig {
            big_n: 8,
            matrix: MatrixKind::Identity,
            m_over_n: vec![1.0],
            s_over_m: vec![0.5],
            trials: 1,
            noise_l2: 0.0,
            ..PhaseConfig::default()
        };
        let grid = run_phase_grid(&cfg, 5).unwrap();
        assert_eq!(grid.cells.len(), 2);
        assert!(grid.cells.iter().all(|c| c.prob == 1.0));
    }

    #[test]
    fn area_of_constant_fields() {
        let xs = [0.0, 0.5, 1.0];
        let ones = vec![vec![1.0; 3]; 3];
        assert!((superlevel_area(&xs, &xs, &ones, 0.5) - 1.0).abs() < 1e-12);
        let zeros = vec![vec![0.0; 3]; 3];
        assert_eq!(superlevel_area(&xs, &xs, &zeros, 0.5), 0.0);
        // p = x: the superlevel set {x >= 0.5} is half the square.
        let ramp: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x; 3]).collect();
        assert!((superlevel_area(&xs, &xs, &ramp, 0.5) - 0.5).abs() < 1e-2);
    }

    #[test]
    fn zero_trial_benchmark_is_empty() {
        let cfg = PhaseConfig {
            trials: 0,
            ..PhaseConfig::default()
        };
        assert!(run_benchmark(&cfg, 1).unwrap().is_empty());
    }
}
