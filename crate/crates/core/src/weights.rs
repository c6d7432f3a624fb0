//! Weight vectors, weighted norms and weighted sparsity.
//!
//! Weighted cardinality is `ω(S) = Σ_{i∈S} ω_i²` and a set is weighted
//! `s`-sparse when `ω(S) <= s`. Logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Substitute for `w = 0` in the two-level scheme, which would otherwise
/// divide by zero.
pub const TWO_LEVEL_ZERO_GUARD: f64 = 1e-8;

/// Largest number of non-zero entries accepted by the exact best s-term search.
pub const EXACT_SEARCH_LIMIT: usize = 24;

const BUDGET_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightScheme {
    Uniform,
    /// `ω_i = i^{α/2}` with 1-based `i`.
    Polynomial {
        alpha: f64,
    },
    /// `ω_i = 1` on the estimated support, `1/w` elsewhere.
    TwoLevel {
        w: f64,
        support: Vec<usize>,
    },
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    omega: Vec<f64>,
    scheme: WeightScheme,
}

impl WeightVector {
    pub fn uniform(big_n: usize) -> Self {
        WeightVector {
            omega: vec![1.0; big_n],
            scheme: WeightScheme::Uniform,
        }
    }

    pub fn polynomial(big_n: usize, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!(
                "polynomial exponent alpha must be finite and >= 0, got {alpha}"
            )));
        }
        let omega = (1..=big_n).map(|i| (i as f64).powf(alpha / 2.0)).collect();
        Ok(WeightVector {
            omega,
            scheme: WeightScheme::Polynomial { alpha },
        })
    }

    pub fn two_level(big_n: usize, w: f64, support: &[usize]) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::domain(format!(
                "two-level weight w must lie in [0, 1], got {w}"
            )));
        }
        if let Some(&i) = support.iter().find(|&&i| i >= big_n) {
            return Err(Error::domain(format!(
                "estimated support index {i} out of range for N = {big_n}"
            )));
        }
        let off = 1.0 / if w == 0.0 { TWO_LEVEL_ZERO_GUARD } else { w };
        let mut omega = vec![off; big_n];
        for &i in support {
            omega[i] = 1.0;
        }
        let mut support = support.to_vec();
        support.sort_unstable();
        support.dedup();
        Ok(WeightVector {
            omega,
            scheme: WeightScheme::TwoLevel { w, support },
        })
    }

    pub fn custom(omega: Vec<f64>) -> Result<Self> {
        Self::validate(&omega)?;
        Ok(WeightVector {
            omega,
            scheme: WeightScheme::Custom,
        })
    }

    pub(crate) fn from_parts(omega: Vec<f64>, scheme: WeightScheme) -> Result<Self> {
        Self::validate(&omega)?;
        Ok(WeightVector { omega, scheme })
    }

    fn validate(omega: &[f64]) -> Result<()> {
        match omega.iter().position(|w| !(w.is_finite() && *w >= 1.0)) {
            Some(i) => Err(Error::domain(format!(
                "weights must be finite and >= 1; omega[{i}] = {}",
                omega[i]
            ))),
            None => Ok(()),
        }
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn scheme(&self) -> &WeightScheme {
        &self.scheme
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Same values with every weight multiplied by `factor >= 1/min ω`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::custom(self.omega.iter().map(|w| w * factor).collect())
    }
}

/// Scheme selector for [`make_weights`].
#[derive(Clone, Debug, PartialEq)]
pub enum SchemeSpec {
    Uniform,
    Polynomial {
        alpha: f64,
    },
    TwoLevel {
        w: f64,
        estimated_support: Vec<usize>,
    },
}

pub fn make_weights(scheme: &SchemeSpec, big_n: usize) -> Result<WeightVector> {
    match scheme {
        SchemeSpec::Uniform => Ok(WeightVector::uniform(big_n)),
        SchemeSpec::Polynomial { alpha } => WeightVector::polynomial(big_n, *alpha),
        SchemeSpec::TwoLevel {
            w,
            estimated_support,
        } => WeightVector::two_level(big_n, *w, estimated_support),
    }
}

/// `‖x‖_{ω,p} = (Σ ω_i^{2-p} |x_i|^p)^{1/p}` for `p ∈ (0, 2]`.
pub fn weighted_norm(x: &[f64], omega: &WeightVector, p: f64) -> Result<f64> {
    check_len(omega.len(), x.len())?;
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::domain(format!(
            "norm exponent p must lie in (0, 2], got {p}"
        )));
    }
    if p == 1.0 {
        return Ok(l1(x, omega.omega()));
    }
    let sum: f64 = x
        .iter()
        .zip(omega.omega())
        .map(|(v, w)| w.powf(2.0 - p) * v.abs().powf(p))
        .sum();
    Ok(sum.powf(1.0 / p))
}

fn l1(x: &[f64], omega: &[f64]) -> f64 {
    x.iter().zip(omega).map(|(v, w)| w * v.abs()).sum()
}

/// `Σ_{i : x_i ≠ 0} ω_i²`.
pub fn weighted_l0(x: &[f64], omega: &WeightVector) -> Result<f64> {
    check_len(omega.len(), x.len())?;
    Ok(x.iter()
        .zip(omega.omega())
        .filter(|(v, _)| **v != 0.0)
        .map(|(_, w)| w * w)
        .sum())
}

/// `ω(S) = Σ_{i∈S} ω_i²`.
pub fn weighted_cardinality(set: &[usize], omega: &WeightVector) -> Result<f64> {
    set.iter()
        .map(|&i| {
            omega.omega().get(i).map(|w| w * w).ok_or_else(|| {
                Error::domain(format!("index {i} out of range for N = {}", omega.len()))
            })
        })
        .sum()
}

fn fits(used: f64, cost: f64, budget: f64) -> bool {
    used + cost <= budget + BUDGET_SLACK * budget.abs().max(1.0)
}

/// A signal together with its support and weighted sparsity budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSignal {
    pub x: Vec<f64>,
    pub support: Vec<usize>,
    pub weighted_cardinality: f64,
    pub budget: f64,
}

impl WeightedSignal {
    pub fn new(x: Vec<f64>, omega: &WeightVector, budget: f64) -> Result<Self> {
        check_len(omega.len(), x.len())?;
        let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
        let weighted_cardinality = weighted_cardinality(&support, omega)?;
        if !fits(0.0, weighted_cardinality, budget) {
            return Err(Error::domain(format!(
                "signal has weighted cardinality {weighted_cardinality} above budget {budget}"
            )));
        }
        Ok(WeightedSignal {
            x,
            support,
            weighted_cardinality,
            budget,
        })
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }
}

/// Kept set and tail error of a weighted best s-term approximation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestTerm {
    pub support: Vec<usize>,
    /// `σ_s(x)_{ω,1} = ‖x_{S^c}‖_{ω,1}`.
    pub sigma: f64,
}

/// Greedy weighted best s-term approximation.
///
/// Choosing `S` is a 0/1 knapsack with value `ω_i|x_i|` and cost `ω_i²`.
/// Entries are visited by decreasing `|x_i|/ω_i` (value per unit cost, ties to
/// the lower index) and kept whenever they still fit. Exact for uniform
/// weights; otherwise `sigma` exceeds the optimum by at most
/// [`greedy_gap_bound`].
pub fn best_weighted_s_term(x: &[f64], omega: &WeightVector, s: f64) -> Result<BestTerm> {
    check_len(omega.len(), x.len())?;
    let w = omega.omega();
    let mut order: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    order.sort_by(|&a, &b| {
        (x[b].abs() / w[b])
            .total_cmp(&(x[a].abs() / w[a]))
            .then(a.cmp(&b))
    });
    let mut used = 0.0;
    let mut support = Vec::new();
    for i in order {
        let cost = w[i] * w[i];
        if fits(used, cost, s) {
            used += cost;
            support.push(i);
        }
    }
    support.sort_unstable();
    Ok(finish_best_term(x, w, support))
}

fn finish_best_term(x: &[f64], w: &[f64], support: Vec<usize>) -> BestTerm {
    let mut kept = vec![false; x.len()];
    for &i in &support {
        kept[i] = true;
    }
    let sigma = (0..x.len())
        .filter(|&i| !kept[i])
        .map(|i| w[i] * x[i].abs())
        .sum();
    BestTerm { support, sigma }
}

/// Largest single-entry value `ω_i|x_i|` among entries with `ω_i² <= s`;
/// the greedy `sigma` is never more than this above the optimum.
pub fn greedy_gap_bound(x: &[f64], omega: &WeightVector, s: f64) -> Result<f64> {
    check_len(omega.len(), x.len())?;
    Ok(x.iter()
        .zip(omega.omega())
        .filter(|(_, w)| fits(0.0, *w * *w, s))
        .map(|(v, w)| w * v.abs())
        .fold(0.0, f64::max))
}

/// Exact weighted best s-term approximation by branch and bound, optionally
/// limiting `|S|`. Accepts at most [`EXACT_SEARCH_LIMIT`] non-zero entries.
pub fn best_weighted_s_term_exact(
    x: &[f64],
    omega: &WeightVector,
    s: f64,
    max_card: Option<usize>,
) -> Result<BestTerm> {
    check_len(omega.len(), x.len())?;
    let w = omega.omega();
    let mut items: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    if items.len() > EXACT_SEARCH_LIMIT {
        return Err(Error::domain(format!(
            "exact best s-term search supports at most {EXACT_SEARCH_LIMIT} non-zeros, got {}",
            items.len()
        )));
    }
    items.sort_by(|&a, &b| (x[b].abs() / w[b]).total_cmp(&(x[a].abs() / w[a])));
    let values: Vec<f64> = items.iter().map(|&i| w[i] * x[i].abs()).collect();
    let costs: Vec<f64> = items.iter().map(|&i| w[i] * w[i]).collect();

    let mut search = Knapsack {
        values: &values,
        costs: &costs,
        budget: s,
        max_card: max_card.unwrap_or(usize::MAX),
        chosen: Vec::new(),
        best_value: 0.0,
        best: Vec::new(),
    };
    search.branch(0, 0.0, 0.0);
    let mut support: Vec<usize> = search.best.iter().map(|&p| items[p]).collect();
    support.sort_unstable();
    Ok(finish_best_term(x, w, support))
}

struct Knapsack<'a> {
    values: &'a [f64],
    costs: &'a [f64],
    budget: f64,
    max_card: usize,
    chosen: Vec<usize>,
    best_value: f64,
    best: Vec<usize>,
}

impl Knapsack<'_> {
    /// Fractional relaxation of the remaining items; items are sorted by
    /// density so this is the LP bound.
    fn upper_bound(&self, from: usize, used: f64, value: f64) -> f64 {
        let mut room = self.budget - used;
        let mut bound = value;
        for p in from..self.values.len() {
            if room <= 0.0 {
                break;
            }
            let take = (room / self.costs[p]).min(1.0);
            bound += take * self.values[p];
            room -= take * self.costs[p];
        }
        bound
    }

    fn branch(&mut self, p: usize, used: f64, value: f64) {
        if value > self.best_value {
            self.best_value = value;
            self.best.clone_from(&self.chosen);
        }
        if p == self.values.len() || self.chosen.len() >= self.max_card {
            return;
        }
        if self.upper_bound(p, used, value) <= self.best_value * (1.0 + 1e-15) {
            return;
        }
        if fits(used, self.costs[p], self.budget) {
            self.chosen.push(p);
            self.branch(p + 1, used + self.costs[p], value + self.values[p]);
            self.chosen.pop();
        }
        self.branch(p + 1, used, value);
    }
}

/// `(k+1)^{1+α}`, an upper bound on `Σ_{i=1}^{k} i^α`.
pub fn polynomial_budget_bound(k: usize, alpha: f64) -> f64 {
    ((k + 1) as f64).powf(1.0 + alpha)
}

/// How `γ` is chosen for the sample-complexity recommendation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaRule {
    /// `γ = (2 ln(N/k))^{-1}`.
    Uniform,
    /// `γ = min{1, s / (2 k ln(N/k))}`: weights chosen so `s/γ ~ k ln(N/k)`.
    Polynomial {
        alpha: f64,
    },
    /// `γ = min{1, (2 w² ln(N/s))^{-1}}`.
    PriorSupport {
        w: f64,
    },
    /// `γ = 1`.
    KnownSupport,
    Fixed {
        gamma: f64,
    },
}

/// Order constants for `n = C_n s/(ε²γ)` and `d = C_d εn/k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderConstants {
    pub c_n: f64,
    pub c_d: f64,
}

impl Default for OrderConstants {
    fn default() -> Self {
        OrderConstants { c_n: 1.0, c_d: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterRecommendation {
    pub n: usize,
    pub d: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub scheme: GammaRule,
    pub constants: OrderConstants,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecommendInput {
    pub big_n: usize,
    pub k: usize,
    pub s: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl GammaRule {
    pub fn gamma(&self, big_n: usize, k: usize, s: f64) -> Result<f64> {
        let log_ratio = |den: f64| {
            let r = (big_n as f64 / den).ln();
            if r > 0.0 {
                Ok(r)
            } else {
                Err(Error::domain(format!(
                    "log(N/{den}) must be positive; N = {big_n} is too small"
                )))
            }
        };
        let gamma = match *self {
            GammaRule::Uniform => 1.0 / (2.0 * log_ratio(k as f64)?),
            GammaRule::Polynomial { .. } => (s / (2.0 * k as f64 * log_ratio(k as f64)?)).min(1.0),
            GammaRule::PriorSupport { w } => {
                let w = if w == 0.0 { TWO_LEVEL_ZERO_GUARD } else { w };
                let denom = 2.0 * w * w * (big_n as f64 / s).ln();
                if denom <= 1.0 {
                    1.0
                } else {
                    1.0 / denom
                }
            }
            GammaRule::KnownSupport => 1.0,
            GammaRule::Fixed { gamma } => gamma,
        };
        if gamma > 0.0 && gamma.is_finite() {
            Ok(gamma)
        } else {
            Err(Error::domain(format!(
                "gamma must be positive and finite, got {gamma}"
            )))
        }
    }
}

/// Measurement count and degree guaranteeing the weighted error bound with
/// probability `1 - δ`, up to the unspecified order constants.
pub fn recommend_parameters(
    rule: &GammaRule,
    input: &RecommendInput,
    constants: OrderConstants,
) -> Result<ParameterRecommendation> {
    let RecommendInput {
        big_n,
        k,
        s,
        epsilon,
        delta,
    } = *input;
    if k == 0 || k > big_n {
        return Err(Error::domain(format!(
            "need 1 <= k <= N, got k = {k}, N = {big_n}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0 / 6.0) {
        return Err(Error::domain(format!(
            "target expansion epsilon = {epsilon} must lie in (0, 1/6): the null space \
             property needs eps_2k < 1/6"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!(
            "failure probability delta = {delta} must lie in (0, 1)"
        )));
    }
    if s < k as f64 {
        return Err(Error::domain(format!(
            "weighted budget s = {s} must be >= k = {k}"
        )));
    }
    let gamma = rule.gamma(big_n, k, s)?;
    let n = (constants.c_n * s / (epsilon * epsilon * gamma))
        .ceil()
        .max(1.0) as usize;
    let d = ((constants.c_d * epsilon * n as f64 / k as f64)
        .ceil()
        .max(1.0) as usize)
        .min(n);
    Ok(ParameterRecommendation {
        n,
        d,
        gamma,
        epsilon,
        delta,
        scheme: rule.clone(),
        constants,
    })
}
