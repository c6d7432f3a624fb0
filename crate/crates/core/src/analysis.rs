//! Null space property constants, the collision bound, error-bound
//! constants and matrix certification.
//!
//! The robust null space property quantifies over every `v ∈ R^N`, so it can
//! only be falsified by sampling here, never proven. Certification itself is
//! exact: it rests on an exhaustively computed `ε_{2k}`.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::graph::{subset_count, ExpansionMode, SparseBinaryMatrix, DEFAULT_ENUMERATION_BUDGET};
use crate::rng::{self, purpose};
use crate::weights::{
    best_weighted_s_term, best_weighted_s_term_exact, weighted_norm, WeightVector,
    EXACT_SEARCH_LIMIT,
};

/// Largest `ε_{2k}` for which the null space property is guaranteed.
pub const EPSILON_LIMIT: f64 = 1.0 / 6.0;

/// Absolute tolerance on the collision bound.
pub const COLLISION_TOL: f64 = 1e-12;

/// Absolute tolerance on sampled null space property checks.
pub const RNSP_TOL: f64 = 1e-9;

/// Absolute tolerance on the end-to-end error bound.
pub const ERROR_BOUND_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RnspConstants {
    pub rho: f64,
    pub tau: f64,
    pub epsilon_2k: f64,
    pub d: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorConstants {
    pub c1: f64,
    pub c2: f64,
    /// Multiplies `σ_s(x)_{ω,1}` in the decoder error bound.
    pub big_c1: f64,
    /// Multiplies `√s η` in the decoder error bound.
    pub big_c2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub matrix_id: String,
    pub k: usize,
    pub epsilon_2k: f64,
    /// False when `epsilon_2k` is only a Monte-Carlo lower bound.
    pub exhaustive: bool,
    pub rnsp: Option<RnspConstants>,
    pub errors: Option<ErrorConstants>,
    pub certified: bool,
}

impl Certificate {
    /// Constants of a certified matrix, or a certification error.
    pub fn constants(&self) -> Result<(RnspConstants, ErrorConstants)> {
        match (self.certified, self.rnsp, self.errors) {
            (true, Some(r), Some(e)) => Ok((r, e)),
            _ => Err(Error::Certification(format!(
                "matrix {} is not certified for k = {} (ε_2k = {}, exhaustive = {})",
                self.matrix_id, self.k, self.epsilon_2k, self.exhaustive
            ))),
        }
    }
}

/// `ρ = 2ε/(1 − 4ε)` and `τ = 1/(√d (1 − 4ε))`.
pub fn rnsp_constants(epsilon_2k: f64, d: usize) -> Result<RnspConstants> {
    if d == 0 {
        return Err(Error::domain("degree d must be at least 1"));
    }
    if !(0.0..EPSILON_LIMIT).contains(&epsilon_2k) {
        return Err(Error::Certification(format!(
            "ε_2k = {epsilon_2k} does not satisfy 0 <= ε_{{2k}} < 1/6"
        )));
    }
    let denom = 1.0 - 4.0 * epsilon_2k;
    Ok(RnspConstants {
        rho: 2.0 * epsilon_2k / denom,
        tau: 1.0 / ((d as f64).sqrt() * denom),
        epsilon_2k,
        d,
    })
}

pub fn error_constants(c: &RnspConstants) -> Result<ErrorConstants> {
    if !(c.rho >= 0.0 && c.rho < 1.0) || !(c.tau > 0.0 && c.tau.is_finite()) {
        return Err(Error::domain(format!(
            "need 0 <= rho < 1 and tau > 0, got rho = {}, tau = {}",
            c.rho, c.tau
        )));
    }
    let c1 = 2.0 * (1.0 + c.rho) / (1.0 - c.rho);
    let c2 = 4.0 * c.tau / (1.0 - c.rho);
    Ok(ErrorConstants {
        c1,
        c2,
        big_c1: c1,
        big_c2: 2.0 * c2,
    })
}

/// FNV-1a hash of the matrix structure, as 16 hex digits.
pub fn matrix_id(a: &SparseBinaryMatrix) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: u64| {
        for b in v.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    eat(a.n() as u64);
    eat(a.big_n() as u64);
    eat(a.d() as u64);
    for col in a.columns() {
        for &j in col {
            eat(j as u64);
        }
    }
    format!("{h:016x}")
}

/// Compute `ε_{2k}` and attach constants. Certified only when `ε_{2k}` is
/// exact and below 1/6.
pub fn certify(a: &SparseBinaryMatrix, k: usize, mode: ExpansionMode) -> Result<Certificate> {
    if k == 0 || 2 * k > a.big_n() {
        return Err(Error::domain(format!(
            "certification needs 1 <= 2k <= N, got k = {k}, N = {}",
            a.big_n()
        )));
    }
    let report = a.expansion_coefficient(2 * k, mode)?;
    // ε = 1 − |Γ(S)|/(d|S|) is rational; decide ε < 1/6 in integers so a
    // value of exactly 1/6 that rounds below it is not accepted
    let below_limit = match report.worst_set.len() {
        0 => true,
        size => {
            let ds = a.d() * size;
            6 * (ds - a.neighbors(&report.worst_set)?.len()) < ds
        }
    };
    let rnsp = if below_limit {
        rnsp_constants(report.epsilon, a.d()).ok()
    } else {
        None
    };
    let errors = rnsp.as_ref().map(error_constants).transpose()?;
    Ok(Certificate {
        matrix_id: matrix_id(a),
        k,
        epsilon_2k: report.epsilon,
        exhaustive: report.exhaustive,
        certified: report.exhaustive && rnsp.is_some(),
        rnsp,
        errors,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Exhaustive `ε_k` with `k = |supp(x)|`.
    pub epsilon_k: f64,
    /// Support ordered by `ω_i|x_i|` decreasing.
    pub order: Vec<usize>,
}

/// The collision bound `Σ_{(i,j) ∈ E'} ω_i|x_i| <= ε_k d ‖x‖_{ω,1}`.
///
/// The support is ordered by decreasing `ω_i|x_i|` (ties to the lower index)
/// before collision edges are assigned.
pub fn check_collision_bound(
    a: &SparseBinaryMatrix,
    x: &[f64],
    omega: &WeightVector,
) -> Result<CollisionCheck> {
    check_len(a.big_n(), x.len())?;
    check_len(a.big_n(), omega.len())?;
    let w = omega.omega();
    let mut order: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    order.sort_by(|&p, &q| {
        (w[q] * x[q].abs())
            .total_cmp(&(w[p] * x[p].abs()))
            .then(p.cmp(&q))
    });
    if order.is_empty() {
        return Ok(CollisionCheck {
            lhs: 0.0,
            rhs: 0.0,
            holds: true,
            epsilon_k: 0.0,
            order,
        });
    }
    let epsilon_k = a
        .expansion_coefficient(order.len(), ExpansionMode::exhaustive())?
        .epsilon;
    let lhs = a
        .collision_set(&order)?
        .edges
        .iter()
        .map(|&(i, _)| w[i] * x[i].abs())
        .sum::<f64>();
    let rhs = epsilon_k * a.d() as f64 * weighted_norm(x, omega, 1.0)?;
    Ok(CollisionCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + COLLISION_TOL,
        epsilon_k,
        order,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RnspReport {
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs − rhs` seen; non-positive when the property held.
    pub max_slack: f64,
    pub worst_set: Vec<usize>,
}

/// Greedy adversarial set for `‖v_S‖_{ω,1} − ρ‖v_{S^c}‖_{ω,1}`.
///
/// Moving `i` into `S` raises the slack by `(1 + ρ)ω_i|v_i|` at cost `ω_i²`;
/// items are taken by gain per cost while `ω(S) <= s` and `|S| <= k`.
pub fn adversarial_set(v: &[f64], omega: &WeightVector, s: f64, k: usize) -> Vec<usize> {
    let w = omega.omega();
    let mut order: Vec<usize> = (0..v.len()).filter(|&i| v[i] != 0.0).collect();
    order.sort_by(|&p, &q| {
        (v[q].abs() / w[q])
            .total_cmp(&(v[p].abs() / w[p]))
            .then(p.cmp(&q))
    });
    let mut used = 0.0;
    let mut set = Vec::new();
    for i in order {
        if set.len() == k {
            break;
        }
        let cost = w[i] * w[i];
        if used + cost <= s {
            used += cost;
            set.push(i);
        }
    }
    set.sort_unstable();
    set
}

/// `‖v_S‖_{ω,1} − ρ‖v_{S^c}‖_{ω,1} − τ√s‖Av‖_1` for the given set.
pub fn rnsp_slack(
    a: &SparseBinaryMatrix,
    v: &[f64],
    omega: &WeightVector,
    s: f64,
    set: &[usize],
    c: &RnspConstants,
) -> Result<f64> {
    check_len(a.big_n(), v.len())?;
    let w = omega.omega();
    let mut inside = vec![false; v.len()];
    for &i in set {
        inside[i] = true;
    }
    let (mut on, mut off) = (0.0, 0.0);
    for i in 0..v.len() {
        let t = w[i] * v[i].abs();
        if inside[i] {
            on += t;
        } else {
            off += t;
        }
    }
    let av: f64 = a.apply(v)?.iter().map(|r| r.abs()).sum();
    Ok(on - c.rho * off - c.tau * s.sqrt() * av)
}

/// Sampled falsification check of the weighted robust null space property
/// with the certified constants: Gaussian `v`, greedy adversarial `S`.
pub fn check_rnsp_sampled(
    a: &SparseBinaryMatrix,
    omega: &WeightVector,
    s: f64,
    certificate: &Certificate,
    trials: usize,
    seed: u64,
) -> Result<RnspReport> {
    check_len(a.big_n(), omega.len())?;
    let (c, _) = certificate.constants()?;
    if certificate.matrix_id != matrix_id(a) {
        return Err(Error::Certification(
            "certificate belongs to a different matrix".into(),
        ));
    }
    let mut report = RnspReport {
        trials,
        violations: 0,
        max_slack: f64::NEG_INFINITY,
        worst_set: Vec::new(),
    };
    for t in 0..trials {
        let mut rng = rng::stream(seed, &[t as u64, purpose::PROBE]);
        let v: Vec<f64> = (0..a.big_n())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let set = adversarial_set(&v, omega, s, certificate.k);
        let slack = rnsp_slack(a, &v, omega, s, &set, &c)?;
        if slack > RNSP_TOL {
            report.violations += 1;
        }
        if slack > report.max_slack {
            report.max_slack = slack;
            report.worst_set = set;
        }
    }
    Ok(report)
}

/// `‖x̂ − x‖_{ω,1} <= C1 σ_s(x)_{ω,1} + C2 √s η`.
///
/// `σ_s` is exact when `x` has at most [`EXACT_SEARCH_LIMIT`] non-zeros and
/// the greedy value otherwise.
pub fn error_bound(
    x: &[f64],
    x_hat: &[f64],
    omega: &WeightVector,
    s: f64,
    eta: f64,
    consts: &ErrorConstants,
) -> Result<BoundCheck> {
    check_len(x.len(), x_hat.len())?;
    let diff: Vec<f64> = x.iter().zip(x_hat).map(|(a, b)| b - a).collect();
    let lhs = weighted_norm(&diff, omega, 1.0)?;
    let nonzeros = x.iter().filter(|v| **v != 0.0).count();
    let sigma = if nonzeros <= EXACT_SEARCH_LIMIT {
        best_weighted_s_term_exact(x, omega, s, None)?.sigma
    } else {
        best_weighted_s_term(x, omega, s)?.sigma
    };
    let rhs = consts.big_c1 * sigma + consts.big_c2 * s.sqrt() * eta;
    Ok(BoundCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + ERROR_BOUND_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureEstimate {
    pub trials: usize,
    pub failures: usize,
    pub probability: f64,
    /// Whether every trial used exhaustive expansion.
    pub exhaustive: bool,
}

/// Subsets sampled per graph when exhaustive expansion is out of budget.
pub const FAILURE_PROBE_SUBSETS: usize = 20_000;

/// Fraction of random `(N, n, d)` graphs that are not `(k, d, ε)`-expanders,
/// i.e. have some `|S| <= k` with `|Γ(S)| < (1 − ε) d |S|`.
pub fn expansion_failure_estimate(
    big_n: usize,
    n: usize,
    d: usize,
    k: usize,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<FailureEstimate> {
    if trials == 0 {
        return Err(Error::domain("need at least one trial"));
    }
    let exhaustive = subset_count(big_n, k) <= DEFAULT_ENUMERATION_BUDGET;
    let failed = (0..trials)
        .into_par_iter()
        .map(|t| {
            let a = SparseBinaryMatrix::generate(
                big_n,
                n,
                d,
                rng::derive_seed(seed, &[t as u64, purpose::MATRIX]),
            )?;
            let mode = if exhaustive {
                ExpansionMode::exhaustive()
            } else {
                let probe = rng::stream(seed, &[t as u64, purpose::SUBSETS]).random();
                ExpansionMode::MonteCarlo {
                    trials: FAILURE_PROBE_SUBSETS,
                    seed: probe,
                }
            };
            Ok(a.expansion_coefficient(k, mode)?.epsilon > epsilon + 1e-12)
        })
        .collect::<Result<Vec<bool>>>()?;
    let failures = failed.iter().filter(|f| **f).count();
    Ok(FailureEstimate {
        trials,
        failures,
        probability: failures as f64 / trials as f64,
        exhaustive,
    })
}
