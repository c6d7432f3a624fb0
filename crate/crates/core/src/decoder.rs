//! Weighted ℓ1 decoding:
//!
//! ```text
//! min ‖z‖_{ω,1}  subject to  ‖Az − y‖_1 <= η
//! ```
//!
//! solved exactly as a linear program. With uniform weights this is plain
//! ℓ1 minimization with ℓ1 data fidelity.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::lp::{
    self, LinearProgram, LpSolution, LpStatus, OptimalityCheck, Relation, SimplexOptions,
};
use crate::operator::SensingOperator;
use crate::weights::{weighted_norm, WeightVector};

#[derive(Clone, Copy)]
pub struct DecodeProblem<'a> {
    pub operator: &'a dyn SensingOperator,
    pub y: &'a [f64],
    pub weights: &'a WeightVector,
    pub eta: f64,
}

impl<'a> DecodeProblem<'a> {
    pub fn new(
        operator: &'a dyn SensingOperator,
        y: &'a [f64],
        weights: &'a WeightVector,
        eta: f64,
    ) -> Result<Self> {
        check_len(operator.rows(), y.len())?;
        check_len(operator.cols(), weights.len())?;
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::domain(format!(
                "noise budget eta must be finite and >= 0, got {eta}"
            )));
        }
        Ok(DecodeProblem {
            operator,
            y,
            weights,
            eta,
        })
    }

    fn row_entries(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.operator.rows()];
        for i in 0..self.operator.cols() {
            for (j, a) in self.operator.column_entries(i) {
                rows[j].push((i, a));
            }
        }
        rows
    }
}

/// Which exact LP reformulation to hand to the solver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Variables `(z⁺, z⁻, t, u)`, `2N + 2n + 1` inequality rows; see [`build_lp`].
    Epigraph,
    /// Variables `(z⁺, z⁻, r⁺, r⁻)` with `A(z⁺ − z⁻) − r⁺ + r⁻ = y` and
    /// `Σ(r⁺ + r⁻) <= η`: only `n + 1` rows. See [`build_split_lp`].
    #[default]
    Split,
}

/// Anything that can solve a [`LinearProgram`].
pub trait LpSolver: Sync {
    fn solve(&self, lp: &LinearProgram) -> LpSolution;
}

impl LpSolver for SimplexOptions {
    fn solve(&self, lp: &LinearProgram) -> LpSolution {
        lp::solve(lp, self)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DecodeOptions {
    pub formulation: Formulation,
    pub simplex: SimplexOptions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub x_hat: Vec<f64>,
    /// `‖x̂‖_{ω,1}`.
    pub objective: f64,
    /// `‖Ax̂ − y‖_1`.
    pub residual: f64,
    pub status: DecodeStatus,
    pub iterations: usize,
    pub duality_gap: f64,
}

/// The epigraph LP
///
/// ```text
/// min Σ ω_i t_i   over (z⁺, z⁻, t, u) >= 0
///   z⁺ − z⁻ − t <= 0,   −(z⁺ − z⁻) − t <= 0          (N rows each)
///   A(z⁺ − z⁻) − u <= y,   −A(z⁺ − z⁻) − u <= −y      (n rows each)
///   Σ u_j <= η
/// ```
///
/// with `3N + n` variables laid out in that order.
pub fn build_lp(problem: &DecodeProblem) -> LinearProgram {
    let big_n = problem.operator.cols();
    let n = problem.operator.rows();
    let (zp, zm, t, u) = (0, big_n, 2 * big_n, 3 * big_n);
    let mut lp = LinearProgram::new(3 * big_n + n);
    lp.objective[t..t + big_n].copy_from_slice(problem.weights.omega());

    for i in 0..big_n {
        lp.add(
            vec![(zp + i, 1.0), (zm + i, -1.0), (t + i, -1.0)],
            Relation::Le,
            0.0,
        );
    }
    for i in 0..big_n {
        lp.add(
            vec![(zp + i, -1.0), (zm + i, 1.0), (t + i, -1.0)],
            Relation::Le,
            0.0,
        );
    }
    let rows = problem.row_entries();
    for sign in [1.0, -1.0] {
        for (j, entries) in rows.iter().enumerate() {
            let mut coeffs: Vec<(usize, f64)> = entries
                .iter()
                .flat_map(|&(i, a)| [(zp + i, sign * a), (zm + i, -sign * a)])
                .collect();
            coeffs.push((u + j, -1.0));
            lp.add(coeffs, Relation::Le, sign * problem.y[j]);
        }
    }
    lp.add(
        (0..n).map(|j| (u + j, 1.0)).collect(),
        Relation::Le,
        problem.eta,
    );
    lp
}

/// The compact split-residual LP with `2N + 2n` variables and `n + 1` rows.
pub fn build_split_lp(problem: &DecodeProblem) -> LinearProgram {
    let big_n = problem.operator.cols();
    let n = problem.operator.rows();
    let (zp, zm, rp, rm) = (0, big_n, 2 * big_n, 2 * big_n + n);
    let mut lp = LinearProgram::new(2 * big_n + 2 * n);
    let omega = problem.weights.omega();
    lp.objective[zp..zp + big_n].copy_from_slice(omega);
    lp.objective[zm..zm + big_n].copy_from_slice(omega);

    for (j, entries) in problem.row_entries().into_iter().enumerate() {
        let mut coeffs: Vec<(usize, f64)> = entries
            .iter()
            .flat_map(|&(i, a)| [(zp + i, a), (zm + i, -a)])
            .collect();
        coeffs.push((rp + j, -1.0));
        coeffs.push((rm + j, 1.0));
        lp.add(coeffs, Relation::Eq, problem.y[j]);
    }
    lp.add(
        (rp..rp + 2 * n).map(|v| (v, 1.0)).collect(),
        Relation::Le,
        problem.eta,
    );
    lp
}

pub fn decode(problem: &DecodeProblem) -> Result<DecodeResult> {
    decode_with(problem, &DecodeOptions::default())
}

pub fn decode_with(problem: &DecodeProblem, opts: &DecodeOptions) -> Result<DecodeResult> {
    decode_with_solver(problem, opts.formulation, &opts.simplex)
}

pub fn decode_with_solver(
    problem: &DecodeProblem,
    formulation: Formulation,
    solver: &dyn LpSolver,
) -> Result<DecodeResult> {
    let big_n = problem.operator.cols();
    let lp = match formulation {
        Formulation::Epigraph => build_lp(problem),
        Formulation::Split => build_split_lp(problem),
    };
    let sol = solver.solve(&lp);
    let status = match sol.status {
        LpStatus::Optimal => DecodeStatus::Optimal,
        LpStatus::Infeasible => DecodeStatus::Infeasible,
        LpStatus::IterationLimit => DecodeStatus::IterationLimit,
        LpStatus::Unbounded => {
            return Err(Error::domain(
                "decoder LP reported unbounded; the objective is bounded below by 0",
            ))
        }
    };
    let x_hat: Vec<f64> = (0..big_n).map(|i| sol.x[i] - sol.x[big_n + i]).collect();
    let ax = problem.operator.apply(&x_hat)?;
    let residual = ax.iter().zip(problem.y).map(|(a, b)| (a - b).abs()).sum();
    let check: OptimalityCheck = lp.check_optimality(&sol);
    Ok(DecodeResult {
        objective: weighted_norm(&x_hat, problem.weights, 1.0)?,
        x_hat,
        residual,
        status,
        iterations: sol.iterations,
        duality_gap: check.duality_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SparseBinaryMatrix;

    fn identity(n: usize) -> SparseBinaryMatrix {
        SparseBinaryMatrix::from_columns(n, (0..n).map(|i| vec![i]).collect()).unwrap()
    }

    #[test]
    fn lp_sizes() {
        let a = identity(1);
        let w = WeightVector::uniform(1);
        let p = DecodeProblem::new(&a, &[1.0], &w, 0.0).unwrap();
        let lp = build_lp(&p);
        assert_eq!((lp.num_vars(), lp.num_constraints()), (4, 5));
        let a = SparseBinaryMatrix::generate(7, 5, 2, 1).unwrap();
        let w = WeightVector::uniform(7);
        let y = vec![0.0; 5];
        let p = DecodeProblem::new(&a, &y, &w, 0.5).unwrap();
        let lp = build_lp(&p);
        assert_eq!(
            (lp.num_vars(), lp.num_constraints()),
            (3 * 7 + 5, 2 * 7 + 2 * 5 + 1)
        );
        let split = build_split_lp(&p);
        assert_eq!(
            (split.num_vars(), split.num_constraints()),
            (2 * 7 + 2 * 5, 5 + 1)
        );
    }

    #[test]
    fn identity_recovers_exactly() {
        let a = identity(4);
        let x = [1.5, 0.0, -2.0, 0.25];
        let w = WeightVector::polynomial(4, 1.0).unwrap();
        let p = DecodeProblem::new(&a, &x, &w, 0.0).unwrap();
        for formulation in [Formulation::Epigraph, Formulation::Split] {
            let opts = DecodeOptions {
                formulation,
                ..DecodeOptions::default()
            };
            let r = decode_with(&p, &opts).unwrap();
            assert_eq!(r.status, DecodeStatus::Optimal);
            for (a, b) in r.x_hat.iter().zip(&x) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_measurements_give_zero() {
        let a = SparseBinaryMatrix::generate(6, 4, 2, 3).unwrap();
        let w = WeightVector::uniform(6);
        let y = vec![0.0; 4];
        let p = DecodeProblem::new(&a, &y, &w, 0.0).unwrap();
        let r = decode(&p).unwrap();
        assert!(r.x_hat.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn eta_absorbs_small_measurements() {
        let a = identity(3);
        let w = WeightVector::uniform(3);
        let y = [0.1, -0.2, 0.05];
        let p = DecodeProblem::new(&a, &y, &w, 1.0).unwrap();
        let r = decode(&p).unwrap();
        assert!(r.objective < 1e-12);
        assert!(r.residual <= 1.0 + 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let a = identity(3);
        let w = WeightVector::uniform(3);
        assert!(DecodeProblem::new(&a, &[1.0, 2.0], &w, 0.0).is_err());
        assert!(DecodeProblem::new(&a, &[1.0; 3], &WeightVector::uniform(2), 0.0).is_err());
        assert!(DecodeProblem::new(&a, &[1.0; 3], &w, -1.0).is_err());
    }

    #[test]
    fn iteration_limit_status() {
        let a = SparseBinaryMatrix::generate(10, 6, 2, 3).unwrap();
        let w = WeightVector::uniform(10);
        let mut x = vec![0.0; 10];
        x[3] = 1.0;
        let y = a.apply(&x).unwrap();
        let p = DecodeProblem::new(&a, &y, &w, 0.0).unwrap();
        let opts = DecodeOptions {
            simplex: SimplexOptions {
                max_iter: 1,
                ..SimplexOptions::default()
            },
            ..DecodeOptions::default()
        };
        assert_eq!(
            decode_with(&p, &opts).unwrap().status,
            DecodeStatus::IterationLimit
        );
    }
}
