//! Linear programs in inequality form and an exact simplex solver.
//!
//! Programs are `min c.x` subject to row constraints and `x >= 0`.

mod simplex;

pub use simplex::{solve, PivotRule, SimplexOptions};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row, zero when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.eval(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per constraint, in the sign convention of
    /// `max b.y  s.t.  A^T y <= c` (`y <= 0` on `<=` rows, `y >= 0` on `>=`).
    pub duals: Vec<f64>,
    pub iterations: usize,
}

/// Primal/dual residuals of a solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalityCheck {
    pub primal_violation: f64,
    pub dual_violation: f64,
    pub duality_gap: f64,
}

impl OptimalityCheck {
    pub fn within(&self, tol: f64) -> bool {
        self.primal_violation <= tol && self.dual_violation <= tol && self.duality_gap <= tol
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn add(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.num_vars()));
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(0.0, f64::max);
        let bounds = x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Verify optimality through complementary slackness: primal
    /// feasibility, dual feasibility of `duals`, and a zero duality gap
    /// (relative to the objective magnitude).
    pub fn check_optimality(&self, sol: &LpSolution) -> OptimalityCheck {
        let mut reduced = self.objective.clone();
        let mut dual_violation: f64 = 0.0;
        let mut dual_obj = 0.0;
        for (row, &y) in self.constraints.iter().zip(&sol.duals) {
            for &(j, a) in &row.coeffs {
                reduced[j] -= a * y;
            }
            dual_obj += row.rhs * y;
            let sign_violation = match row.relation {
                Relation::Le => y.max(0.0),
                Relation::Ge => (-y).max(0.0),
                Relation::Eq => 0.0,
            };
            dual_violation = dual_violation.max(sign_violation);
        }
        for r in reduced {
            dual_violation = dual_violation.max((-r).max(0.0));
        }
        let primal_obj = self.objective_value(&sol.x);
        OptimalityCheck {
            primal_violation: self.max_violation(&sol.x),
            dual_violation,
            duality_gap: (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs()),
        }
    }
}
