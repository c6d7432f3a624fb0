//! Two-phase dense tableau simplex.
//!
//! Rows are normalized to a non-negative right-hand side; `<=` rows start
//! with their slack in the basis, `>=` and `=` rows with an artificial.
//! Phase one minimizes the artificial sum, phase two the real objective
//! with artificials barred from re-entering.
//!
//! Pivot elimination only touches the non-zero entries of the pivot row and
//! the rows with a non-zero in the pivot column, which keeps the cost per
//! pivot close to the tableau fill rather than its full size.

use nalgebra::DMatrix;

use super::{LinearProgram, LpSolution, LpStatus, Relation};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotRule {
    /// Smallest-index entering and leaving variables.
    Bland,
    /// Most negative reduced cost entering. The leaving row comes from a
    /// Harris two-pass ratio test (largest pivot among near-minimal ratios);
    /// once `stall_limit` consecutive pivots fail to improve the objective,
    /// the exact minimum-ratio test with lexicographic tie-breaking on the
    /// rows of `B^-1` takes over until the objective moves again.
    DantzigLexicographic { stall_limit: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub max_iter: usize,
    pub rule: PivotRule,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-7,
            max_iter: 200_000,
            rule: PivotRule::DantzigLexicographic { stall_limit: 25 },
        }
    }
}

const DROP_TOL: f64 = 1e-14;

/// Dual simplex pivots before switching to smallest-index choices.
const DUAL_BLAND_AFTER: usize = 50;

/// Pivots between refactorizations inside a phase.
const REFACTOR_INTERVAL: usize = 1000;

/// Refactorize-and-continue rounds after phase two.
const POLISH_ROUNDS: usize = 6;

struct Tableau {
    rows: usize,
    width: usize,
    /// Columns `0..num_vars` are structural, then slacks/surpluses, then
    /// artificials; the last column is the right-hand side.
    data: Vec<f64>,
    /// The starting tableau, kept for refactorization.
    original: Vec<f64>,
    basis: Vec<usize>,
    num_vars: usize,
    first_artificial: usize,
    /// Column that held the identity entry of each row at start.
    initial_basic: Vec<usize>,
    /// +1 or -1 per row, the sign applied to normalize the right-hand side.
    row_sign: Vec<f64>,
    scratch: Vec<usize>,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let rows = lp.constraints.len();
        let num_vars = lp.num_vars();

        let mut slack_count = 0;
        let mut artificial_count = 0;
        let mut relations = Vec::with_capacity(rows);
        let mut row_sign = Vec::with_capacity(rows);
        for c in &lp.constraints {
            let (sign, rel) = if c.rhs < 0.0 {
                let flipped = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (-1.0, flipped)
            } else {
                (1.0, c.relation)
            };
            match rel {
                Relation::Le => slack_count += 1,
                Relation::Ge => {
                    slack_count += 1;
                    artificial_count += 1;
                }
                Relation::Eq => artificial_count += 1,
            }
            relations.push(rel);
            row_sign.push(sign);
        }

        let first_artificial = num_vars + slack_count;
        let cols = first_artificial + artificial_count;
        let width = cols + 1;
        let mut data = vec![0.0; rows * width];
        let mut basis = Vec::with_capacity(rows);
        let mut next_slack = num_vars;
        let mut next_art = first_artificial;
        for (i, c) in lp.constraints.iter().enumerate() {
            let row = &mut data[i * width..(i + 1) * width];
            for &(j, a) in &c.coeffs {
                row[j] += row_sign[i] * a;
            }
            row[cols] = row_sign[i] * c.rhs;
            match relations[i] {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
        }
        Tableau {
            rows,
            width,
            original: data.clone(),
            data,
            initial_basic: basis.clone(),
            basis,
            num_vars,
            first_artificial,
            row_sign,
            scratch: Vec::with_capacity(width),
        }
    }

    fn cols(&self) -> usize {
        self.width - 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols())
    }

    /// Reduced-cost row for the given column costs, `cost[j] - c_B B^-1 a_j`;
    /// the last entry holds the negated objective value.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut row = vec![0.0; self.width];
        row[..cost.len()].copy_from_slice(cost);
        for i in 0..self.rows {
            let cb = cost.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                let src = &self.data[i * self.width..(i + 1) * self.width];
                for (r, &t) in row.iter_mut().zip(src) {
                    *r -= cb * t;
                }
            }
        }
        row
    }

    fn pivot(&mut self, r: usize, e: usize, cost_rows: &mut [Vec<f64>]) {
        self.pivot_with(r, e, cost_rows, true);
    }

    fn pivot_with(&mut self, r: usize, e: usize, cost_rows: &mut [Vec<f64>], clamp: bool) {
        let w = self.width;
        let p = self.data[r * w + e];
        {
            let row = &mut self.data[r * w..(r + 1) * w];
            let inv = 1.0 / p;
            self.scratch.clear();
            for (j, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        self.scratch.push(j);
                    }
                }
            }
            row[e] = 1.0;
        }
        let (before, rest) = self.data.split_at_mut(r * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        let nz = &self.scratch;
        let eliminate = |target: &mut [f64]| {
            let f = target[e];
            if f != 0.0 {
                for &j in nz {
                    let v = target[j] - f * pivot_row[j];
                    target[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
                }
                target[e] = 0.0;
            }
        };
        let rhs = w - 1;
        let eliminate_row = |target: &mut [f64]| {
            eliminate(target);
            // Rounding can push a basic value slightly negative; a negative
            // right-hand side would later give a step that raises the objective.
            if clamp && target[rhs] < 0.0 {
                target[rhs] = 0.0;
            }
        };
        before.chunks_exact_mut(w).for_each(&eliminate_row);
        after.chunks_exact_mut(w).for_each(&eliminate_row);
        for cost in cost_rows.iter_mut() {
            eliminate(cost.as_mut_slice());
        }
        self.basis[r] = e;
    }

    fn choose_entering(
        &self,
        cost: &[f64],
        allowed: usize,
        bland: bool,
        tol: f64,
    ) -> Option<usize> {
        let candidates = cost[..allowed]
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c < -tol);
        if bland {
            candidates.map(|(j, _)| j).next()
        } else {
            candidates.min_by(|a, b| a.1.total_cmp(b.1)).map(|(j, _)| j)
        }
    }

    /// Textbook minimum-ratio test; ties go to Bland's smallest basic index
    /// or to the lexicographic rule.
    fn min_ratio_row(&self, e: usize, lexicographic: bool, tol: f64) -> Option<usize> {
        let mut best: Option<f64> = None;
        let mut ties: Vec<usize> = Vec::new();
        for i in 0..self.rows {
            let a = self.at(i, e);
            if a <= tol {
                continue;
            }
            let ratio = self.rhs(i) / a;
            match best {
                Some(br) if (ratio - br).abs() <= 1e-12 * (1.0 + br.abs()) => ties.push(i),
                Some(br) if ratio > br => {}
                _ => {
                    best = Some(ratio);
                    ties.clear();
                    ties.push(i);
                }
            }
        }
        match ties.len() {
            0 => None,
            1 => Some(ties[0]),
            _ if lexicographic => Some(self.lexicographic_min(e, ties)),
            _ => ties.into_iter().min_by_key(|&i| self.basis[i]),
        }
    }

    /// Harris two-pass ratio test: bound the step allowing `slack` of
    /// infeasibility, then take the largest pivot within that bound.
    fn harris_row(&self, e: usize, tol: f64, slack: f64) -> Option<usize> {
        let bound = (0..self.rows)
            .filter(|&i| self.at(i, e) > tol)
            .map(|i| (self.rhs(i) + slack) / self.at(i, e))
            .fold(f64::INFINITY, f64::min);
        if bound.is_infinite() {
            return None;
        }
        (0..self.rows)
            .filter(|&i| self.at(i, e) > tol && self.rhs(i) / self.at(i, e) <= bound)
            .max_by(|&a, &b| self.at(a, e).total_cmp(&self.at(b, e)).then(b.cmp(&a)))
    }

    /// Among tied rows, the lexicographically smallest `row(B^-1) / a_ie`.
    /// Rows of `B^-1` are distinct, so this always leaves one candidate.
    fn lexicographic_min(&self, e: usize, mut ties: Vec<usize>) -> usize {
        for &c in &self.initial_basic {
            if ties.len() == 1 {
                break;
            }
            let key = |i: usize| self.at(i, c) / self.at(i, e);
            let min = ties.iter().map(|&i| key(i)).fold(f64::INFINITY, f64::min);
            ties.retain(|&i| key(i) <= min + 1e-12 * (1.0 + min.abs()));
        }
        ties[0]
    }

    /// Optimize `costs[0]`; any further rows are kept up to date. `defs`
    /// holds the column costs behind each row of `costs`, used to rebuild
    /// them after a periodic refactorization.
    fn run_phase(
        &mut self,
        costs: &mut [Vec<f64>],
        defs: &[&[f64]],
        allowed: usize,
        opts: &SimplexOptions,
        iterations: &mut usize,
    ) -> PhaseOutcome {
        let bland = opts.rule == PivotRule::Bland;
        let mut stalled = 0usize;
        let mut since_refresh = 0usize;
        loop {
            if since_refresh >= REFACTOR_INTERVAL {
                self.refresh(costs, defs);
                since_refresh = 0;
            }
            let Some(e) = self.choose_entering(&costs[0], allowed, bland, opts.optimality_tol)
            else {
                return PhaseOutcome::Optimal;
            };
            let leaving = match opts.rule {
                PivotRule::Bland => self.min_ratio_row(e, false, opts.pivot_tol),
                PivotRule::DantzigLexicographic { stall_limit } if stalled >= stall_limit => {
                    self.min_ratio_row(e, true, opts.pivot_tol)
                }
                PivotRule::DantzigLexicographic { .. } => {
                    self.harris_row(e, opts.pivot_tol, opts.feasibility_tol)
                }
            };
            let Some(r) = leaving else {
                // Drift can hide the pivot entries of a bounded column;
                // only trust the verdict on a fresh tableau.
                if since_refresh > 0 && self.refresh(costs, defs) {
                    since_refresh = 0;
                    continue;
                }
                return PhaseOutcome::Unbounded;
            };
            if *iterations >= opts.max_iter {
                return PhaseOutcome::IterationLimit;
            }
            let before = costs[0][self.cols()];
            self.pivot(r, e, costs);
            *iterations += 1;
            since_refresh += 1;
            // the stored entry is minus the objective
            let gain = costs[0][self.cols()] - before;
            if gain > 1e-12 * (1.0 + before.abs()) {
                stalled = 0;
            } else {
                stalled += 1;
            }
        }
    }

    /// Refactorize, clamp rounding-level negative basic values and rebuild
    /// the cost rows.
    fn refresh(&mut self, costs: &mut [Vec<f64>], defs: &[&[f64]]) -> bool {
        if !self.refactor() {
            return false;
        }
        let rhs = self.cols();
        for i in 0..self.rows {
            let v = &mut self.data[i * self.width + rhs];
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        for (row, def) in costs.iter_mut().zip(defs) {
            *row = self.reduced_costs(def);
        }
        true
    }

    /// Pivot artificials still basic (at level zero) out of the basis where
    /// possible. Rows where that is impossible are redundant.
    fn expel_artificials(&mut self, costs: &mut [Vec<f64>], tol: f64) {
        for i in 0..self.rows {
            if self.basis[i] < self.first_artificial {
                continue;
            }
            let entering = (0..self.first_artificial)
                .filter(|&j| self.at(i, j).abs() > tol)
                .max_by(|&a, &b| self.at(i, a).abs().total_cmp(&self.at(i, b).abs()));
            if let Some(e) = entering {
                self.pivot(i, e, costs);
            }
        }
    }

    /// Recompute `B^-1 [A | b]` for the current basis from the original
    /// data, discarding the rounding error accumulated over many pivots.
    fn refactor(&mut self) -> bool {
        let (m, w) = (self.rows, self.width);
        if m == 0 {
            return true;
        }
        let basis_matrix = DMatrix::from_fn(m, m, |i, k| self.original[i * w + self.basis[k]]);
        let full = DMatrix::from_fn(m, w, |i, j| self.original[i * w + j]);
        let Some(solved) = basis_matrix.lu().solve(&full) else {
            return false;
        };
        for i in 0..m {
            for j in 0..w {
                let v = solved[(i, j)];
                self.data[i * w + j] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
        }
        for (i, &b) in self.basis.iter().enumerate() {
            for k in 0..m {
                self.data[k * w + b] = if k == i { 1.0 } else { 0.0 };
            }
        }
        true
    }

    /// Dual simplex pivots until every basic value is non-negative. The
    /// basis is assumed (nearly) dual feasible.
    fn restore_primal_feasibility(
        &mut self,
        costs: &mut [Vec<f64>],
        allowed: usize,
        opts: &SimplexOptions,
        iterations: &mut usize,
    ) -> bool {
        let scale = 1.0
            + (0..self.rows)
                .map(|i| self.rhs(i).abs())
                .fold(0.0, f64::max);
        let floor = -1e-12 * scale;
        let mut pivots = 0usize;
        loop {
            // Most infeasible row first; smallest basic index once that has
            // had a fair chance, which rules out cycling.
            let bland = pivots >= DUAL_BLAND_AFTER;
            let negative = (0..self.rows).filter(|&i| self.rhs(i) < floor);
            let leaving = if bland {
                negative.min_by_key(|&i| self.basis[i])
            } else {
                negative.min_by(|&a, &b| self.rhs(a).total_cmp(&self.rhs(b)))
            };
            let Some(r) = leaving else {
                return true;
            };
            let ratio = |j: usize| costs[0][j].max(0.0) / -self.at(r, j);
            let candidates = (0..allowed).filter(|&j| self.at(r, j) < -opts.pivot_tol);
            let Some(best) = candidates.clone().map(ratio).min_by(f64::total_cmp) else {
                return false;
            };
            let near = |j: &usize| ratio(*j) <= best + 1e-12 * (1.0 + best);
            let entering = if bland {
                candidates.filter(near).min()
            } else {
                candidates
                    .filter(near)
                    .max_by(|&a, &b| self.at(r, b).total_cmp(&self.at(r, a)).then(b.cmp(&a)))
            };
            let Some(e) = entering else {
                return false;
            };
            if *iterations >= opts.max_iter {
                return false;
            }
            self.pivot_with(r, e, costs, false);
            *iterations += 1;
            pivots += 1;
        }
    }

    fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.num_vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.num_vars {
                x[b] = self.rhs(i).max(0.0);
            }
        }
        x
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| -cost[self.initial_basic[i]] * self.row_sign[i])
            .collect()
    }
}

/// Solve `lp`. Infeasible programs report `Infeasible`; hitting `max_iter`
/// reports `IterationLimit` with the last basic solution.
pub fn solve(lp: &LinearProgram, opts: &SimplexOptions) -> LpSolution {
    let mut t = Tableau::build(lp);
    let cols = t.cols();
    let mut iterations = 0;

    let mut phase2_cost = vec![0.0; cols];
    phase2_cost[..lp.num_vars()].copy_from_slice(&lp.objective);

    let finish = |t: &Tableau, status: LpStatus, cost_row: &[f64], iterations: usize| {
        let x = t.primal();
        LpSolution {
            status,
            objective: lp.objective_value(&x),
            duals: t.duals(cost_row),
            x,
            iterations,
        }
    };

    let phase_status = |outcome| match outcome {
        PhaseOutcome::Optimal => LpStatus::Optimal,
        PhaseOutcome::Unbounded => LpStatus::Unbounded,
        PhaseOutcome::IterationLimit => LpStatus::IterationLimit,
    };

    let (mut rows, allowed) = if t.first_artificial < cols {
        let mut phase1_cost = vec![0.0; cols];
        phase1_cost[t.first_artificial..].fill(1.0);
        let mut rows = vec![t.reduced_costs(&phase1_cost), t.reduced_costs(&phase2_cost)];
        if let PhaseOutcome::IterationLimit = t.run_phase(
            &mut rows,
            &[&phase1_cost, &phase2_cost],
            cols,
            opts,
            &mut iterations,
        ) {
            return finish(&t, LpStatus::IterationLimit, &rows[1], iterations);
        }
        let infeasibility = -rows[0][cols];
        let scale = 1.0
            + lp.constraints
                .iter()
                .map(|c| c.rhs.abs())
                .fold(0.0, f64::max);
        if infeasibility > opts.feasibility_tol * scale {
            return finish(&t, LpStatus::Infeasible, &rows[1], iterations);
        }
        let mut rows = vec![rows.swap_remove(1)];
        t.expel_artificials(&mut rows, opts.pivot_tol.max(1e-9));
        (rows, t.first_artificial)
    } else {
        (vec![t.reduced_costs(&phase2_cost)], cols)
    };

    let mut outcome = t.run_phase(&mut rows, &[&phase2_cost], allowed, opts, &mut iterations);
    for _ in 0..POLISH_ROUNDS {
        if !matches!(outcome, PhaseOutcome::Optimal) || !t.refactor() {
            break;
        }
        rows[0] = t.reduced_costs(&phase2_cost);
        let before = iterations;
        if !t.restore_primal_feasibility(&mut rows, allowed, opts, &mut iterations) {
            if iterations >= opts.max_iter {
                outcome = PhaseOutcome::IterationLimit;
            }
            break;
        }
        if iterations > before {
            continue;
        }
        if t.choose_entering(&rows[0], allowed, false, opts.optimality_tol)
            .is_none()
        {
            break;
        }
        outcome = t.run_phase(&mut rows, &[&phase2_cost], allowed, opts, &mut iterations);
    }
    finish(&t, phase_status(outcome), &rows[0], iterations)
}
