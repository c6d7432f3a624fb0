//! Left-d-regular bipartite graphs used as sparse binary sensing matrices.
//!
//! A [`SparseBinaryMatrix`] stores, for every column (left node), the sorted
//! list of the `d` rows (right nodes) it is connected to. It is both the
//! expander graph and the `n x N` measurement operator.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rng;

/// Default ceiling on the number of subsets visited by exhaustive expansion.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseBinaryMatrix {
    n: usize,
    d: usize,
    cols: Vec<Vec<usize>>,
    seed: u64,
}

/// A list of `(column, row)` edges.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSet {
    pub edges: Vec<(usize, usize)>,
}

impl EdgeSet {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, col: usize, row: usize) -> bool {
        self.edges.contains(&(col, row))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub k: usize,
    pub epsilon: f64,
    pub worst_set: Vec<usize>,
    pub exhaustive: bool,
    /// Number of subsets examined.
    pub examined: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpansionMode {
    Exhaustive { budget: u128 },
    MonteCarlo { trials: usize, seed: u64 },
}

impl ExpansionMode {
    pub fn exhaustive() -> Self {
        ExpansionMode::Exhaustive {
            budget: DEFAULT_ENUMERATION_BUDGET,
        }
    }
}

impl SparseBinaryMatrix {
    /// Draw a random left-`d`-regular graph: every column picks `d` distinct
    /// rows uniformly without replacement, independently of other columns.
    pub fn generate(big_n: usize, n: usize, d: usize, seed: u64) -> Result<Self> {
        if d == 0 || d > n {
            return Err(Error::InvalidDegree { d, n });
        }
        if big_n == 0 {
            return Err(Error::domain("column count N must be at least 1"));
        }
        let mut rng = rng::from_seed(seed);
        let cols = (0..big_n)
            .map(|_| {
                let mut rows = index::sample(&mut rng, n, d).into_vec();
                rows.sort_unstable();
                rows
            })
            .collect();
        Ok(SparseBinaryMatrix { n, d, cols, seed })
    }

    /// Build from explicit neighbor lists. Each list is sorted; duplicates,
    /// out-of-range rows and unequal column sizes are rejected.
    pub fn from_columns(n: usize, cols: Vec<Vec<usize>>) -> Result<Self> {
        let d = cols.first().map(Vec::len).unwrap_or(0);
        if d == 0 || d > n {
            return Err(Error::InvalidDegree { d, n });
        }
        let mut out = Vec::with_capacity(cols.len());
        for (i, mut col) in cols.into_iter().enumerate() {
            if col.len() != d {
                return Err(Error::domain(format!(
                    "column {i} has {} entries, expected left degree {d}",
                    col.len()
                )));
            }
            col.sort_unstable();
            if col.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::domain(format!("column {i} repeats a row index")));
            }
            if let Some(&r) = col.last().filter(|&&r| r >= n) {
                return Err(Error::domain(format!(
                    "column {i} references row {r}, but n = {n}"
                )));
            }
            out.push(col);
        }
        Ok(SparseBinaryMatrix {
            n,
            d,
            cols: out,
            seed: 0,
        })
    }

    pub(crate) fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Row count (right / check nodes).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Column count (left / variable nodes).
    pub fn big_n(&self) -> usize {
        self.cols.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn column(&self, i: usize) -> &[usize] {
        &self.cols[i]
    }

    pub fn columns(&self) -> &[Vec<usize>] {
        &self.cols
    }

    /// `A z`, in `O(dN)`.
    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len(self.big_n(), z.len())?;
        let mut out = vec![0.0; self.n];
        for (col, &zi) in self.cols.iter().zip(z) {
            if zi != 0.0 {
                for &j in col {
                    out[j] += zi;
                }
            }
        }
        Ok(out)
    }

    /// `A^T r`, in `O(dN)`.
    pub fn apply_transpose(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, r.len())?;
        Ok(self
            .cols
            .iter()
            .map(|col| col.iter().map(|&j| r[j]).sum())
            .collect())
    }

    /// Dense 0/1 copy, row-major `n x N`.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.big_n()]; self.n];
        for (i, col) in self.cols.iter().enumerate() {
            for &j in col {
                dense[j][i] = 1.0;
            }
        }
        dense
    }

    fn check_indices(&self, set: &[usize]) -> Result<()> {
        match set.iter().find(|&&i| i >= self.big_n()) {
            Some(&i) => Err(Error::domain(format!(
                "column index {i} out of range for N = {}",
                self.big_n()
            ))),
            None => Ok(()),
        }
    }

    /// The neighbor set `Γ(S)`, sorted.
    pub fn neighbors(&self, set: &[usize]) -> Result<Vec<usize>> {
        self.check_indices(set)?;
        let rows: BTreeSet<usize> = set
            .iter()
            .flat_map(|&i| self.cols[i].iter().copied())
            .collect();
        Ok(rows.into_iter().collect())
    }

    fn neighbor_count(&self, set: &[usize], mark: &mut [bool]) -> usize {
        let mut count = 0;
        for &i in set {
            for &j in &self.cols[i] {
                if !mark[j] {
                    mark[j] = true;
                    count += 1;
                }
            }
        }
        for &i in set {
            for &j in &self.cols[i] {
                mark[j] = false;
            }
        }
        count
    }

    /// Collision edges `E'` under a column ordering: `(i, j)` is a collision
    /// when some column placed before `i` in `order` also touches row `j`.
    ///
    /// `order` may list any subset of columns (each at most once); only those
    /// columns are scanned.
    pub fn collision_set(&self, order: &[usize]) -> Result<EdgeSet> {
        self.check_indices(order)?;
        let mut seen_col = vec![false; self.big_n()];
        let mut hit = vec![false; self.n];
        let mut edges = Vec::new();
        for &i in order {
            if std::mem::replace(&mut seen_col[i], true) {
                return Err(Error::domain(format!(
                    "column {i} appears twice in the ordering"
                )));
            }
            for &j in &self.cols[i] {
                if std::mem::replace(&mut hit[j], true) {
                    edges.push((i, j));
                }
            }
        }
        Ok(EdgeSet { edges })
    }

    /// `|E(S_a : S_b)| = |Γ(S_a)| + |Γ(S_b)| - |Γ(S_a ∪ S_b)|` for disjoint
    /// column sets.
    pub fn edge_count_between(&self, set_a: &[usize], set_b: &[usize]) -> Result<usize> {
        self.check_indices(set_a)?;
        self.check_indices(set_b)?;
        let a: BTreeSet<usize> = set_a.iter().copied().collect();
        if let Some(i) = set_b.iter().find(|i| a.contains(i)) {
            return Err(Error::domain(format!(
                "column sets must be disjoint; {i} is in both"
            )));
        }
        let mut mark = vec![false; self.n];
        let union: Vec<usize> = set_a.iter().chain(set_b).copied().collect();
        Ok(
            self.neighbor_count(set_a, &mut mark) + self.neighbor_count(set_b, &mut mark)
                - self.neighbor_count(&union, &mut mark),
        )
    }

    /// Expansion coefficient `ε_k = max_{|S| <= k} 1 - |Γ(S)| / (d |S|)`.
    ///
    /// Exhaustive mode returns the exact value and refuses when the number of
    /// subsets exceeds the budget. Monte-Carlo mode returns a lower bound from
    /// random subsets: size `t` uniform in `1..=k`, then a uniform `t`-subset.
    pub fn expansion_coefficient(&self, k: usize, mode: ExpansionMode) -> Result<ExpansionReport> {
        let big_n = self.big_n();
        if k == 0 || k > big_n {
            return Err(Error::domain(format!(
                "subset-size ceiling k = {k} must lie in 1..={big_n}"
            )));
        }
        match mode {
            ExpansionMode::Exhaustive { budget } => {
                let required = subset_count(big_n, k);
                if required > budget {
                    return Err(Error::Budget { required, budget });
                }
                Ok(self.expansion_exhaustive(k))
            }
            ExpansionMode::MonteCarlo { trials, seed } => {
                Ok(self.expansion_sampled(k, trials, seed))
            }
        }
    }

    fn expansion_exhaustive(&self, k: usize) -> ExpansionReport {
        let mut search = SubsetSearch {
            matrix: self,
            k,
            counts: vec![0u32; self.n],
            distinct: 0,
            stack: Vec::with_capacity(k),
            best: -1.0,
            worst_set: Vec::new(),
            examined: 0,
        };
        search.descend(0);
        ExpansionReport {
            k,
            epsilon: search.best.max(0.0),
            worst_set: search.worst_set,
            exhaustive: true,
            examined: search.examined,
        }
    }

    fn expansion_sampled(&self, k: usize, trials: usize, seed: u64) -> ExpansionReport {
        let mut rng = rng::from_seed(seed);
        let mut mark = vec![false; self.n];
        let mut best = 0.0;
        let mut worst_set = vec![0];
        for _ in 0..trials {
            let t = rng.random_range(1..=k);
            let mut set = index::sample(&mut rng, self.big_n(), t).into_vec();
            set.sort_unstable();
            let eps = self.deficit(&set, self.neighbor_count(&set, &mut mark));
            if eps > best {
                best = eps;
                worst_set = set;
            }
        }
        ExpansionReport {
            k,
            epsilon: best,
            worst_set,
            exhaustive: false,
            examined: trials as u64,
        }
    }

    fn deficit(&self, set: &[usize], gamma: usize) -> f64 {
        1.0 - gamma as f64 / (self.d * set.len()) as f64
    }
}

/// Depth-first walk over all subsets of size `1..=k` with incremental row
/// counts, so each visited subset costs `O(d)`.
struct SubsetSearch<'a> {
    matrix: &'a SparseBinaryMatrix,
    k: usize,
    counts: Vec<u32>,
    distinct: usize,
    stack: Vec<usize>,
    best: f64,
    worst_set: Vec<usize>,
    examined: u64,
}

impl SubsetSearch<'_> {
    fn descend(&mut self, start: usize) {
        for i in start..self.matrix.big_n() {
            for &j in &self.matrix.cols[i] {
                if self.counts[j] == 0 {
                    self.distinct += 1;
                }
                self.counts[j] += 1;
            }
            self.stack.push(i);
            self.examined += 1;

            let eps = self.matrix.deficit(&self.stack, self.distinct);
            if eps > self.best {
                self.best = eps;
                self.worst_set.clone_from(&self.stack);
            }
            if self.stack.len() < self.k {
                self.descend(i + 1);
            }

            self.stack.pop();
            for &j in &self.matrix.cols[i] {
                self.counts[j] -= 1;
                if self.counts[j] == 0 {
                    self.distinct -= 1;
                }
            }
        }
    }
}

/// `Σ_{t=1..k} C(N, t)`, saturating.
pub fn subset_count(big_n: usize, k: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for t in 1..=k.min(big_n) {
        binom = binom.saturating_mul((big_n - t + 1) as u128) / t as u128;
        total = total.saturating_add(binom);
    }
    total
}
