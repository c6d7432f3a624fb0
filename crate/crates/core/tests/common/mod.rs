//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use expander_wl1::analysis::certify;
use expander_wl1::graph::{ExpansionMode, SparseBinaryMatrix};

/// Row bitmask of each column (n <= 64).
pub fn column_masks(a: &SparseBinaryMatrix) -> Vec<u64> {
    assert!(a.n() <= 64);
    a.columns()
        .iter()
        .map(|c| c.iter().fold(0u64, |m, &j| m | (1u64 << j)))
        .collect()
}

/// Worst `(|Γ(S)|, |S|)` over all non-empty `|S| <= k`, by plain bitmask
/// enumeration of every subset. "Worst" is the smallest `|Γ(S)|/|S|`.
pub fn naive_worst_ratio(a: &SparseBinaryMatrix, k: usize) -> (usize, usize) {
    let masks = column_masks(a);
    let big_n = masks.len();
    assert!(big_n <= 20);
    let mut best = (usize::MAX, 1usize);
    for set in 1u32..(1u32 << big_n) {
        let size = set.count_ones() as usize;
        if size > k {
            continue;
        }
        let gamma = (0..big_n)
            .filter(|i| set >> i & 1 == 1)
            .fold(0u64, |m, i| m | masks[i])
            .count_ones() as usize;
        // gamma / size < best.0 / best.1
        if best.0 == usize::MAX || gamma * best.1 < best.0 * size {
            best = (gamma, size);
        }
    }
    best
}

pub fn naive_epsilon(a: &SparseBinaryMatrix, k: usize) -> f64 {
    let (g, s) = naive_worst_ratio(a, k);
    1.0 - g as f64 / (a.d() * s) as f64
}

/// Size of `Γ(S)` by a per-column union.
pub fn naive_neighbors(a: &SparseBinaryMatrix, set: &[usize]) -> usize {
    let mut seen = vec![false; a.n()];
    for &i in set {
        for &j in a.column(i) {
            seen[j] = true;
        }
    }
    seen.iter().filter(|b| **b).count()
}

/// Collision edges by the quadratic scan: edge `(i, j)` collides when some
/// earlier column in `order` also hits row `j`.
pub fn naive_collisions(a: &SparseBinaryMatrix, order: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (p, &i) in order.iter().enumerate() {
        for &j in a.column(i) {
            if order[..p].iter().any(|&q| a.column(q).contains(&j)) {
                out.push((i, j));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Solve the square system `m x = b` with partial pivoting; `None` if singular.
pub fn gauss_solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&r, &s| m[r][c].abs().total_cmp(&m[s][c].abs()))?;
        if m[p][c].abs() < 1e-10 {
            return None;
        }
        m.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            if f != 0.0 {
                for q in c..n {
                    m[r][q] -= f * m[c][q];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|q| m[c][q] * x[q]).sum();
        x[c] = (b[c] - s) / m[c][c];
    }
    Some(x)
}

fn combinations(n: usize, r: usize, mut f: impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == r {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, r, cur, f);
            cur.pop();
        }
    }
    rec(0, n, r, &mut Vec::new(), &mut f);
}

/// `min Σ ω_i |z_i|  s.t.  Σ_j |a_j·z − y_j| <= η` by vertex enumeration.
///
/// Inside each cell of the arrangement `{z_i = 0}`, `{a_j·z = y_j}` the
/// objective is linear and the constraint is one half-space
/// `Σ σ_j (a_j·z − y_j) <= η`, and the coordinate hyperplanes make every
/// cell pointed, so the minimum sits at an intersection of `N` hyperplanes
/// drawn from those three families. Returns `None` when infeasible.
pub fn vertex_oracle(rows: &[Vec<f64>], y: &[f64], omega: &[f64], eta: f64) -> Option<f64> {
    let big_n = omega.len();
    let n = y.len();
    assert!(big_n <= 4 && n <= 4);
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..big_n {
        let mut e = vec![0.0; big_n];
        e[i] = 1.0;
        planes.push((e, 0.0));
    }
    for j in 0..n {
        planes.push((rows[j].clone(), y[j]));
    }
    for signs in 0u32..(1u32 << n) {
        let mut c = vec![0.0; big_n];
        let mut rhs = eta;
        for j in 0..n {
            let s = if signs >> j & 1 == 1 { 1.0 } else { -1.0 };
            for i in 0..big_n {
                c[i] += s * rows[j][i];
            }
            rhs += s * y[j];
        }
        planes.push((c, rhs));
    }
    let residual = |z: &[f64]| -> f64 {
        (0..n)
            .map(|j| (rows[j].iter().zip(z).map(|(a, b)| a * b).sum::<f64>() - y[j]).abs())
            .sum()
    };
    let mut best: Option<f64> = None;
    combinations(planes.len(), big_n, |pick| {
        let m: Vec<Vec<f64>> = pick.iter().map(|&p| planes[p].0.clone()).collect();
        let b: Vec<f64> = pick.iter().map(|&p| planes[p].1).collect();
        if let Some(z) = gauss_solve(m, b) {
            if residual(&z) <= eta + 1e-9 {
                let obj: f64 = z.iter().zip(omega).map(|(v, w)| w * v.abs()).sum();
                if best.is_none_or(|b| obj < b) {
                    best = Some(obj);
                }
            }
        }
    });
    best
}

/// Every subset of `0..big_n` as a sorted index list.
pub fn all_subsets(big_n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..(1u32 << big_n)).map(move |m| (0..big_n).filter(|i| m >> i & 1 == 1).collect())
}

/// Exact `σ_s(x)_{ω,1}` by scanning every admissible subset.
pub fn brute_sigma(x: &[f64], omega: &[f64], s: f64) -> f64 {
    let total: f64 = x.iter().zip(omega).map(|(v, w)| w * v.abs()).sum();
    all_subsets(x.len())
        .filter(|set| set.iter().map(|&i| omega[i] * omega[i]).sum::<f64>() <= s + 1e-12)
        .map(|set| total - set.iter().map(|&i| omega[i] * x[i].abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Random matrices that pass exhaustive certification at order `k`, found by
/// scanning seeds upward from `seed`. Random graphs only certify when `n` is
/// large relative to `N d`, so the shapes are chosen accordingly.
pub fn certified_matrices(count: usize, seed: u64) -> Vec<(SparseBinaryMatrix, usize)> {
    let shapes = [(12usize, 160usize, 6usize, 2usize), (10, 120, 6, 2), (8, 64, 4, 1), (16, 200, 6, 2)];
    let mut out = Vec::new();
    let mut s = seed;
    while out.len() < count {
        let (big_n, n, d, k) = shapes[out.len() % shapes.len()];
        loop {
            let a = SparseBinaryMatrix::generate(big_n, n, d, s).unwrap();
            s += 1;
            if certify(&a, k, ExpansionMode::exhaustive()).unwrap().certified {
                out.push((a, k));
                break;
            }
        }
    }
    out
}

pub fn dense_rows(a: &SparseBinaryMatrix) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; a.big_n()]; a.n()];
    for (i, col) in a.columns().iter().enumerate() {
        for &j in col {
            rows[j][i] = 1.0;
        }
    }
    rows
}

pub fn gauss(r: &mut impl rand::Rng) -> f64 {
    rand_distr::Distribution::sample(&rand_distr::StandardNormal, r)
}
