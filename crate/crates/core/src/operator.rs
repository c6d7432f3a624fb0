//! Measurement operators accepted by the decoder.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_len, Result};
use crate::graph::SparseBinaryMatrix;
use crate::rng;

/// A linear map `R^N -> R^n` that can enumerate its column entries.
pub trait SensingOperator: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    /// Non-zero entries `(row, value)` of column `i`.
    fn column_entries(&self, i: usize) -> Vec<(usize, f64)>;

    fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols(), z.len())?;
        let mut out = vec![0.0; self.rows()];
        for (i, &zi) in z.iter().enumerate() {
            if zi != 0.0 {
                for (j, a) in self.column_entries(i) {
                    out[j] += a * zi;
                }
            }
        }
        Ok(out)
    }
}

impl SensingOperator for SparseBinaryMatrix {
    fn rows(&self) -> usize {
        self.n()
    }

    fn cols(&self) -> usize {
        self.big_n()
    }

    fn column_entries(&self, i: usize) -> Vec<(usize, f64)> {
        self.column(i).iter().map(|&j| (j, 1.0)).collect()
    }

    fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        SparseBinaryMatrix::apply(self, z)
    }
}

/// Row-major dense matrix; the Gaussian baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        DenseMatrix {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// i.i.d. standard normal entries scaled by `1/sqrt(m)`.
    pub fn gaussian(m: usize, big_n: usize, seed: u64) -> Self {
        let mut rng = rng::from_seed(seed);
        let scale = 1.0 / (m as f64).sqrt();
        let data = (0..m * big_n)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g * scale
            })
            .collect();
        DenseMatrix {
            rows: m,
            cols: big_n,
            data,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }
}

impl SensingOperator for DenseMatrix {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn column_entries(&self, i: usize) -> Vec<(usize, f64)> {
        (0..self.rows)
            .map(|j| (j, self.get(j, i)))
            .filter(|&(_, a)| a != 0.0)
            .collect()
    }

    fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, z.len())?;
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_sparse_apply_agree() {
        let a = SparseBinaryMatrix::generate(10, 6, 3, 4).unwrap();
        let dense = DenseMatrix::from_rows(a.to_dense());
        let z: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let p = SensingOperator::apply(&a, &z).unwrap();
        let q = dense.apply(&z).unwrap();
        for (u, v) in p.iter().zip(&q) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_is_seeded() {
        assert_eq!(
            DenseMatrix::gaussian(3, 4, 1),
            DenseMatrix::gaussian(3, 4, 1)
        );
        assert_ne!(
            DenseMatrix::gaussian(3, 4, 1),
            DenseMatrix::gaussian(3, 4, 2)
        );
    }
}
