use rayon::prelude::*;

use super::SymmetricMatrix;
use crate::error::{Error, Result};

/// Pivots at or below this fraction of the largest diagonal entry are
/// treated as loss of positive definiteness.
pub(crate) const PIVOT_TOL: f64 = 1e-14;

/// Dense lower-triangular factor L with A = L Lᵀ, stored row-major with
/// row i holding L[i][0..=i].
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    n: usize,
    rows: Vec<f64>,
}

fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl DenseCholesky {
    /// Row-oriented factorization: each row of L is computed from the rows
    /// above it by inner products over contiguous storage.
    pub fn new(m: &SymmetricMatrix) -> Result<Self> {
        let n = m.n();
        let a = match m {
            SymmetricMatrix::Dense { values, .. } => std::borrow::Cow::Borrowed(values),
            SymmetricMatrix::Sparse { .. } => std::borrow::Cow::Owned(m.to_dense()),
        };
        let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0, f64::max);
        let tol = PIVOT_TOL * max_diag;
        let mut rows = vec![0.0; row_start(n)];
        for i in 0..n {
            let (done, rest) = rows.split_at_mut(row_start(i));
            let li = &mut rest[..=i];
            for j in 0..i {
                let lj = &done[row_start(j)..row_start(j) + j + 1];
                let s = a[i * n + j] - dot(&li[..j], &lj[..j]);
                li[j] = s / lj[j];
            }
            let d = a[i * n + i] - dot(&li[..i], &li[..i]);
            if !(d > tol) {
                return Err(Error::NotPositiveDefinite { pivot: i, value: d });
            }
            li[i] = d.sqrt();
        }
        Ok(DenseCholesky { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[row_start(i)..row_start(i) + i + 1]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.row(i)[j]
        }
    }

    pub fn logdet(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.row(i)[i].ln()).sum::<f64>()
    }

    fn forward(&self, b: &mut [f64]) {
        for i in 0..self.n {
            let r = self.row(i);
            b[i] = (b[i] - dot(&r[..i], &b[..i])) / r[i];
        }
    }

    fn backward(&self, b: &mut [f64]) {
        for i in (0..self.n).rev() {
            let r = self.row(i);
            b[i] /= r[i];
            let bi = b[i];
            for (bj, lij) in b[..i].iter_mut().zip(&r[..i]) {
                *bj -= lij * bi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    /// ‖L⁻¹e_k‖² for every k, which is the diagonal of A⁻¹.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .into_par_iter()
            .map(|k| {
                let mut x = vec![0.0; n - k];
                x[0] = 1.0 / self.row(k)[k];
                for i in k + 1..n {
                    let r = &self.row(i)[k..];
                    x[i - k] = -dot(&r[..i - k], &x[..i - k]) / r[i - k];
                }
                x.iter().map(|v| v * v).sum()
            })
            .collect()
    }

    /// L·w.
    pub fn lower_mul(&self, w: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), &w[..=i])).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * c + k] * b[4 * c + k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}
