//! Covariance matrices over point sets: assembly that exploits compact
//! support, dense and sparse Cholesky factorizations, solves and
//! log-determinants.

mod dense;
mod points;
mod sparse;

use std::io::{Read, Write};

use rayon::prelude::*;

pub use dense::DenseCholesky;
pub use points::{neighbors_within, PointSet};
pub use sparse::{rcm_ordering, SparseCholesky};

use crate::error::{Error, Result};
use crate::kernels::{apply_nugget_variance, CorrelationModel};

/// Symmetric matrix with only the lower triangle meaningful.
#[derive(Debug, Clone, PartialEq)]
pub enum SymmetricMatrix {
    /// Full n × n row-major storage, both triangles filled.
    Dense { n: usize, values: Vec<f64> },
    /// Compressed sparse column storage of the lower triangle. Each column
    /// starts with its diagonal entry and row indices increase.
    Sparse {
        n: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    },
}

/// Zero pattern summary of a covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityStats {
    /// Fraction of off-diagonal entries that are zero, both triangles.
    pub percent_zero: f64,
    /// Stored entries of the lower triangle, diagonal included.
    pub stored_nnz: usize,
}

impl SymmetricMatrix {
    pub fn dense(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: values.len(),
            });
        }
        Ok(SymmetricMatrix::Dense { n, values })
    }

    /// Sparse matrix from lower-triangle triplets (i ≥ j). Duplicates are summed.
    pub fn from_lower_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j > i {
                return Err(Error::InvalidParameter(format!(
                    "({i}, {j}) is not in the lower triangle of a {n} × {n} matrix"
                )));
            }
            cols[j].push((i, v));
        }
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for (j, col) in cols.iter_mut().enumerate() {
            col.sort_by_key(|e| e.0);
            if col.first().map(|e| e.0) != Some(j) {
                row_idx.push(j);
                values.push(0.0);
            }
            for &(i, v) in col.iter() {
                if row_idx.len() > col_ptr[j] && *row_idx.last().unwrap() == i {
                    *values.last_mut().unwrap() += v;
                } else {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(SymmetricMatrix::Sparse {
            n,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn n(&self) -> usize {
        match self {
            SymmetricMatrix::Dense { n, .. } | SymmetricMatrix::Sparse { n, .. } => *n,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, SymmetricMatrix::Sparse { .. })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        match self {
            SymmetricMatrix::Dense { n, values } => values[i * n + j],
            SymmetricMatrix::Sparse {
                col_ptr,
                row_idx,
                values,
                ..
            } => {
                let range = col_ptr[j]..col_ptr[j + 1];
                match row_idx[range.clone()].binary_search(&i) {
                    Ok(k) => values[range.start + k],
                    Err(_) => 0.0,
                }
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.get(i, i)).collect()
    }

    /// A·x.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        Ok(match self {
            SymmetricMatrix::Dense { values, .. } => values
                .par_chunks(n.max(1))
                .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
                .collect(),
            SymmetricMatrix::Sparse {
                col_ptr,
                row_idx,
                values,
                ..
            } => {
                let mut y = vec![0.0; n];
                for j in 0..n {
                    for p in col_ptr[j]..col_ptr[j + 1] {
                        let i = row_idx[p];
                        y[i] += values[p] * x[j];
                        if i != j {
                            y[j] += values[p] * x[i];
                        }
                    }
                }
                y
            }
        })
    }

    /// Full row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            SymmetricMatrix::Dense { values, .. } => values.clone(),
            SymmetricMatrix::Sparse {
                n,
                col_ptr,
                row_idx,
                values,
            } => {
                let n = *n;
                let mut out = vec![0.0; n * n];
                for j in 0..n {
                    for p in col_ptr[j]..col_ptr[j + 1] {
                        let i = row_idx[p];
                        out[i * n + j] = values[p];
                        out[j * n + i] = values[p];
                    }
                }
                out
            }
        }
    }

    pub fn to_dense_matrix(&self) -> SymmetricMatrix {
        SymmetricMatrix::Dense {
            n: self.n(),
            values: self.to_dense(),
        }
    }

    /// Lower-triangle entries (i ≥ j) that are stored, or nonzero for dense
    /// storage, in column-major order.
    pub fn lower_entries(&self) -> Vec<(usize, usize, f64)> {
        match self {
            SymmetricMatrix::Dense { n, values } => {
                let n = *n;
                let mut out = Vec::new();
                for j in 0..n {
                    for i in j..n {
                        let v = values[i * n + j];
                        if v != 0.0 || i == j {
                            out.push((i, j, v));
                        }
                    }
                }
                out
            }
            SymmetricMatrix::Sparse {
                n,
                col_ptr,
                row_idx,
                values,
            } => {
                let mut out = Vec::with_capacity(values.len());
                for j in 0..*n {
                    for p in col_ptr[j]..col_ptr[j + 1] {
                        out.push((row_idx[p], j, values[p]));
                    }
                }
                out
            }
        }
    }

    /// Writes one `row col value` line per stored lower-triangle entry,
    /// 0-based indices.
    pub fn write_coo<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.n(), self.n())?;
        for (i, j, v) in self.lower_entries() {
            writeln!(out, "{i} {j} {v:.16e}")?;
        }
        Ok(())
    }
}

/// Percentage of zero off-diagonal entries, counting explicitly stored
/// zeros of sparse storage as zeros.
pub fn sparsity_stats(m: &SymmetricMatrix) -> SparsityStats {
    let n = m.n();
    let entries = m.lower_entries();
    let stored_nnz = entries.len();
    let offdiag_nonzero = entries.iter().filter(|&&(i, j, v)| i != j && v != 0.0).count();
    let percent_zero = if n < 2 {
        1.0
    } else {
        1.0 - 2.0 * offdiag_nonzero as f64 / (n as f64 * (n as f64 - 1.0))
    };
    SparsityStats {
        percent_zero,
        stored_nnz,
    }
}

/// Σ = σ²[(1 − τ²)R + τ²I]. Compactly supported models produce sparse
/// storage holding only the pairs closer than the support; Matérn models
/// produce dense storage.
pub fn assemble(ps: &PointSet, model: &CorrelationModel) -> Result<SymmetricMatrix> {
    match model.support()? {
        Some(delta) => assemble_sparse(ps, model, delta),
        None => assemble_dense(ps, model),
    }
}

fn assemble_sparse(ps: &PointSet, model: &CorrelationModel, delta: f64) -> Result<SymmetricMatrix> {
    let n = ps.len();
    let kernel = model.family.kernel()?;
    let pairs = neighbors_within(ps, delta);
    let offdiag: Vec<f64> = pairs
        .par_iter()
        .map(|&(_, _, r)| Ok(apply_nugget_variance(kernel.eval(r)?, r, model)))
        .collect::<Result<_>>()?;
    let diag = apply_nugget_variance(kernel.eval(0.0)?, 0.0, model);

    let mut counts = vec![1usize; n];
    for &(_, j, _) in &pairs {
        counts[j] += 1;
    }
    let mut col_ptr = Vec::with_capacity(n + 1);
    col_ptr.push(0);
    for c in &counts {
        col_ptr.push(col_ptr.last().unwrap() + c);
    }
    let nnz = col_ptr[n];
    let mut row_idx = vec![0; nnz];
    let mut values = vec![0.0; nnz];
    let mut next: Vec<usize> = col_ptr[..n].to_vec();
    for j in 0..n {
        row_idx[next[j]] = j;
        values[next[j]] = diag;
        next[j] += 1;
    }
    // pairs are sorted by row, so rows within each column arrive in order
    for (&(i, j, _), &v) in pairs.iter().zip(&offdiag) {
        row_idx[next[j]] = i;
        values[next[j]] = v;
        next[j] += 1;
    }
    Ok(SymmetricMatrix::Sparse {
        n,
        col_ptr,
        row_idx,
        values,
    })
}

/// Dense assembly regardless of support.
pub fn assemble_dense(ps: &PointSet, model: &CorrelationModel) -> Result<SymmetricMatrix> {
    let n = ps.len();
    let kernel = model.family.kernel()?;
    let support = model.support()?.unwrap_or(f64::INFINITY);
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..=i)
                .map(|j| {
                    let r = ps.distance(i, j);
                    if r >= support {
                        Ok(0.0)
                    } else {
                        Ok(apply_nugget_variance(kernel.eval(r)?, r, model))
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; n * n];
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(SymmetricMatrix::Dense { n, values })
}

/// Cross-covariances σ²(1 − τ²)ρ(‖t − s_j‖) between one target and every
/// point of `ps`; the nugget is treated as measurement noise and excluded.
pub fn cross_covariance(ps: &PointSet, target: &[f64], model: &CorrelationModel) -> Result<Vec<f64>> {
    if target.len() != ps.dim() {
        return Err(Error::DimensionMismatch {
            expected: ps.dim(),
            found: target.len(),
        });
    }
    let kernel = model.family.kernel()?;
    let support = model.support()?.unwrap_or(f64::INFINITY);
    let scale = model.variance * (1.0 - model.nugget);
    (0..ps.len())
        .map(|j| {
            let r = points::distance(target, ps.point(j));
            if r >= support {
                Ok(0.0)
            } else {
                Ok(scale * kernel.eval(r)?)
            }
        })
        .collect()
}

/// Cholesky factor of either storage kind.
#[derive(Debug, Clone)]
pub enum CholeskyFactor {
    Dense(DenseCholesky),
    Sparse(SparseCholesky),
}

/// Factorizes with the path matching the storage.
pub fn cholesky(m: &SymmetricMatrix) -> Result<CholeskyFactor> {
    Ok(match m {
        SymmetricMatrix::Dense { .. } => CholeskyFactor::Dense(DenseCholesky::new(m)?),
        SymmetricMatrix::Sparse { .. } => CholeskyFactor::Sparse(SparseCholesky::new(m)?),
    })
}

/// Sparse matrices with fewer than half of their off-diagonal entries zero
/// are converted and factorized densely.
pub fn factorize(m: &SymmetricMatrix) -> Result<CholeskyFactor> {
    if m.is_sparse() && sparsity_stats(m).percent_zero < 0.5 {
        return Ok(CholeskyFactor::Dense(DenseCholesky::new(&m.to_dense_matrix())?));
    }
    cholesky(m)
}

impl CholeskyFactor {
    pub fn n(&self) -> usize {
        match self {
            CholeskyFactor::Dense(f) => f.n(),
            CholeskyFactor::Sparse(f) => f.n(),
        }
    }

    /// x with A·x = b.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: b.len(),
            });
        }
        Ok(match self {
            CholeskyFactor::Dense(f) => f.solve(b),
            CholeskyFactor::Sparse(f) => f.solve(b),
        })
    }

    /// log det A = 2 Σ log L_ii.
    pub fn logdet(&self) -> f64 {
        match self {
            CholeskyFactor::Dense(f) => f.logdet(),
            CholeskyFactor::Sparse(f) => f.logdet(),
        }
    }

    /// Diagonal of A⁻¹, from one forward solve per unit vector.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        match self {
            CholeskyFactor::Dense(f) => f.inverse_diagonal(),
            CholeskyFactor::Sparse(f) => f.inverse_diagonal(),
        }
    }

    /// A^{1/2}w in the sense of the factor: returns y with Cov(y) = A when
    /// w has independent standard normal entries.
    pub fn correlate(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: w.len(),
            });
        }
        Ok(match self {
            CholeskyFactor::Dense(f) => f.lower_mul(w),
            CholeskyFactor::Sparse(f) => f.correlate(w),
        })
    }

    /// Nonzeros of the triangular factor.
    pub fn factor_nnz(&self) -> usize {
        match self {
            CholeskyFactor::Dense(f) => f.n() * (f.n() + 1) / 2,
            CholeskyFactor::Sparse(f) => f.nnz(),
        }
    }
}

/// A point set with optional observed values, as read from CSV.
#[derive(Debug, Clone)]
pub struct SpatialData {
    pub points: PointSet,
    pub values: Option<Vec<f64>>,
}

/// Reads CSV with header `x,y[,z][,value]` (also accepts `x[,value]`);
/// lines starting with `#` are skipped.
pub fn read_points_csv<R: Read>(input: R) -> Result<SpatialData> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    let coord_names = ["x", "y", "z"];
    let dim = headers.iter().take_while(|h| coord_names.contains(&h.as_str())).count();
    for (k, h) in headers.iter().take(dim).enumerate() {
        if h != coord_names[k] {
            return Err(Error::Parse(format!(
                "expected column '{}' but found '{h}'",
                coord_names[k]
            )));
        }
    }
    if dim == 0 {
        return Err(Error::Parse("CSV header must start with x".into()));
    }
    let value_col = headers.iter().position(|h| h == "value");
    if let Some(extra) = headers.iter().skip(dim).find(|h| h.as_str() != "value") {
        log::debug!("ignoring CSV column '{extra}'");
    }
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64> {
            let s = rec
                .get(k)
                .ok_or_else(|| Error::Parse(format!("row {}: missing column {k}", line + 1)))?;
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: '{s}': {e}", line + 1)))
        };
        for k in 0..dim {
            coords.push(parse(k)?);
        }
        if let Some(c) = value_col {
            values.push(parse(c)?);
        }
    }
    Ok(SpatialData {
        points: PointSet::from_flat(dim, coords)?,
        values: value_col.map(|_| values),
    })
}
