//! Sparse Cholesky: reverse Cuthill–McKee ordering, elimination tree,
//! column counts from row subtrees, and an up-looking numeric phase.

use rayon::prelude::*;

use super::dense::PIVOT_TOL;
use super::SymmetricMatrix;
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Factor of P A Pᵀ = L Lᵀ with L in compressed column form, diagonal first.
#[derive(Debug, Clone)]
pub struct SparseCholesky {
    n: usize,
    /// perm[k] is the original index placed at position k.
    perm: Vec<usize>,
    /// inverse of `perm`.
    pinv: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

fn adjacency(m: &SymmetricMatrix) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m.n()];
    for (i, j, _) in m.lower_entries() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    adj
}

/// BFS from `root` over unvisited nodes, neighbours in increasing degree.
/// Returns the visit order and the start index of the last level.
fn bfs_levels(
    adj: &[Vec<usize>],
    root: usize,
    blocked: &[bool],
    mark: &mut [usize],
    stamp: usize,
) -> (Vec<usize>, usize, usize) {
    let mut order = vec![root];
    mark[root] = stamp;
    let mut level_start = 0;
    let mut depth = 0;
    loop {
        let level_end = order.len();
        for idx in level_start..level_end {
            let v = order[idx];
            let mut next: Vec<usize> = adj[v]
                .iter()
                .copied()
                .filter(|&u| !blocked[u] && mark[u] != stamp)
                .collect();
            next.sort_by_key(|&u| (adj[u].len(), u));
            for u in next {
                if mark[u] != stamp {
                    mark[u] = stamp;
                    order.push(u);
                }
            }
        }
        if order.len() == level_end {
            return (order, level_start, depth);
        }
        level_start = level_end;
        depth += 1;
    }
}

/// Reverse Cuthill–McKee ordering of the graph of `m`, each connected
/// component started from a pseudo-peripheral node. Returns perm with
/// perm[k] the original index placed at position k.
pub fn rcm_ordering(m: &SymmetricMatrix) -> Vec<usize> {
    let n = m.n();
    let adj = adjacency(m);
    let mut placed = vec![false; n];
    let mut mark = vec![NONE; n];
    let mut stamp = 0;
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (adj[v].len(), v));
    for &seed in &by_degree {
        if placed[seed] {
            continue;
        }
        stamp += 1;
        let (mut levels, mut last, mut depth) = bfs_levels(&adj, seed, &placed, &mut mark, stamp);
        loop {
            let candidate = *levels[last..].iter().min_by_key(|&&v| (adj[v].len(), v)).unwrap();
            stamp += 1;
            let (l2, last2, depth2) = bfs_levels(&adj, candidate, &placed, &mut mark, stamp);
            if depth2 > depth {
                levels = l2;
                last = last2;
                depth = depth2;
            } else {
                break;
            }
        }
        for &v in &levels {
            placed[v] = true;
        }
        order.extend(levels);
    }
    order.reverse();
    order
}

/// Bandwidth max |pinv[i] − pinv[j]| over stored entries.
#[cfg(test)]
pub(crate) fn bandwidth(m: &SymmetricMatrix, pinv: &[usize]) -> usize {
    m.lower_entries()
        .iter()
        .map(|&(i, j, _)| pinv[i].abs_diff(pinv[j]))
        .max()
        .unwrap_or(0)
}

/// Upper triangle of P A Pᵀ in compressed column form.
struct UpperCsc {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

fn permuted_upper(m: &SymmetricMatrix, pinv: &[usize]) -> UpperCsc {
    let n = m.n();
    let entries = m.lower_entries();
    let mut counts = vec![0usize; n];
    for &(i, j, _) in &entries {
        counts[pinv[i].max(pinv[j])] += 1;
    }
    let mut col_ptr = vec![0; n + 1];
    for k in 0..n {
        col_ptr[k + 1] = col_ptr[k] + counts[k];
    }
    let mut next = col_ptr[..n].to_vec();
    let mut row_idx = vec![0; col_ptr[n]];
    let mut values = vec![0.0; col_ptr[n]];
    for &(i, j, v) in &entries {
        let (a, b) = (pinv[i], pinv[j]);
        let (r, c) = (a.min(b), a.max(b));
        row_idx[next[c]] = r;
        values[next[c]] = v;
        next[c] += 1;
    }
    UpperCsc {
        col_ptr,
        row_idx,
        values,
    }
}

fn etree(c: &UpperCsc, n: usize) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for p in c.col_ptr[k]..c.col_ptr[k + 1] {
            let mut i = c.row_idx[p];
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row k of L (columns < k), in topological order,
/// written to `stack[top..]`; returns top.
fn ereach(
    c: &UpperCsc,
    k: usize,
    parent: &[usize],
    mark: &mut [usize],
    path: &mut Vec<usize>,
    stack: &mut [usize],
) -> usize {
    let n = stack.len();
    let mut top = n;
    mark[k] = k;
    for p in c.col_ptr[k]..c.col_ptr[k + 1] {
        let mut i = c.row_idx[p];
        if i > k {
            continue;
        }
        path.clear();
        while mark[i] != k {
            path.push(i);
            mark[i] = k;
            i = parent[i];
        }
        while let Some(v) = path.pop() {
            top -= 1;
            stack[top] = v;
        }
    }
    top
}

impl SparseCholesky {
    /// Orders with reverse Cuthill–McKee and factorizes.
    pub fn new(m: &SymmetricMatrix) -> Result<Self> {
        let perm = rcm_ordering(m);
        Self::with_ordering(m, perm)
    }

    /// Factorizes P A Pᵀ for a caller-supplied ordering.
    pub fn with_ordering(m: &SymmetricMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = m.n();
        if perm.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: perm.len(),
            });
        }
        let mut pinv = vec![NONE; n];
        for (k, &p) in perm.iter().enumerate() {
            if p >= n || pinv[p] != NONE {
                return Err(Error::InvalidParameter("ordering is not a permutation".into()));
            }
            pinv[p] = k;
        }
        let c = permuted_upper(m, &pinv);
        let parent = etree(&c, n);

        let mut mark = vec![NONE; n];
        let mut path = Vec::new();
        let mut stack = vec![0; n];
        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = ereach(&c, k, &parent, &mut mark, &mut path, &mut stack);
            for &j in &stack[top..] {
                counts[j] += 1;
            }
        }
        let mut col_ptr = vec![0; n + 1];
        for k in 0..n {
            col_ptr[k + 1] = col_ptr[k] + counts[k];
        }
        let nnz = col_ptr[n];
        let mut row_idx = vec![0; nnz];
        let mut values = vec![0.0; nnz];
        // next free slot per column; slot col_ptr[j] is reserved for the diagonal
        let mut next: Vec<usize> = (0..n).map(|j| col_ptr[j] + 1).collect();

        let max_diag = m.diagonal().into_iter().fold(0.0, f64::max);
        let tol = PIVOT_TOL * max_diag;
        let mut x = vec![0.0; n];
        mark.fill(NONE);
        for k in 0..n {
            let top = ereach(&c, k, &parent, &mut mark, &mut path, &mut stack);
            for p in c.col_ptr[k]..c.col_ptr[k + 1] {
                x[c.row_idx[p]] = c.values[p];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..] {
                let lki = x[i] / values[col_ptr[i]];
                x[i] = 0.0;
                for p in col_ptr[i] + 1..next[i] {
                    x[row_idx[p]] -= values[p] * lki;
                }
                d -= lki * lki;
                row_idx[next[i]] = k;
                values[next[i]] = lki;
                next[i] += 1;
            }
            if !(d > tol) {
                return Err(Error::NotPositiveDefinite {
                    pivot: perm[k],
                    value: d,
                });
            }
            row_idx[col_ptr[k]] = k;
            values[col_ptr[k]] = d.sqrt();
        }
        Ok(SparseCholesky {
            n,
            perm,
            pinv,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Entries (i, j, L_ij) of the factor in permuted indexing.
    pub fn lower_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                out.push((self.row_idx[p], j, self.values[p]));
            }
        }
        out
    }

    pub fn logdet(&self) -> f64 {
        2.0 * (0..self.n).map(|j| self.values[self.col_ptr[j]].ln()).sum::<f64>()
    }

    fn forward(&self, x: &mut [f64]) {
        for j in 0..self.n {
            let p0 = self.col_ptr[j];
            x[j] /= self.values[p0];
            let xj = x[j];
            if xj != 0.0 {
                for p in p0 + 1..self.col_ptr[j + 1] {
                    x[self.row_idx[p]] -= self.values[p] * xj;
                }
            }
        }
    }

    fn backward(&self, x: &mut [f64]) {
        for j in (0..self.n).rev() {
            let p0 = self.col_ptr[j];
            let mut s = x[j];
            for p in p0 + 1..self.col_ptr[j + 1] {
                s -= self.values[p] * x[self.row_idx[p]];
            }
            x[j] = s / self.values[p0];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        self.forward(&mut x);
        self.backward(&mut x);
        let mut out = vec![0.0; self.n];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = x[k];
        }
        out
    }

    /// Diagonal of A⁻¹ in the original indexing.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| {
                let k = self.pinv[i];
                let mut x = vec![0.0; self.n];
                x[k] = 1.0;
                // columns before k leave a unit vector at k untouched
                let mut s = 0.0;
                for j in k..self.n {
                    let p0 = self.col_ptr[j];
                    x[j] /= self.values[p0];
                    let xj = x[j];
                    s += xj * xj;
                    if xj != 0.0 {
                        for p in p0 + 1..self.col_ptr[j + 1] {
                            x[self.row_idx[p]] -= self.values[p] * xj;
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// Pᵀ L w: a vector with covariance A when w is standard normal.
    pub fn correlate(&self, w: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let wj = w[j];
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p]] += self.values[p] * wj;
            }
        }
        let mut out = vec![0.0; self.n];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = y[k];
        }
        out
    }
}

/// Elimination-tree parent of every node for P A Pᵀ, exposed for tests.
#[cfg(test)]
fn elimination_tree(m: &SymmetricMatrix, perm: &[usize]) -> Vec<usize> {
    let mut pinv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        pinv[p] = k;
    }
    etree(&permuted_upper(m, &pinv), m.n())
}
