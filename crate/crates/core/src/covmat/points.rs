use std::collections::HashMap;

use crate::error::{Error, Result};

/// Locations in ℝ^d, d ∈ {1, 2, 3}, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// Builds a point set from rows of coordinates. Rejects non-finite
    /// coordinates, ragged rows and exactly coincident locations.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            coords.extend_from_slice(r);
        }
        Self::from_flat(dim, coords)
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "point dimension {dim} must be 1, 2 or 3"
            )));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not form a nonempty set of {dim}-dimensional points",
                coords.len()
            )));
        }
        if let Some(k) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("coordinate {k} is not finite")));
        }
        let ps = PointSet { dim, coords };
        ps.check_duplicates()?;
        ps.warn_near_duplicates();
        Ok(ps)
    }

    fn check_duplicates(&self) -> Result<()> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.point(a)
                .iter()
                .zip(self.point(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in order.windows(2) {
            if self.point(w[0]) == self.point(w[1]) {
                let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(Error::DuplicateLocation { first, second });
            }
        }
        Ok(())
    }

    fn warn_near_duplicates(&self) {
        let diameter = self.diameter();
        if self.len() < 2 || diameter == 0.0 {
            return;
        }
        let tiny = 1e-9 * diameter;
        if let Some(&(i, j, d)) = neighbors_within(self, tiny).first() {
            log::warn!("points {j} and {i} are only {d:e} apart (domain diameter {diameter:e})");
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        distance(self.point(i), self.point(j))
    }

    /// Diagonal of the bounding box.
    pub fn diameter(&self) -> f64 {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for i in 0..self.len() {
            for (k, &c) in self.point(i).iter().enumerate() {
                lo[k] = lo[k].min(c);
                hi[k] = hi[k].max(c);
            }
        }
        lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    /// The points with the given indices, in that order.
    pub fn subset(&self, idx: &[usize]) -> PointSet {
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            coords.extend_from_slice(self.point(i));
        }
        PointSet { dim: self.dim, coords }
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn cell_of(p: &[f64], inv: f64) -> [i64; 3] {
    let mut c = [0i64; 3];
    for (k, &x) in p.iter().enumerate() {
        c[k] = (x * inv).floor() as i64;
    }
    c
}

/// All pairs (i, j, ‖s_i − s_j‖) with i > j and distance strictly below
/// `radius`, sorted by (i, j). Uses a uniform grid with cell size `radius`.
pub fn neighbors_within(ps: &PointSet, radius: f64) -> Vec<(usize, usize, f64)> {
    if !(radius > 0.0) {
        return Vec::new();
    }
    let dim = ps.dim();
    let inv = 1.0 / radius;
    if !(inv.is_finite()) {
        return Vec::new();
    }
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for i in 0..ps.len() {
        grid.entry(cell_of(ps.point(i), inv)).or_default().push(i);
    }
    let span: i64 = 1;
    let mut offsets: Vec<[i64; 3]> = vec![[0, 0, 0]];
    for k in 0..dim {
        let mut next = Vec::with_capacity(offsets.len() * 3);
        for o in &offsets {
            for d in -span..=span {
                let mut n = *o;
                n[k] = d;
                next.push(n);
            }
        }
        offsets = next;
    }
    let mut pairs = Vec::new();
    let mut row = Vec::new();
    for i in 0..ps.len() {
        let c = cell_of(ps.point(i), inv);
        row.clear();
        for o in &offsets {
            let key = [c[0] + o[0], c[1] + o[1], c[2] + o[2]];
            if let Some(members) = grid.get(&key) {
                for &j in members {
                    if j < i {
                        let d = ps.distance(i, j);
                        if d < radius {
                            row.push((j, d));
                        }
                    }
                }
            }
        }
        row.sort_by_key(|&(j, _)| j);
        pairs.extend(row.iter().map(|&(j, d)| (i, j, d)));
    }
    pairs
}
