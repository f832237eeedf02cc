//! Symmetric sparse matrices in compressed-column form, permutations, and the
//! small dense-vector kernels everything else is built on.
//!
//! Both triangles are stored explicitly: elimination and graph traversal need
//! full neighbor lists, so mirroring at access time would cost in every inner
//! loop. Indices are 0-based everywhere in this crate; the Matrix Market layer
//! converts at the file boundary.

use crate::{Error, Result};

/// Immutable symmetric sparse matrix, compressed-column layout, both triangles
/// stored. Row indices are strictly increasing within each column, entry
/// (i, j) is present iff (j, i) is present with the same value, and no
/// explicit zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Build from coordinate triples. Duplicate positions are summed. If only
    /// one triangle is supplied for a pair, it is mirrored; if both are
    /// supplied they must agree to `1e-12 * max|value|` (the mean is kept).
    /// Exact zeros are dropped after summation.
    pub fn from_coo(n: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        for &(i, j, _) in triples {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange { i, j, n });
            }
        }

        // Sum duplicates per exact position.
        let mut entries: Vec<(usize, usize, f64)> = triples.to_vec();
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut summed: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match summed.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => summed.push((i, j, v)),
            }
        }

        let vmax = summed.iter().fold(0.0_f64, |m, &(_, _, v)| m.max(v.abs()));
        let tol = 1e-12 * vmax;

        let find = |i: usize, j: usize| -> Option<f64> {
            summed
                .binary_search_by_key(&(i, j), |&(a, b, _)| (a, b))
                .ok()
                .map(|k| summed[k].2)
        };

        // One pass per unordered pair: mirror missing partners, reconcile
        // present ones, keep diagonals as-is.
        let mut sym: Vec<(usize, usize, f64)> = Vec::with_capacity(summed.len() * 2);
        for &(i, j, v) in &summed {
            if i == j {
                if v != 0.0 {
                    sym.push((i, j, v));
                }
                continue;
            }
            if i < j {
                let w = match find(j, i) {
                    Some(v2) => {
                        if (v - v2).abs() > tol {
                            return Err(Error::Asymmetric { i, j, upper: v, lower: v2 });
                        }
                        0.5 * (v + v2)
                    }
                    None => v,
                };
                if w != 0.0 {
                    sym.push((i, j, w));
                    sym.push((j, i, w));
                }
            } else if find(j, i).is_none() {
                // Lower-triangle entry with no upper partner: mirror it.
                if v != 0.0 {
                    sym.push((i, j, v));
                    sym.push((j, i, v));
                }
            }
        }

        Ok(Self::from_entries(n, sym))
    }

    /// Build directly from entries already known to be symmetric, unique and
    /// nonzero (both triangles listed). Used by generators and permutation.
    pub(crate) fn from_entries(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_unstable_by_key(|&(i, j, _)| (j, i));
        let mut col_ptr = vec![0usize; n + 1];
        for &(_, j, _) in &entries {
            col_ptr[j + 1] += 1;
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        let row_idx = entries.iter().map(|&(i, _, _)| i).collect();
        let values = entries.iter().map(|&(_, _, v)| v).collect();
        Self { n, col_ptr, row_idx, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entry count (both triangles plus diagonal).
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Entries of column `j` as (row, value) pairs, rows ascending.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        self.row_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    /// All stored entries as (row, col, value), column-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |j| self.col(j).map(move |(i, v)| (i, j, v)))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for j in 0..self.n {
            for (i, v) in self.col(j) {
                if i == j {
                    d[j] = v;
                }
            }
        }
        d
    }

    /// Row sums, accumulated in stored (ascending-index) order.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.col(j).map(|(_, v)| v).sum()).collect()
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let lo = self.col_ptr[j];
            let hi = self.col_ptr[j + 1];
            for k in lo..hi {
                y[self.row_idx[k]] += self.values[k] * xj;
            }
        }
        Ok(y)
    }

    /// Symmetric permutation: result(i, j) = A(p.old(i), p.old(j)).
    pub fn permute(&self, p: &Perm) -> Result<SparseSym> {
        if p.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: p.n() });
        }
        let entries = self
            .entries()
            .map(|(i, j, v)| (p.new_of(i), p.new_of(j), v))
            .collect();
        Ok(Self::from_entries(self.n, entries))
    }

    /// Connected components of the off-diagonal sparsity pattern.
    /// Returns (component count, per-vertex labels, dense from 0 in
    /// first-visited order).
    pub fn connected_components(&self) -> (usize, Vec<usize>) {
        let n = self.n;
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            queue.push(start);
            while let Some(u) = queue.pop() {
                for (v, _) in self.col(u) {
                    if v != u && label[v] == usize::MAX {
                        label[v] = count;
                        queue.push(v);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }

}

/// Lower-triangular sparse matrix, compressed-column layout. Row indices are
/// on or below the diagonal and strictly increasing per column; when a column
/// is nonempty its first entry is the diagonal. The last column may be empty
/// (the Laplacian factor leaves it so).
#[derive(Debug, Clone, PartialEq)]
pub struct LowerTri {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl LowerTri {
    pub fn from_parts(n: usize, col_ptr: Vec<usize>, row_idx: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if col_ptr.len() != n + 1 || row_idx.len() != values.len() || *col_ptr.last().unwrap_or(&0) != row_idx.len() {
            return Err(Error::Parse("inconsistent lower-triangular arrays".into()));
        }
        for j in 0..n {
            let mut prev = None;
            for k in col_ptr[j]..col_ptr[j + 1] {
                let i = row_idx[k];
                if i < j || i >= n {
                    return Err(Error::IndexOutOfRange { i, j, n });
                }
                if let Some(p) = prev {
                    if i <= p {
                        return Err(Error::Parse(format!("rows not strictly increasing in column {j}")));
                    }
                }
                prev = Some(i);
            }
        }
        Ok(Self { n, col_ptr, row_idx, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        self.row_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |j| self.col(j).map(move |(i, v)| (i, j, v)))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn diag_entry(&self, j: usize) -> Option<f64> {
        let lo = self.col_ptr[j];
        if lo < self.col_ptr[j + 1] && self.row_idx[lo] == j {
            Some(self.values[lo])
        } else {
            None
        }
    }

    /// Solve G x = b by forward substitution. Every column must carry a
    /// positive diagonal.
    pub fn solve_lower(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_lower_impl(b, false)
    }

    /// Solve Gᵀ x = b by backward substitution.
    pub fn solve_upper(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_upper_impl(b, false)
    }

    /// Forward solve that zeroes the solution coordinate of any empty column
    /// instead of failing; the Laplacian factor's final column is empty and
    /// PCG's span{1} projection owns that direction.
    pub(crate) fn solve_lower_semi(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_lower_impl(b, true)
    }

    pub(crate) fn solve_upper_semi(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_upper_impl(b, true)
    }

    fn solve_lower_impl(&self, b: &[f64], skip_empty: bool) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: b.len() });
        }
        let mut x = b.to_vec();
        for j in 0..self.n {
            let lo = self.col_ptr[j];
            let hi = self.col_ptr[j + 1];
            if lo == hi && skip_empty {
                x[j] = 0.0;
                continue;
            }
            match self.diag_entry(j) {
                Some(d) if d > 0.0 => {
                    let xj = x[j] / d;
                    x[j] = xj;
                    for k in lo + 1..hi {
                        x[self.row_idx[k]] -= self.values[k] * xj;
                    }
                }
                other => {
                    return Err(Error::ZeroPivot { col: j, value: other.unwrap_or(0.0) });
                }
            }
        }
        Ok(x)
    }

    fn solve_upper_impl(&self, b: &[f64], skip_empty: bool) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: b.len() });
        }
        let mut x = b.to_vec();
        for j in (0..self.n).rev() {
            let lo = self.col_ptr[j];
            let hi = self.col_ptr[j + 1];
            if lo == hi && skip_empty {
                x[j] = 0.0;
                continue;
            }
            match self.diag_entry(j) {
                Some(d) if d > 0.0 => {
                    let mut s = x[j];
                    for k in lo + 1..hi {
                        s -= self.values[k] * x[self.row_idx[k]];
                    }
                    x[j] = s / d;
                }
                other => {
                    return Err(Error::ZeroPivot { col: j, value: other.unwrap_or(0.0) });
                }
            }
        }
        Ok(x)
    }

    /// y = G x (used by tests reconstructing G Gᵀ products).
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[k]] += self.values[k] * xj;
            }
        }
        Ok(y)
    }

    /// y = Gᵀ x.
    pub fn matvec_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let mut s = 0.0;
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                s += self.values[k] * x[self.row_idx[k]];
            }
            y[j] = s;
        }
        Ok(y)
    }
}

/// A permutation of {0..n-1}: `new_of` maps old index to new position,
/// `old_of` maps new position back.
#[derive(Debug, Clone, PartialEq)]
pub struct Perm {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Perm {
    pub fn identity(n: usize) -> Self {
        let forward: Vec<usize> = (0..n).collect();
        Self { inverse: forward.clone(), forward }
    }

    /// Build from the old -> new map.
    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        for (old, &new) in forward.iter().enumerate() {
            if new >= n {
                return Err(Error::InvalidPerm(format!("target {new} out of range {n}")));
            }
            if inverse[new] != usize::MAX {
                return Err(Error::InvalidPerm(format!("position {new} assigned twice")));
            }
            inverse[new] = old;
        }
        Ok(Self { forward, inverse })
    }

    /// Build from the new -> old map (the elimination sequence).
    pub fn from_inverse(inverse: Vec<usize>) -> Result<Self> {
        let p = Self::from_forward(inverse)?;
        Ok(Self { forward: p.inverse, inverse: p.forward })
    }

    pub fn n(&self) -> usize {
        self.forward.len()
    }

    pub fn new_of(&self, old: usize) -> usize {
        self.forward[old]
    }

    pub fn old_of(&self, new: usize) -> usize {
        self.inverse[new]
    }

    pub fn forward_slice(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse_slice(&self) -> &[usize] {
        &self.inverse
    }

    pub fn inverted(&self) -> Perm {
        Perm { forward: self.inverse.clone(), inverse: self.forward.clone() }
    }
}

/// Euclidean norm, sequential summation order.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
