//! Compressed sparse column matrices and column-stochastic normalization.
//!
//! Everything downstream (adjacency `A`, transition `M = A D^-1`, its square
//! `M2`) is carried by [`SparseMatrix`]. Storage is column-major: the
//! transition matrix is only ever applied as `M * v`, which scatters each
//! column scaled by one entry of `v`.

use std::ops::Deref;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Column sums of a [`StochasticMatrix`] must be within this distance of 1.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets.
    ///
    /// Duplicate coordinates are summed. Entries are stored sorted by column,
    /// then row, regardless of input order. Explicit zeros are kept.
    pub fn from_coordinates<I>(n_rows: usize, n_cols: usize, coords: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        for (row, col, value) in coords {
            if row >= n_rows || col >= n_cols {
                return Err(Error::IndexOutOfRange {
                    row,
                    col,
                    n_rows,
                    n_cols,
                });
            }
            if !value.is_finite() {
                return Err(Error::NonFinite { row, col, value });
            }
            triplets.push((row, col, value));
        }
        // stable sort keeps duplicate summation in input order
        triplets.sort_by_key(|&(r, c, _)| (c, r));

        let mut col_ptr = vec![0usize; n_cols + 1];
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (row, col, value) in triplets {
            if last == Some((row, col)) {
                *values.last_mut().expect("merged entry exists") += value;
                continue;
            }
            row_idx.push(row);
            values.push(value);
            col_ptr[col + 1] += 1;
            last = Some((row, col));
        }
        for j in 0..n_cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        for (k, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                let col = col_ptr.partition_point(|&p| p <= k) - 1;
                return Err(Error::NonFinite {
                    row: row_idx[k],
                    col,
                    value: v,
                });
            }
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            col_ptr: vec![0; n_cols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries of column `j` as `(row, value)`, rows ascending.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    fn column_slices(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (rows, vals) = self.column_slices(col);
        match rows.binary_search(&row) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        self.column_slices(j).1.iter().sum()
    }

    /// All stored entries as `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_cols).flat_map(move |j| self.column(j).map(move |(i, v)| (i, j, v)))
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && self.triplets().all(|(i, j, v)| self.get(j, i) == v)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut dense = Array2::zeros((self.n_rows, self.n_cols));
        for (i, j, v) in self.triplets() {
            dense[[i, j]] += v;
        }
        dense
    }

    /// `M * v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_rows];
        self.scaled_matvec_into(1.0, v, &mut out)?;
        Ok(out)
    }

    /// Writes `scale * M * v` into `out`.
    ///
    /// Columns are scattered in ascending order and zero entries of `v` are
    /// skipped, so the summation order for every output entry is fixed.
    pub fn scaled_matvec_into(&self, scale: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        if v.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                context: "matvec input",
                expected: self.n_cols,
                found: v.len(),
            });
        }
        if out.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                context: "matvec output",
                expected: self.n_rows,
                found: out.len(),
            });
        }
        out.fill(0.0);
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0.0 {
                continue;
            }
            let x = scale * vj;
            let (rows, vals) = self.column_slices(j);
            for (&i, &m) in rows.iter().zip(vals) {
                out[i] += m * x;
            }
        }
        Ok(())
    }

    /// Divides every column by its sum (`A D^-1` without building `D`).
    ///
    /// A column with zero sum (dangling node) becomes the basis column `e_j`,
    /// i.e. a self-loop.
    pub fn column_normalize(&self) -> Result<StochasticMatrix> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                n_rows: self.n_rows,
                n_cols: self.n_cols,
            });
        }
        let mut col_ptr = Vec::with_capacity(self.n_cols + 1);
        let mut row_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        col_ptr.push(0);
        for j in 0..self.n_cols {
            let (rows, vals) = self.column_slices(j);
            let mut sum = 0.0;
            for (&i, &v) in rows.iter().zip(vals) {
                if v < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                sum += v;
            }
            if sum > 0.0 {
                for (&i, &v) in rows.iter().zip(vals) {
                    if v > 0.0 {
                        row_idx.push(i);
                        values.push(v / sum);
                    }
                }
            } else {
                row_idx.push(j);
                values.push(1.0);
            }
            col_ptr.push(row_idx.len());
        }
        Ok(StochasticMatrix {
            inner: SparseMatrix {
                n_rows: self.n_rows,
                n_cols: self.n_cols,
                col_ptr,
                row_idx,
                values,
            },
        })
    }
}

/// A square sparse matrix whose columns are probability distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    inner: SparseMatrix,
}

impl StochasticMatrix {
    /// Validates an existing matrix as column-stochastic.
    pub fn new(inner: SparseMatrix) -> Result<Self> {
        if !inner.is_square() {
            return Err(Error::NotSquare {
                n_rows: inner.n_rows,
                n_cols: inner.n_cols,
            });
        }
        for (i, j, v) in inner.triplets() {
            if !(0.0..=1.0 + STOCHASTIC_TOL).contains(&v) {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
        for j in 0..inner.n_cols {
            let sum = inner.column_sum(j);
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic { col: j, sum });
            }
        }
        Ok(StochasticMatrix { inner })
    }

    pub fn identity(n: usize) -> Self {
        StochasticMatrix {
            inner: SparseMatrix::identity(n),
        }
    }

    pub fn n(&self) -> usize {
        self.inner.n_cols
    }

    pub fn as_sparse(&self) -> &SparseMatrix {
        &self.inner
    }

    pub fn into_sparse(self) -> SparseMatrix {
        self.inner
    }

    /// The exact product `M * M`, computed column by column.
    pub fn two_hop(&self) -> StochasticMatrix {
        let m = &self.inner;
        let n = m.n_cols;
        let mut acc = vec![0.0f64; n];
        let mut touched = vec![false; n];
        let mut pattern: Vec<usize> = Vec::new();

        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for j in 0..n {
            for (k, mkj) in m.column(j) {
                for (i, mik) in m.column(k) {
                    if !touched[i] {
                        touched[i] = true;
                        pattern.push(i);
                    }
                    acc[i] += mik * mkj;
                }
            }
            pattern.sort_unstable();
            for &i in &pattern {
                row_idx.push(i);
                values.push(acc[i]);
                acc[i] = 0.0;
                touched[i] = false;
            }
            pattern.clear();
            col_ptr.push(row_idx.len());
        }
        StochasticMatrix {
            inner: SparseMatrix {
                n_rows: n,
                n_cols: n,
                col_ptr,
                row_idx,
                values,
            },
        }
    }

    /// Columns whose stored pattern or values differ between `self` and `other`.
    pub fn changed_columns(&self, other: &StochasticMatrix) -> Result<Vec<usize>> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                context: "transition matrices",
                expected: self.n(),
                found: other.n(),
            });
        }
        Ok((0..self.n())
            .filter(|&j| self.inner.column_slices(j) != other.inner.column_slices(j))
            .collect())
    }

    /// Dense column `other[:, j] - self[:, j]`.
    pub fn column_difference(&self, other: &StochasticMatrix, j: usize) -> Vec<f64> {
        let mut diff = vec![0.0; self.n()];
        for (i, v) in other.inner.column(j) {
            diff[i] += v;
        }
        for (i, v) in self.inner.column(j) {
            diff[i] -= v;
        }
        diff
    }
}

impl Deref for StochasticMatrix {
    type Target = SparseMatrix;

    fn deref(&self) -> &SparseMatrix {
        &self.inner
    }
}
