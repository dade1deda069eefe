use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};

/// Compressed sparse column matrix.
///
/// Row indices are strictly increasing within every column. Explicit zeros
/// are allowed, duplicates are not.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Assembles a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        entries: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut counts = vec![0usize; n_cols + 1];
        for &(row, col, _) in entries {
            if row >= n_rows || col >= n_cols {
                return Err(Error::IndexOutOfRange {
                    row,
                    col,
                    n_rows,
                    n_cols,
                });
            }
            counts[col + 1] += 1;
        }
        for j in 0..n_cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut rows = vec![0usize; entries.len()];
        let mut vals = vec![0.0; entries.len()];
        for &(row, col, value) in entries {
            let p = next[col];
            rows[p] = row;
            vals[p] = value;
            next[col] += 1;
        }

        let mut col_ptr = Vec::with_capacity(n_cols + 1);
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        col_ptr.push(0);
        let mut column: Vec<(usize, f64)> = Vec::new();
        for j in 0..n_cols {
            column.clear();
            column.extend((counts[j]..counts[j + 1]).map(|p| (rows[p], vals[p])));
            column.sort_by_key(|&(r, _)| r);
            for &(r, v) in column.iter() {
                match row_idx.last() {
                    Some(&last) if row_idx.len() > col_ptr[j] && last == r => {
                        *values.last_mut().unwrap() += v;
                    }
                    _ => {
                        row_idx.push(r);
                        values.push(v);
                    }
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Builds a matrix from raw compressed-column arrays, validating them.
    pub fn from_csc(
        n_rows: usize,
        n_cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_len(n_cols + 1, col_ptr.len())?;
        check_len(row_idx.len(), values.len())?;
        if col_ptr[0] != 0 || col_ptr[n_cols] != row_idx.len() {
            return Err(Error::InvalidInput("column pointers do not span the entries".into()));
        }
        for j in 0..n_cols {
            if col_ptr[j] > col_ptr[j + 1] {
                return Err(Error::InvalidInput("column pointers must be non-decreasing".into()));
            }
            let rows = &row_idx[col_ptr[j]..col_ptr[j + 1]];
            for (t, &r) in rows.iter().enumerate() {
                if r >= n_rows {
                    return Err(Error::IndexOutOfRange {
                        row: r,
                        col: j,
                        n_rows,
                        n_cols,
                    });
                }
                if t > 0 && rows[t - 1] >= r {
                    return Err(Error::InvalidInput(
                        "row indices must be strictly increasing within a column".into(),
                    ));
                }
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            col_ptr: vec![0; n_cols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
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

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row indices and values of column `j`.
    #[inline]
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (rows, vals) = self.col(col);
        match rows.binary_search(&row) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// All stored entries as `(row, col, value)` triplets in column order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for j in 0..self.n_cols {
            let (rows, vals) = self.col(j);
            out.extend(rows.iter().zip(vals).map(|(&r, &v)| (r, j, v)));
        }
        out
    }

    /// `M x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n_cols, x.len())?;
        let mut out = vec![0.0; self.n_rows];
        self.mul_into(x, &mut out);
        Ok(out)
    }

    /// `M^T y`.
    pub fn matvec_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n_rows, y.len())?;
        let mut out = vec![0.0; self.n_cols];
        self.mul_transpose_into(y, &mut out);
        Ok(out)
    }

    /// Overwrites `out` with `M x`. Lengths are the caller's responsibility.
    pub(crate) fn mul_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let (rows, vals) = self.col(j);
            for (&r, &v) in rows.iter().zip(vals) {
                out[r] += v * xj;
            }
        }
    }

    /// Overwrites `out` with `M^T y`.
    pub(crate) fn mul_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let (rows, vals) = self.col(j);
            *o = rows.iter().zip(vals).map(|(&r, &v)| v * y[r]).sum();
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_rows + 1];
        for &r in &self.row_idx {
            counts[r + 1] += 1;
        }
        for i in 0..self.n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut row_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for j in 0..self.n_cols {
            let (rows, vals) = self.col(j);
            for (&r, &v) in rows.iter().zip(vals) {
                let p = next[r];
                row_idx[p] = j;
                values[p] = v;
                next[r] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            col_ptr: counts,
            row_idx,
            values,
        }
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut col_ptr = Vec::with_capacity(cols.len() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for &j in cols {
            let (rows, vals) = self.col(j);
            row_idx.extend_from_slice(rows);
            values.extend_from_slice(vals);
            col_ptr.push(row_idx.len());
        }
        Self {
            n_rows: self.n_rows,
            n_cols: cols.len(),
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Keeps the listed rows (which must be sorted ascending), renumbered in order.
    pub fn select_rows(&self, keep: &[usize]) -> Self {
        let mut new_index = vec![usize::MAX; self.n_rows];
        for (t, &r) in keep.iter().enumerate() {
            new_index[r] = t;
        }
        let mut col_ptr = Vec::with_capacity(self.n_cols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for j in 0..self.n_cols {
            let (rows, vals) = self.col(j);
            for (&r, &v) in rows.iter().zip(vals) {
                if new_index[r] != usize::MAX {
                    row_idx.push(new_index[r]);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            n_rows: keep.len(),
            n_cols: self.n_cols,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// `diag(row_scale) * M * diag(col_scale)`.
    pub fn scale(&self, row_scale: &[f64], col_scale: &[f64]) -> Self {
        let mut out = self.clone();
        for j in 0..self.n_cols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                out.values[p] *= row_scale[self.row_idx[p]] * col_scale[j];
            }
        }
        out
    }

    /// Row-major dense copy, for small matrices.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows * self.n_cols];
        for j in 0..self.n_cols {
            let (rows, vals) = self.col(j);
            for (&r, &v) in rows.iter().zip(vals) {
                out[r * self.n_cols + j] = v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_from_triplets() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(m, SparseMatrix::identity(2));
    }

    #[test]
    fn duplicates_are_summed() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 3.0);
    }

    #[test]
    fn unit_vector_probe() {
        let m = SparseMatrix::from_triplets(3, 2, &[(2, 0, 5.0)]).unwrap();
        assert_eq!(m.matvec(&[1.0, 0.0]).unwrap(), vec![0.0, 0.0, 5.0]);
    }

    #[test]
    fn out_of_range_rejected() {
        let err = SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { row: 2, .. }));
    }

    #[test]
    fn matvec_dimension_checked() {
        let m = SparseMatrix::identity(3);
        assert!(matches!(
            m.matvec(&[1.0]),
            Err(Error::DimensionMismatch { expected: 3, found: 1 })
        ));
        assert!(m.matvec_transpose(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn identity_and_zero_products() {
        let m = SparseMatrix::identity(4);
        let x = [1.0, -2.0, 3.5, 0.25];
        assert_eq!(m.matvec(&x).unwrap(), x.to_vec());
        let a = SparseMatrix::from_triplets(2, 3, &[(0, 1, 2.0), (1, 2, -1.0)]).unwrap();
        assert_eq!(a.matvec(&[0.0; 3]).unwrap(), vec![0.0; 2]);
    }

    #[test]
    fn csc_validation() {
        assert!(SparseMatrix::from_csc(2, 1, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csc(2, 1, vec![0, 2], vec![0, 1], vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn transpose_and_selection() {
        let a = SparseMatrix::from_triplets(
            3,
            4,
            &[(0, 0, 1.0), (2, 0, 2.0), (1, 1, 3.0), (0, 3, 4.0), (2, 3, 5.0)],
        )
        .unwrap();
        let t = a.transpose();
        assert_eq!(t.n_rows(), 4);
        for (r, c, v) in a.triplets() {
            assert_eq!(t.get(c, r), v);
        }
        let s = a.select_columns(&[3, 0]);
        assert_eq!(s.get(2, 0), 5.0);
        assert_eq!(s.get(2, 1), 2.0);
        let r = a.select_rows(&[0, 2]);
        assert_eq!(r.n_rows(), 2);
        assert_eq!(r.get(1, 3), 5.0);
        assert_eq!(r.get(0, 1), 0.0);
    }
}
