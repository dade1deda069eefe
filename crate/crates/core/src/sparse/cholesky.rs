//! Up-looking sparse Cholesky factorization with a reusable symbolic phase.
//!
//! The symbolic analysis (ordering, elimination tree, pattern of `L`) depends
//! only on the sparsity pattern, so it is computed once and shared through an
//! `Arc` by every numeric refactorization of the same pattern.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::matrix::SparseMatrix;
use super::ordering::{invert, minimum_degree};
use super::selinv::{selected_inverse, SelectedInverse};
use crate::error::{check_len, Error, Result};

const NONE: usize = usize::MAX;

/// Relative pivot tolerance: a pivot `d_k <= PIVOT_TOL * M_kk` is rejected.
pub const PIVOT_TOL: f64 = 1e-12;

/// Pattern-only part of a Cholesky factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicCholesky {
    n: usize,
    perm: Vec<usize>,
    pinv: Vec<usize>,
    parent: Vec<usize>,
    // upper triangle (row <= col) of the permuted matrix, diagonal always present
    c_col_ptr: Vec<usize>,
    c_row_idx: Vec<usize>,
    // lower triangle of L, diagonal first in every column
    l_col_ptr: Vec<usize>,
    l_row_idx: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PivotMode {
    /// Reject small pivots with `NotPositiveDefinite`.
    Strict,
    /// Treat small pivots as dependent rows: unit diagonal, zero column below.
    Skip,
}

impl SymbolicCholesky {
    /// Analyzes the symmetric pattern given as, for each node, a list of
    /// neighbours (either triangle; duplicates allowed).
    pub(crate) fn analyze(adjacency: &[Vec<usize>]) -> Self {
        let perm = minimum_degree(adjacency);
        Self::with_permutation(adjacency, perm)
    }

    pub(crate) fn with_permutation(adjacency: &[Vec<usize>], perm: Vec<usize>) -> Self {
        let n = adjacency.len();
        let pinv = invert(&perm);

        let mut upper: Vec<Vec<usize>> = (0..n).map(|k| vec![k]).collect();
        for (i, neighbours) in adjacency.iter().enumerate() {
            for &j in neighbours {
                let (a, b) = (pinv[i], pinv[j]);
                let (row, col) = if a <= b { (a, b) } else { (b, a) };
                upper[col].push(row);
            }
        }
        let mut c_col_ptr = Vec::with_capacity(n + 1);
        let mut c_row_idx = Vec::new();
        c_col_ptr.push(0);
        for mut rows in upper {
            rows.sort_unstable();
            rows.dedup();
            c_row_idx.extend(rows);
            c_col_ptr.push(c_row_idx.len());
        }

        // elimination tree of the permuted matrix
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for &row in &c_row_idx[c_col_ptr[k]..c_col_ptr[k + 1]] {
                let mut i = row;
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

        let mut sym = Self {
            n,
            perm,
            pinv,
            parent,
            c_col_ptr,
            c_row_idx,
            l_col_ptr: Vec::new(),
            l_row_idx: Vec::new(),
        };

        // column counts, then the row pattern of L in the order the numeric
        // phase fills it
        let mut stack = vec![0; n];
        let mut mark = vec![NONE; n];
        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = sym.ereach(k, &mut stack, &mut mark);
            for &i in &stack[top..] {
                counts[i] += 1;
            }
        }
        let mut l_col_ptr = vec![0usize; n + 1];
        for k in 0..n {
            l_col_ptr[k + 1] = l_col_ptr[k] + counts[k];
        }
        let mut l_row_idx = vec![0usize; l_col_ptr[n]];
        let mut next = l_col_ptr.clone();
        mark.iter_mut().for_each(|m| *m = NONE);
        for k in 0..n {
            let top = sym.ereach(k, &mut stack, &mut mark);
            for &i in &stack[top..] {
                l_row_idx[next[i]] = k;
                next[i] += 1;
            }
            l_row_idx[next[k]] = k;
            next[k] += 1;
        }
        sym.l_col_ptr = l_col_ptr;
        sym.l_row_idx = l_row_idx;
        sym
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `perm[k]` is the original index placed at position `k`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse_permutation(&self) -> &[usize] {
        &self.pinv
    }

    /// Elimination tree parents (`usize::MAX` marks a root), permuted indexing.
    pub fn etree(&self) -> &[usize] {
        &self.parent
    }

    pub fn l_nnz(&self) -> usize {
        self.l_row_idx.len()
    }

    pub(crate) fn c_nnz(&self) -> usize {
        self.c_row_idx.len()
    }

    pub(crate) fn l_col_ptr(&self) -> &[usize] {
        &self.l_col_ptr
    }

    pub(crate) fn l_row_idx(&self) -> &[usize] {
        &self.l_row_idx
    }

    /// Storage index of permuted upper entry `(row, col)`, `row <= col`.
    pub(crate) fn c_position(&self, row: usize, col: usize) -> Option<usize> {
        let start = self.c_col_ptr[col];
        self.c_row_idx[start..self.c_col_ptr[col + 1]]
            .binary_search(&row)
            .ok()
            .map(|p| start + p)
    }

    /// Storage index of permuted lower entry `(row, col)` of `L`, `row >= col`.
    pub(crate) fn l_position(&self, row: usize, col: usize) -> Option<usize> {
        let start = self.l_col_ptr[col];
        self.l_row_idx[start..self.l_col_ptr[col + 1]]
            .binary_search(&row)
            .ok()
            .map(|p| start + p)
    }

    /// Nonzero pattern of row `k` of `L` (excluding the diagonal), in
    /// topological order, returned as `stack[top..]`.
    fn ereach(&self, k: usize, stack: &mut [usize], mark: &mut [usize]) -> usize {
        let mut top = self.n;
        mark[k] = k;
        for p in self.c_col_ptr[k]..self.c_col_ptr[k + 1] {
            let mut i = self.c_row_idx[p];
            if i > k {
                continue;
            }
            let mut len = 0;
            while mark[i] != k {
                stack[len] = i;
                len += 1;
                mark[i] = k;
                i = self.parent[i];
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                stack[top] = stack[len];
            }
        }
        top
    }

    /// Numeric phase. `c_values` follows the upper pattern of this analysis.
    /// Returns the values of `L` and the pivots skipped in `Skip` mode.
    pub(crate) fn numeric(
        &self,
        c_values: &[f64],
        mode: PivotMode,
        tol: f64,
    ) -> Result<(Vec<f64>, Vec<usize>)> {
        let n = self.n;
        let mut l = vec![0.0; self.l_row_idx.len()];
        let mut x = vec![0.0; n];
        let mut stack = vec![0; n];
        let mut mark = vec![NONE; n];
        let mut next: Vec<usize> = self.l_col_ptr[..n].to_vec();
        let mut skipped_flag = vec![false; n];
        let mut skipped = Vec::new();

        for k in 0..n {
            let top = self.ereach(k, &mut stack, &mut mark);
            let mut diag = 0.0;
            for p in self.c_col_ptr[k]..self.c_col_ptr[k + 1] {
                let i = self.c_row_idx[p];
                x[i] = c_values[p];
                if i == k {
                    diag = c_values[p];
                }
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..] {
                let lki = if skipped_flag[i] { 0.0 } else { x[i] / l[self.l_col_ptr[i]] };
                x[i] = 0.0;
                for p in self.l_col_ptr[i] + 1..next[i] {
                    x[self.l_row_idx[p]] -= l[p] * lki;
                }
                d -= lki * lki;
                l[next[i]] = lki;
                next[i] += 1;
            }
            let accept = d > tol * diag && d > 0.0;
            let pivot = if accept {
                libm::sqrt(d)
            } else {
                match mode {
                    PivotMode::Strict => return Err(Error::NotPositiveDefinite { column: k }),
                    PivotMode::Skip => {
                        skipped_flag[k] = true;
                        skipped.push(k);
                        1.0
                    }
                }
            };
            l[next[k]] = pivot;
            next[k] += 1;
        }
        Ok((l, skipped))
    }
}

/// Numeric Cholesky factor `L L^T = P M P^T` sharing its symbolic analysis.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    symbolic: Arc<SymbolicCholesky>,
    values: Vec<f64>,
}

impl CholeskyFactor {
    pub(crate) fn from_parts(symbolic: Arc<SymbolicCholesky>, values: Vec<f64>) -> Self {
        Self { symbolic, values }
    }

    pub fn symbolic(&self) -> &Arc<SymbolicCholesky> {
        &self.symbolic
    }

    pub fn n(&self) -> usize {
        self.symbolic.n
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }

    /// The lower-triangular factor in permuted indexing.
    pub fn l_matrix(&self) -> SparseMatrix {
        let s = &self.symbolic;
        SparseMatrix::from_csc(
            s.n,
            s.n,
            s.l_col_ptr.clone(),
            s.l_row_idx.clone(),
            self.values.clone(),
        )
        .expect("symbolic pattern is canonical")
    }

    /// Diagonal of `L` (permuted indexing).
    pub fn diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        let s = &self.symbolic;
        (0..s.n).map(move |k| self.values[s.l_col_ptr[k]])
    }

    /// `log det(L L^T)`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.diagonal().map(libm::log).sum::<f64>()
    }

    /// Solves `M x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), rhs.len())?;
        let mut out = vec![0.0; self.n()];
        let mut work = vec![0.0; self.n()];
        self.solve_into(rhs, &mut out, &mut work);
        Ok(out)
    }

    /// Solves `M x = rhs` into `out` using `work` as scratch (both length n).
    pub(crate) fn solve_into(&self, rhs: &[f64], out: &mut [f64], work: &mut [f64]) {
        let s = &self.symbolic;
        let (lp, li, lx) = (&s.l_col_ptr, &s.l_row_idx, &self.values);
        for k in 0..s.n {
            work[k] = rhs[s.perm[k]];
        }
        // L y = P b
        for j in 0..s.n {
            let yj = work[j] / lx[lp[j]];
            work[j] = yj;
            for p in lp[j] + 1..lp[j + 1] {
                work[li[p]] -= lx[p] * yj;
            }
        }
        // L^T z = y
        for j in (0..s.n).rev() {
            let mut acc = work[j];
            for p in lp[j] + 1..lp[j + 1] {
                acc -= lx[p] * work[li[p]];
            }
            work[j] = acc / lx[lp[j]];
        }
        for k in 0..s.n {
            out[s.perm[k]] = work[k];
        }
    }

    /// Entries of `M^{-1}` on the pattern of `L + L^T`.
    pub fn selected_inverse(&self) -> SelectedInverse {
        selected_inverse(self)
    }
}

/// Factors a symmetric positive definite matrix.
///
/// Only the pattern symmetry matters for the analysis; values are read from
/// the entries whose permuted position lies in the upper triangle, so a
/// matrix storing both triangles must store them consistently. When `reuse`
/// has a matching pattern, only the numeric phase runs.
pub fn cholesky_factorize(
    m: &SparseMatrix,
    reuse: Option<&CholeskyFactor>,
) -> Result<CholeskyFactor> {
    if m.n_rows() != m.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: m.n_rows(),
            found: m.n_cols(),
        });
    }
    let n = m.n_rows();
    let symbolic = match reuse.and_then(|f| fill_upper(m, &f.symbolic).map(|c| (f, c))) {
        Some((f, c_values)) => {
            let (values, _) = f.symbolic.numeric(&c_values, PivotMode::Strict, PIVOT_TOL)?;
            return Ok(CholeskyFactor::from_parts(f.symbolic.clone(), values));
        }
        None => {
            let mut adjacency = vec![Vec::new(); n];
            for (r, c, _) in m.triplets() {
                if r != c {
                    adjacency[c].push(r);
                }
            }
            Arc::new(SymbolicCholesky::analyze(&adjacency))
        }
    };
    let c_values = fill_upper(m, &symbolic).expect("pattern analyzed from this matrix");
    let (values, _) = symbolic.numeric(&c_values, PivotMode::Strict, PIVOT_TOL)?;
    Ok(CholeskyFactor::from_parts(symbolic, values))
}

fn fill_upper(m: &SparseMatrix, sym: &SymbolicCholesky) -> Option<Vec<f64>> {
    if sym.n != m.n_rows() {
        return None;
    }
    let mut c = vec![0.0; sym.c_nnz()];
    for (r, col, v) in m.triplets() {
        let (a, b) = (sym.pinv[r], sym.pinv[col]);
        if a <= b {
            c[sym.c_position(a, b)?] = v;
        }
    }
    Some(c)
}
