//! Takahashi selected inversion: entries of `(L L^T)^{-1}` on the pattern of `L`.
//!
//! With `L = L0 D^{1/2}` (unit-diagonal `L0`), the inverse `Z` satisfies
//! `Z = D^{-1} L0^{-1} + (I - L0^T) Z`. Sweeping columns from last to first,
//! every entry of `Z` on the pattern of `L` needs only entries already
//! computed on that same pattern.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::cholesky::{CholeskyFactor, SymbolicCholesky};

/// Entries of a symmetric inverse restricted to `sp(L) ∪ sp(L^T)`.
#[derive(Debug, Clone)]
pub struct SelectedInverse {
    symbolic: Arc<SymbolicCholesky>,
    values: Vec<f64>,
}

impl SelectedInverse {
    /// Entry `(i, j)` in original indexing, or `None` when it lies outside
    /// the stored pattern.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let pinv = self.symbolic.inverse_permutation();
        let (a, b) = (pinv[i], pinv[j]);
        let (row, col) = if a >= b { (a, b) } else { (b, a) };
        self.symbolic.l_position(row, col).map(|p| self.values[p])
    }

    /// All stored `(i, j, value)` entries of the lower pattern, original indexing.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let s = &self.symbolic;
        let (lp, li, perm) = (s.l_col_ptr(), s.l_row_idx(), s.permutation());
        let mut out = Vec::with_capacity(self.values.len());
        for j in 0..s.n() {
            for p in lp[j]..lp[j + 1] {
                out.push((perm[li[p]], perm[j], self.values[p]));
            }
        }
        out
    }

    /// Values aligned with the storage of `L`.
    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }
}

pub(crate) fn selected_inverse(factor: &CholeskyFactor) -> SelectedInverse {
    let s = factor.symbolic();
    let n = s.n();
    let (lp, li, lx) = (s.l_col_ptr(), s.l_row_idx(), factor.values());
    let mut z = vec![0.0; lx.len()];
    let mut slot = vec![usize::MAX; n];
    let mut acc: Vec<f64> = Vec::new();
    let mut l0: Vec<f64> = Vec::new();

    for j in (0..n).rev() {
        let ljj = lx[lp[j]];
        let below = lp[j] + 1..lp[j + 1];
        l0.clear();
        l0.extend(lx[below.clone()].iter().map(|v| v / ljj));
        acc.clear();
        acc.resize(l0.len(), 0.0);
        for (t, p) in below.clone().enumerate() {
            slot[li[p]] = t;
        }

        // Z(i, j) = -sum_k Z(i, k) L0(k, j) over i, k in the column pattern;
        // walk the stored lower half of each column k and use symmetry.
        for (tk, pk) in below.clone().enumerate() {
            let k = li[pk];
            let l0k = l0[tk];
            for p in lp[k]..lp[k + 1] {
                let r = li[p];
                let tr = slot[r];
                if tr == usize::MAX {
                    continue;
                }
                let zrk = z[p];
                if r == k {
                    acc[tk] += zrk * l0k;
                } else {
                    acc[tr] += zrk * l0k;
                    acc[tk] += zrk * l0[tr];
                }
            }
        }

        let mut diag = 1.0 / (ljj * ljj);
        for (t, p) in below.clone().enumerate() {
            z[p] = -acc[t];
            diag -= l0[t] * z[p];
        }
        z[lp[j]] = diag;
        for p in below {
            slot[li[p]] = usize::MAX;
        }
    }

    SelectedInverse {
        symbolic: s.clone(),
        values: z,
    }
}
