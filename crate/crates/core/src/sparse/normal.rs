//! The weighted normal matrix `A W A^T` with `W = g^{-1}` diagonal, its
//! factorization, and the leverage scores it induces.
//!
//! The pattern of `A W A^T` does not depend on `W`, so the ordering and
//! symbolic factorization are done once in [`NormalSystem::new`]. Each column
//! `a_k` of `A` contributes the outer product `a_k a_k^T / g_k`; the position
//! of every product term in both the assembled matrix and in `L` is
//! precomputed.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::cholesky::{CholeskyFactor, PivotMode, SymbolicCholesky, PIVOT_TOL};
use super::matrix::SparseMatrix;
use crate::error::{check_len, Result};

#[derive(Debug, Clone, Copy)]
struct OuterTerm {
    c_pos: usize,
    l_pos: usize,
    coef: f64,
    // 1 for diagonal terms, 2 for off-diagonal ones (symmetric pair)
    multiplicity: f64,
}

#[derive(Debug, Clone)]
pub struct NormalSystem {
    a: SparseMatrix,
    symbolic: Arc<SymbolicCholesky>,
    term_ptr: Vec<usize>,
    terms: Vec<OuterTerm>,
}

impl NormalSystem {
    /// Symbolic analysis of `A W A^T` for an `m x n` matrix `A`.
    pub fn new(a: &SparseMatrix) -> Self {
        let m = a.n_rows();
        let mut adjacency = vec![Vec::new(); m];
        for j in 0..a.n_cols() {
            let (rows, _) = a.col(j);
            for (s, &r) in rows.iter().enumerate() {
                for &t in &rows[s + 1..] {
                    adjacency[t].push(r);
                }
            }
        }
        let symbolic = Arc::new(SymbolicCholesky::analyze(&adjacency));
        Self::with_symbolic(a, symbolic)
    }

    fn with_symbolic(a: &SparseMatrix, symbolic: Arc<SymbolicCholesky>) -> Self {
        let pinv = symbolic.inverse_permutation();
        let mut term_ptr = Vec::with_capacity(a.n_cols() + 1);
        let mut terms = Vec::new();
        term_ptr.push(0);
        for j in 0..a.n_cols() {
            let (rows, vals) = a.col(j);
            for s in 0..rows.len() {
                for t in s..rows.len() {
                    let (p, q) = (pinv[rows[s]], pinv[rows[t]]);
                    let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
                    terms.push(OuterTerm {
                        c_pos: symbolic.c_position(lo, hi).expect("outer product in pattern"),
                        l_pos: symbolic.l_position(hi, lo).expect("pattern of L covers A A^T"),
                        coef: vals[s] * vals[t],
                        multiplicity: if s == t { 1.0 } else { 2.0 },
                    });
                }
            }
            term_ptr.push(terms.len());
        }
        Self {
            a: a.clone(),
            symbolic,
            term_ptr,
            terms,
        }
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn symbolic(&self) -> &Arc<SymbolicCholesky> {
        &self.symbolic
    }

    fn assemble(&self, g: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.symbolic.c_nnz()];
        for (j, &gj) in g.iter().enumerate() {
            let w = 1.0 / gj;
            for term in &self.terms[self.term_ptr[j]..self.term_ptr[j + 1]] {
                c[term.c_pos] += term.coef * w;
            }
        }
        c
    }

    /// Factors `A g^{-1} A^T` for a positive diagonal `g`.
    pub fn factor(&self, g: &[f64]) -> Result<CholeskyFactor> {
        check_len(self.a.n_cols(), g.len())?;
        let c = self.assemble(g);
        let (values, _) = self.symbolic.numeric(&c, PivotMode::Strict, PIVOT_TOL)?;
        Ok(CholeskyFactor::from_parts(self.symbolic.clone(), values))
    }

    /// Factors `A g^{-1} A^T`, skipping pivots `d_k <= tol * M_kk`. Returns
    /// the factor and the skipped rows in original indexing, ascending.
    pub fn factor_rank_revealing(&self, g: &[f64], tol: f64) -> Result<(CholeskyFactor, Vec<usize>)> {
        check_len(self.a.n_cols(), g.len())?;
        let c = self.assemble(g);
        let (values, skipped) = self.symbolic.numeric(&c, PivotMode::Skip, tol)?;
        let perm = self.symbolic.permutation();
        let mut rows: Vec<usize> = skipped.into_iter().map(|k| perm[k]).collect();
        rows.sort_unstable();
        Ok((CholeskyFactor::from_parts(self.symbolic.clone(), values), rows))
    }

    /// Leverage scores `sigma_k = a_k^T (A g^{-1} A^T)^{-1} a_k / g_k` from a
    /// factor of `A g^{-1} A^T`, using only the selected inverse.
    pub fn leverage_scores(&self, factor: &CholeskyFactor, g: &[f64]) -> Vec<f64> {
        let selinv = factor.selected_inverse();
        let z = selinv.values();
        g.iter()
            .enumerate()
            .map(|(j, &gj)| {
                let quad: f64 = self.terms[self.term_ptr[j]..self.term_ptr[j + 1]]
                    .iter()
                    .map(|t| t.multiplicity * t.coef * z[t.l_pos])
                    .sum();
                quad / gj
            })
            .collect()
    }
}

/// Leverage scores of `g^{-1/2} A^T` : the diagonal of
/// `g^{-1/2} A^T (A g^{-1} A^T)^{-1} A g^{-1/2}`.
pub fn leverage_scores(a: &SparseMatrix, g: &[f64]) -> Result<Vec<f64>> {
    let system = NormalSystem::new(a);
    let factor = system.factor(g)?;
    Ok(system.leverage_scores(&factor, g))
}

/// Rows of `A` that are linearly dependent on the others under the fixed
/// elimination order of `A A^T`: each reported row has a Cholesky pivot
/// `<= tol` times its own squared norm. Sorted ascending.
pub fn dependent_rows(a: &SparseMatrix, tol: f64) -> Vec<usize> {
    let system = NormalSystem::new(a);
    let ones = vec![1.0; a.n_cols()];
    system
        .factor_rank_revealing(&ones, tol)
        .map(|(_, rows)| rows)
        .expect("lengths match by construction")
}
