//! Sparse storage, Cholesky factorization, selected inversion and leverage scores.

mod cholesky;
mod matrix;
mod normal;
pub mod ordering;
mod selinv;

pub use cholesky::{cholesky_factorize, CholeskyFactor, SymbolicCholesky, PIVOT_TOL};
pub use matrix::SparseMatrix;
pub use normal::{dependent_rows, leverage_scores, NormalSystem};
pub use selinv::SelectedInverse;
