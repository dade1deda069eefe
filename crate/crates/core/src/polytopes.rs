//! Structured benchmark polytopes.

use alloc::vec;
use alloc::vec::Vec;

use crate::preprocess::PolytopeModel;
use crate::sparse::SparseMatrix;

/// `[-1/2, 1/2]^n` with no equality constraints.
pub fn hypercube(n: usize) -> PolytopeModel {
    PolytopeModel::new(
        SparseMatrix::zeros(0, n),
        Vec::new(),
        vec![-0.5; n],
        vec![0.5; n],
        None,
    )
    .expect("consistent by construction")
}

/// `{x >= 0 : sum x = 1}`.
pub fn simplex(n: usize) -> PolytopeModel {
    let triplets: Vec<_> = (0..n).map(|j| (0, j, 1.0)).collect();
    let a = SparseMatrix::from_triplets(1, n, &triplets).expect("indices in range");
    PolytopeModel::new(a, vec![1.0], vec![0.0; n], vec![f64::INFINITY; n], None)
        .expect("consistent by construction")
}

/// Doubly stochastic `k x k` matrices, variable `x[i * k + j]` for entry
/// `(i, j)`. All `k` column sums and the first `k - 1` row sums are kept, so
/// `A` has full row rank `2k - 1`.
pub fn birkhoff(k: usize) -> PolytopeModel {
    let n = k * k;
    let m = (2 * k).saturating_sub(1);
    let mut triplets = Vec::with_capacity(2 * n);
    for i in 0..k {
        for j in 0..k {
            let var = i * k + j;
            triplets.push((j, var, 1.0));
            if i + 1 < k {
                triplets.push((k + i, var, 1.0));
            }
        }
    }
    let a = SparseMatrix::from_triplets(m, n, &triplets).expect("indices in range");
    PolytopeModel::new(a, vec![1.0; m], vec![0.0; n], vec![f64::INFINITY; n], None)
        .expect("consistent by construction")
}
