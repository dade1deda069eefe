//! Small dense kernels for diagnostics on problems with a few dozen variables.
//! Never used on the sampling path.

use alloc::vec;
use alloc::vec::Vec;

/// Orthonormal basis of `Null(A)` for a row-major `m x n` matrix of full row
/// rank, returned as `n - m` vectors of length `n`.
///
/// Householder QR of `A^T`; the trailing `n - m` columns of `Q` span the
/// orthogonal complement of `Range(A^T)`.
pub fn null_space_basis(a: &[f64], m: usize, n: usize) -> Vec<Vec<f64>> {
    // work on A^T stored column-major as m columns of length n
    let mut cols: Vec<Vec<f64>> = (0..m).map(|i| a[i * n..(i + 1) * n].to_vec()).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(m);
    for k in 0..m {
        let norm = libm::sqrt(cols[k][k..].iter().map(|v| v * v).sum::<f64>());
        let mut v = vec![0.0; n];
        v[k..].copy_from_slice(&cols[k][k..]);
        let alpha = if v[k] >= 0.0 { -norm } else { norm };
        v[k] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for col in cols.iter_mut().skip(k) {
                reflect(&v, vnorm2, col);
            }
        }
        reflectors.push(v);
    }
    (m..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            for v in reflectors.iter().rev() {
                let vnorm2: f64 = v.iter().map(|x| x * x).sum();
                if vnorm2 > 0.0 {
                    reflect(v, vnorm2, &mut e);
                }
            }
            e
        })
        .collect()
}

fn reflect(v: &[f64], vnorm2: f64, x: &mut [f64]) {
    let s = 2.0 * v.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() / vnorm2;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s * vi;
    }
}

/// Determinant of a row-major `n x n` matrix by LU with partial pivoting.
pub fn determinant(mut a: Vec<f64>, n: usize) -> f64 {
    let mut det = 1.0;
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
            .unwrap_or(k);
        if a[pivot * n + k] == 0.0 {
            return 0.0;
        }
        if pivot != k {
            for j in 0..n {
                a.swap(k * n + j, pivot * n + j);
            }
            det = -det;
        }
        let akk = a[k * n + k];
        det *= akk;
        for i in k + 1..n {
            let f = a[i * n + k] / akk;
            if f != 0.0 {
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_ones_row() {
        let basis = null_space_basis(&[1.0, 1.0, 1.0], 1, 3);
        assert_eq!(basis.len(), 2);
        for (i, b) in basis.iter().enumerate() {
            assert!(b.iter().sum::<f64>().abs() < 1e-14);
            for (j, c) in basis.iter().enumerate() {
                let d: f64 = b.iter().zip(c).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn determinant_small() {
        assert!((determinant(vec![4.0, 2.0, 2.0, 3.0], 2) - 8.0).abs() < 1e-14);
        assert!((determinant(vec![0.0, 1.0, 1.0, 0.0], 2) + 1.0).abs() < 1e-14);
        assert_eq!(determinant(vec![1.0, 2.0, 2.0, 4.0], 2), 0.0);
    }
}
