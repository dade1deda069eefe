//! Hamiltonian derivatives against finite differences and dense formulas.

use crhmc_core::integrator::jacobian_probe;
use crhmc_core::polytopes::{hypercube, simplex};
use crhmc_core::{HamiltonianOracle, PhaseState, PolytopeModel, SparseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_model(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (PolytopeModel, Vec<f64>) {
    let mut t = Vec::new();
    for i in 0..m {
        t.push((i, i, 1.0 + rng.random_range(0.0..1.0)));
        for j in m..n {
            if rng.random::<f64>() < 0.4 {
                t.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    let a = SparseMatrix::from_triplets(m, n, &t).unwrap();
    let l: Vec<f64> = (0..n).map(|_| -rng.random_range(0.5..2.0)).collect();
    let u: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let x: Vec<f64> = l.iter().zip(&u).map(|(a, b)| a + (b - a) * rng.random_range(0.2..0.8)).collect();
    let alpha: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b = a.matvec(&x).unwrap();
    (PolytopeModel::new(a, b, l, u, Some(alpha)).unwrap(), x)
}

#[test]
fn hypercube_center_energy() {
    let model = PolytopeModel::new(SparseMatrix::zeros(0, 2), vec![], vec![-0.5; 2], vec![0.5; 2], None).unwrap();
    let o = HamiltonianOracle::from_model(&model).unwrap();
    let c = o.refresh(&[0.0, 0.0]).unwrap();
    assert!((o.h1(&c) - 8f64.ln()).abs() < 1e-12);
    assert!((o.h1(&c) - 2.0794).abs() < 1e-4);
    assert!(o.grad_h1(&c).iter().all(|v| v.abs() < 1e-12));
    assert!(o.dvdt_h2(&c, &[1.0, -2.0]).iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn identity_metric_moves_along_velocity() {
    // At x = 0 on [-a, a] with a = sqrt(2) the metric is 2/a^2 = 1.
    let a = 2f64.sqrt();
    let model = PolytopeModel::new(SparseMatrix::zeros(0, 3), vec![], vec![-a; 3], vec![a; 3], None).unwrap();
    let o = HamiltonianOracle::from_model(&model).unwrap();
    let c = o.refresh(&[0.0; 3]).unwrap();
    let v = [0.3, -1.0, 2.0];
    let dx = o.dxdt(&c, &v);
    for k in 0..3 {
        assert!((dx[k] - v[k]).abs() < 1e-12);
    }
}

#[test]
fn gradient_of_h1_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..10);
        let m = rng.random_range(0..n.min(4));
        let (model, x) = random_model(&mut rng, n, m);
        let o = HamiltonianOracle::from_model(&model).unwrap();
        let grad = o.grad_h1(&o.refresh(&x).unwrap());
        let eps = 1e-6;
        let fd: Vec<f64> = (0..n)
            .map(|k| {
                let mut p = x.clone();
                let mut q = x.clone();
                p[k] += eps;
                q[k] -= eps;
                (o.h1(&o.refresh(&p).unwrap()) - o.h1(&o.refresh(&q).unwrap())) / (2.0 * eps)
            })
            .collect();
        let scale = fd.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for k in 0..n {
            worst = worst.max((grad[k] - fd[k]).abs() / scale);
        }
    }
    assert!(worst <= 1e-5, "{worst}");
}

#[test]
fn velocity_force_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let n = rng.random_range(2..8);
        let m = rng.random_range(0..n.min(3));
        let (model, x) = random_model(&mut rng, n, m);
        let o = HamiltonianOracle::from_model(&model).unwrap();
        let c = o.refresh(&x).unwrap();
        let v = o.sample_velocity(&c, &mut rng);
        let force = o.dvdt_h2(&c, &v);
        let eps = 1e-6;
        for k in 0..n {
            let mut p = x.clone();
            let mut q = x.clone();
            p[k] += eps;
            q[k] -= eps;
            let fd = -(o.h2(&o.refresh(&p).unwrap(), &v) - o.h2(&o.refresh(&q).unwrap(), &v)) / (2.0 * eps);
            assert!((force[k] - fd).abs() <= 1e-5 * fd.abs().max(1.0), "{} vs {fd}", force[k]);
        }
    }
}

#[test]
fn dynamics_ignore_range_of_a_transpose() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (model, x) = random_model(&mut rng, 9, 3);
    let o = HamiltonianOracle::from_model(&model).unwrap();
    let c = o.refresh(&x).unwrap();
    let v = o.sample_velocity(&c, &mut rng);
    let y = [0.7, -1.3, 2.1];
    let shift = model.a.matvec_transpose(&y).unwrap();
    let w: Vec<f64> = v.iter().zip(&shift).map(|(a, b)| a + b).collect();
    assert!((o.h2(&c, &v) - o.h2(&c, &w)).abs() <= 1e-9 * o.h2(&c, &v).max(1.0));
    let (dv, dw) = (o.dxdt(&c, &v), o.dxdt(&c, &w));
    for k in 0..9 {
        assert!((dv[k] - dw[k]).abs() <= 1e-9);
    }
    let adx = model.a.matvec(&dv).unwrap();
    assert!(adx.iter().all(|r| r.abs() <= 1e-8));
}

#[test]
fn kinetic_energy_is_half_chi_square() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (model, x) = random_model(&mut rng, 10, 4);
    let o = HamiltonianOracle::from_model(&model).unwrap();
    let c = o.refresh(&x).unwrap();
    let draws = 20_000;
    let mut v = o.sample_velocity(&c, &mut rng);
    let (mut sum, mut sum2, mut mixed) = (0.0, 0.0, 0.0);
    for _ in 0..draws {
        let e = o.h2(&c, &o.sample_velocity(&c, &mut rng));
        sum += e;
        sum2 += e * e;
        v = o.momentum_mix(&c, &v, 0.8, &mut rng).unwrap();
        mixed += o.h2(&c, &v);
    }
    let mean = sum / draws as f64;
    let sd = (sum2 / draws as f64 - mean * mean).sqrt();
    // (n - m) / 2 = 3; the mixed sequence is autocorrelated, so its bound is looser.
    assert!((mean - 3.0).abs() <= 5.0 * sd / (draws as f64).sqrt(), "{mean}");
    let mixed_mean = mixed / draws as f64;
    assert!((mixed_mean - 3.0).abs() <= 5.0 * sd * 3.0 / (draws as f64).sqrt(), "{mixed_mean}");
}

#[test]
fn identity_metric_velocity_covariance() {
    let a = 2f64.sqrt();
    let model = PolytopeModel::new(SparseMatrix::zeros(0, 2), vec![], vec![-a; 2], vec![a; 2], None).unwrap();
    let o = HamiltonianOracle::from_model(&model).unwrap();
    let c = o.refresh(&[0.0; 2]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let draws = 100_000;
    let mut s = [[0.0; 2]; 2];
    for _ in 0..draws {
        let v = o.sample_velocity(&c, &mut rng);
        for i in 0..2 {
            for j in 0..2 {
                s[i][j] += v[i] * v[j] / draws as f64;
            }
        }
    }
    let se = (2.0 / draws as f64).sqrt();
    assert!((s[0][0] - 1.0).abs() < 5.0 * se && (s[1][1] - 1.0).abs() < 5.0 * se);
    assert!(s[0][1].abs() < 5.0 / (draws as f64).sqrt());
}

#[test]
fn integrator_preserves_volume() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for (model, x, tol) in [
        (hypercube(2), vec![0.1, -0.2], 1e-4),
        (simplex(3), vec![0.2, 0.3, 0.5], 1e-3),
    ] {
        let o = HamiltonianOracle::from_model(&model).unwrap();
        let c = o.refresh(&x).unwrap();
        let v = o.sample_velocity(&c, &mut rng);
        let det = jacobian_probe(&o, &PhaseState { x, v }, 0.1, 1e-5).unwrap();
        assert!((det - 1.0).abs() <= tol, "{det}");
    }
}
