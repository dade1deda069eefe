//! Subspace Hamiltonian for sampling `exp(-alpha^T x)` on `{Ax = b} ∩ box`.
//!
//! With `g = ∇²φ` the barrier Hessian and `P = g^{-1/2} A^T (A g^{-1} A^T)^{-1} A g^{-1/2}`,
//!
//! ```text
//! H(x, v) = H1(x) + H2(x, v)
//! H1(x)   = alpha^T x + ½ (log det g(x) + log det A g(x)^{-1} A^T)
//! H2(x, v) = ½ v^T W(x) v,   W = g^{-1/2} (I - P) g^{-1/2}
//! ```
//!
//! `W` is the pseudo-inverse of the metric restricted to `Null(A)`. The
//! constant `-½ log det A A^T` of the pseudo-determinant is omitted from
//! every stored energy; it cancels in all energy differences.
//!
//! Velocities live in the full space. Both `W v` and `H2` are invariant under
//! `v -> v + A^T y`, so `v` is only meaningful modulo `Range(A^T)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::barrier::BoxBarrier;
use crate::error::{check_len, Error, Result};
use crate::preprocess::PolytopeModel;
use crate::sparse::{CholeskyFactor, NormalSystem, SparseMatrix};

/// Position and velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

/// Everything the Hamiltonian needs at one position.
///
/// A cache is bound to the exact `x` it was built from; moving to a new
/// position means building a new cache.
#[derive(Debug, Clone)]
pub struct PointCache {
    x: Vec<f64>,
    g: Vec<f64>,
    dg: Vec<f64>,
    factor: CholeskyFactor,
    sigma: Vec<f64>,
    log_det_g: f64,
    log_det_normal: f64,
}

impl PointCache {
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Barrier Hessian diagonal `g(x)`.
    pub fn metric(&self) -> &[f64] {
        &self.g
    }

    /// Diagonal of `Dg(x)`.
    pub fn metric_deriv(&self) -> &[f64] {
        &self.dg
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    pub fn leverage_scores(&self) -> &[f64] {
        &self.sigma
    }

    pub fn log_det_metric(&self) -> f64 {
        self.log_det_g
    }

    /// `log det A g^{-1} A^T` (zero when there are no equality constraints).
    pub fn log_det_normal(&self) -> f64 {
        self.log_det_normal
    }
}

#[derive(Debug, Clone)]
pub struct HamiltonianOracle {
    a: SparseMatrix,
    b: Vec<f64>,
    barrier: BoxBarrier,
    alpha: Vec<f64>,
    system: NormalSystem,
}

impl HamiltonianOracle {
    pub fn new(a: SparseMatrix, b: Vec<f64>, barrier: BoxBarrier, alpha: Vec<f64>) -> Result<Self> {
        check_len(a.n_rows(), b.len())?;
        check_len(a.n_cols(), barrier.dim())?;
        check_len(a.n_cols(), alpha.len())?;
        let system = NormalSystem::new(&a);
        Ok(Self {
            a,
            b,
            barrier,
            alpha,
            system,
        })
    }

    pub fn from_model(model: &PolytopeModel) -> Result<Self> {
        let barrier = BoxBarrier::new(&model.lower, &model.upper)?;
        Self::new(model.a.clone(), model.b.clone(), barrier, model.alpha.clone())
    }

    pub fn n(&self) -> usize {
        self.a.n_cols()
    }

    pub fn m(&self) -> usize {
        self.a.n_rows()
    }

    pub fn a(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn barrier(&self) -> &BoxBarrier {
        &self.barrier
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `‖Ax - b‖_∞`.
    pub fn equality_residual(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.m()];
        self.a.mul_into(x, &mut ax);
        ax.iter()
            .zip(&self.b)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    }

    /// Builds the cache at `x`: metric, its derivative, the factor of
    /// `A g^{-1} A^T` (numeric phase only) and the leverage scores.
    pub fn refresh(&self, x: &[f64]) -> Result<PointCache> {
        self.barrier.check_interior(x)?;
        let g = self.barrier.hessian_unchecked(x);
        let dg = self.barrier.hessian_deriv_unchecked(x);
        let factor = self.system.factor(&g)?;
        let sigma = self.system.leverage_scores(&factor, &g);
        let log_det_g = g.iter().map(|&v| libm::log(v)).sum();
        let log_det_normal = factor.log_det();
        Ok(PointCache {
            x: x.to_vec(),
            g,
            dg,
            factor,
            sigma,
            log_det_g,
            log_det_normal,
        })
    }

    /// `(A g^{-1} A^T)^{-1} rhs` with the cached factor.
    pub(crate) fn normal_solve(&self, cache: &PointCache, rhs: &[f64], out: &mut [f64], work: &mut [f64]) {
        cache.factor.solve_into(rhs, out, work);
    }

    pub(crate) fn mul_a(&self, x: &[f64], out: &mut [f64]) {
        self.a.mul_into(x, out);
    }

    pub(crate) fn mul_at(&self, y: &[f64], out: &mut [f64]) {
        self.a.mul_transpose_into(y, out);
    }

    /// `W w = g^{-1} w - g^{-1} A^T (A g^{-1} A^T)^{-1} A g^{-1} w`.
    pub fn apply_w(&self, cache: &PointCache, w: &[f64]) -> Vec<f64> {
        let mut u: Vec<f64> = w.iter().zip(&cache.g).map(|(wi, gi)| wi / gi).collect();
        if self.m() == 0 {
            return u;
        }
        let m = self.m();
        let mut au = vec![0.0; m];
        let mut y = vec![0.0; m];
        let mut work = vec![0.0; m];
        self.a.mul_into(&u, &mut au);
        cache.factor.solve_into(&au, &mut y, &mut work);
        let mut aty = vec![0.0; self.n()];
        self.a.mul_transpose_into(&y, &mut aty);
        for ((ui, ai), gi) in u.iter_mut().zip(&aty).zip(&cache.g) {
            *ui -= ai / gi;
        }
        u
    }

    /// Position part of the energy (constant `-½ log det AA^T` dropped).
    pub fn h1(&self, cache: &PointCache) -> f64 {
        dot(&self.alpha, &cache.x) + 0.5 * (cache.log_det_g + cache.log_det_normal)
    }

    /// Kinetic part `½ v^T W v`.
    pub fn h2(&self, cache: &PointCache, v: &[f64]) -> f64 {
        0.5 * dot(v, &self.apply_w(cache, v))
    }

    pub fn total_energy(&self, cache: &PointCache, v: &[f64]) -> f64 {
        self.h1(cache) + self.h2(cache, v)
    }

    /// `∇H1 = alpha + ½ (1 - sigma) Dg / g`.
    pub fn grad_h1(&self, cache: &PointCache) -> Vec<f64> {
        (0..self.n())
            .map(|k| self.alpha[k] + 0.5 * (1.0 - cache.sigma[k]) * cache.dg[k] / cache.g[k])
            .collect()
    }

    /// `dx/dt = W v`.
    pub fn dxdt(&self, cache: &PointCache, v: &[f64]) -> Vec<f64> {
        self.apply_w(cache, v)
    }

    /// `-∂H2/∂x = ½ Dg[dx/dt, dx/dt]`.
    pub fn dvdt_h2(&self, cache: &PointCache, v: &[f64]) -> Vec<f64> {
        let dx = self.apply_w(cache, v);
        dx.iter()
            .zip(&cache.dg)
            .map(|(d, dg)| 0.5 * dg * d * d)
            .collect()
    }

    /// Draws `v = g^{1/2} w` with `w` standard normal. Modulo `Range(A^T)`
    /// this has the law of `N(0, M(x))` for the constrained metric.
    pub fn sample_velocity<R: Rng + ?Sized>(&self, cache: &PointCache, rng: &mut R) -> Vec<f64> {
        cache
            .g
            .iter()
            .map(|&gi| libm::sqrt(gi) * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// `sqrt(beta) v_old + sqrt(1 - beta) z` with a fresh velocity `z`.
    pub fn momentum_mix<R: Rng + ?Sized>(
        &self,
        cache: &PointCache,
        v_old: &[f64],
        beta: f64,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::Config(alloc::format!("momentum {beta} outside [0, 1]")));
        }
        check_len(self.n(), v_old.len())?;
        let z = self.sample_velocity(cache, rng);
        let (keep, fresh) = (libm::sqrt(beta), libm::sqrt(1.0 - beta));
        Ok(v_old.iter().zip(&z).map(|(v, z)| keep * v + fresh * z).collect())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
