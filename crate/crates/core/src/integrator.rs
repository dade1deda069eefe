//! Implicit midpoint integrator for the split Hamiltonian `H1 + H2`.
//!
//! One step is a half kick on `H1`, an implicit midpoint solve on `H2`, and
//! another half kick on `H1`. The implicit stage is solved by fixed-point
//! iteration in `(x, v, nu)`, where `nu` tracks the multiplier
//! `(A g^{-1} A^T)^{-1} A g^{-1} v_mid` by a preconditioned Richardson update
//! whose preconditioner is the factor already cached at the start point.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{determinant, null_space_basis};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianOracle, PhaseState, PointCache};

/// Bound on `‖Ax - b‖_∞` accepted at the end of a step.
pub const EQUALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImmOptions {
    /// Maximum fixed-point iterations.
    pub max_iters: usize,
    /// Stop once successive iterates differ by at most this much in the
    /// mixed norm `‖dx‖_g + ‖dv‖_{g^{-1}} + h ‖A^T dnu‖_{g^{-1}}`.
    pub tol: f64,
}

impl Default for ImmOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-10,
        }
    }
}

/// `1e-10 · (1 + ‖v‖_{g^{-1}})`, the default fixed-point tolerance at a state.
pub fn default_tolerance(cache: &PointCache, v: &[f64]) -> f64 {
    1e-10 * (1.0 + dual_norm(cache.metric(), v))
}

#[derive(Debug, Clone)]
pub struct ImmResult {
    pub x1: Vec<f64>,
    pub v1: Vec<f64>,
    pub converged: bool,
    pub fixed_point_iters: usize,
    pub final_residual: f64,
    /// Cache at `x1`, present when the step converged.
    pub cache: Option<PointCache>,
}

fn dual_norm(g: &[f64], d: &[f64]) -> f64 {
    libm::sqrt(g.iter().zip(d).map(|(g, d)| d * d / g).sum())
}

/// One implicit-midpoint step from `state`; `cache` must be built at `state.x`.
///
/// Failure to converge, leaving the box, or losing `Ax = b` yields
/// `converged = false` rather than an error.
pub fn imm_step(
    oracle: &HamiltonianOracle,
    cache: &PointCache,
    state: &PhaseState,
    h: f64,
    opts: ImmOptions,
) -> ImmResult {
    let n = oracle.n();
    let m = oracle.m();
    let x = &state.x;
    let g0 = cache.metric();
    let barrier = oracle.barrier();

    let grad0 = oracle.grad_h1(cache);
    let v13: Vec<f64> = state.v.iter().zip(&grad0).map(|(v, d)| v - 0.5 * h * d).collect();

    let mut x23 = x.clone();
    let mut v23 = v13.clone();
    let mut nu = vec![0.0; m];
    let mut xmid = vec![0.0; n];
    let mut vmid = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut at = vec![0.0; n];
    let mut at_dnu = vec![0.0; n];
    let mut rhs = vec![0.0; m];
    let mut dnu = vec![0.0; m];
    let mut work = vec![0.0; m];

    let mut converged = false;
    let mut iters = 0;
    let mut residual = f64::INFINITY;
    let mut scaled_back = false;

    for k in 1..=opts.max_iters {
        iters = k;
        for i in 0..n {
            xmid[i] = 0.5 * (x[i] + x23[i]);
        }
        if !barrier.is_interior(&xmid) {
            if scaled_back {
                break;
            }
            scaled_back = true;
            let d: Vec<f64> = x23.iter().zip(x).map(|(a, b)| a - b).collect();
            let t = barrier.step_to_boundary(x, &d).min(1.0);
            for i in 0..n {
                x23[i] = x[i] + 0.99 * t * d[i];
                xmid[i] = 0.5 * (x[i] + x23[i]);
            }
            if !barrier.is_interior(&xmid) {
                break;
            }
        }
        let gmid = barrier.hessian_unchecked(&xmid);
        let dgmid = barrier.hessian_deriv_unchecked(&xmid);
        for i in 0..n {
            vmid[i] = 0.5 * (v13[i] + v23[i]);
        }

        if m > 0 {
            // nu <- nu + (L L^T)^{-1} A g_mid^{-1} (v_mid - A^T nu)
            oracle.mul_at(&nu, &mut at);
            for i in 0..n {
                u[i] = (vmid[i] - at[i]) / gmid[i];
            }
            oracle.mul_a(&u, &mut rhs);
            oracle.normal_solve(cache, &rhs, &mut dnu, &mut work);
            for (a, d) in nu.iter_mut().zip(&dnu) {
                *a += d;
            }
            oracle.mul_at(&nu, &mut at);
            oracle.mul_at(&dnu, &mut at_dnu);
        }

        let mut dx2 = 0.0;
        let mut dv2 = 0.0;
        for i in 0..n {
            u[i] = (vmid[i] - if m > 0 { at[i] } else { 0.0 }) / gmid[i];
            let new_x = x[i] + h * u[i];
            let new_v = v13[i] + 0.5 * h * dgmid[i] * u[i] * u[i];
            dx2 += g0[i] * (new_x - x23[i]) * (new_x - x23[i]);
            dv2 += (new_v - v23[i]) * (new_v - v23[i]) / g0[i];
            x23[i] = new_x;
            v23[i] = new_v;
        }
        let dnu_norm = if m > 0 { dual_norm(g0, &at_dnu) } else { 0.0 };
        residual = libm::sqrt(dx2) + libm::sqrt(dv2) + h * dnu_norm;
        if !residual.is_finite() {
            break;
        }
        if residual <= opts.tol {
            converged = true;
            break;
        }
    }

    let mut end_cache = None;
    if converged {
        converged = barrier.is_interior(&x23) && oracle.equality_residual(&x23) <= EQUALITY_TOL;
    }
    if converged {
        match oracle.refresh(&x23) {
            Ok(c) => {
                let grad1 = oracle.grad_h1(&c);
                for (v, d) in v23.iter_mut().zip(&grad1) {
                    *v -= 0.5 * h * d;
                }
                end_cache = Some(c);
            }
            Err(_) => converged = false,
        }
    }

    ImmResult {
        x1: x23,
        v1: v23,
        converged,
        fixed_point_iters: iters,
        final_residual: residual,
        cache: end_cache,
    }
}

/// Finite-difference estimate of `|det|` of the Jacobian of one step,
/// restricted to the `2(n - m)`-dimensional phase space: positions move in
/// `Null(A)` and velocities are taken modulo `Range(A^T)`.
///
/// Dense; intended for small test problems only.
pub fn jacobian_probe(oracle: &HamiltonianOracle, state: &PhaseState, h: f64, eps: f64) -> Result<f64> {
    let (n, m) = (oracle.n(), oracle.m());
    let basis = null_space_basis(&oracle.a().to_dense(), m, n);
    let d = basis.len();
    let opts = ImmOptions {
        max_iters: 500,
        tol: 1e-14,
    };
    let project = |w: &[f64]| -> Vec<f64> {
        basis
            .iter()
            .map(|b| b.iter().zip(w).map(|(p, q)| p * q).sum())
            .collect()
    };
    let run = |s: &PhaseState| -> Result<(Vec<f64>, Vec<f64>)> {
        let c = oracle.refresh(&s.x)?;
        let r = imm_step(oracle, &c, s, h, opts);
        if !r.converged {
            return Err(Error::NumericalFailure("implicit midpoint did not converge".into()));
        }
        Ok((r.x1, r.v1))
    };

    let dim = 2 * d;
    let mut jac = vec![0.0; dim * dim];
    for col in 0..dim {
        let dir = &basis[col % d];
        let shifted = |sign: f64| {
            let mut s = state.clone();
            let target = if col < d { &mut s.x } else { &mut s.v };
            for (t, b) in target.iter_mut().zip(dir) {
                *t += sign * eps * b;
            }
            s
        };
        let (xp, vp) = run(&shifted(1.0))?;
        let (xm, vm) = run(&shifted(-1.0))?;
        let dx: Vec<f64> = xp.iter().zip(&xm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let dv: Vec<f64> = vp.iter().zip(&vm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        for (row, val) in project(&dx).into_iter().chain(project(&dv)).enumerate() {
            jac[row * dim + col] = val;
        }
    }
    Ok(determinant(jac, dim).abs())
}
