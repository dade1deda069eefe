//! Log barrier `phi(x) = -sum(log(x_i - l_i) + log(u_i - x_i))` of a box.
//!
//! The barrier is separable, so its Hessian `g` and third derivative `Dg` are
//! diagonal and all metric computations are elementwise.

use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::BOUND_CLAMP;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxBarrier {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Clamps a lower bound to `[-1e7, ..)`; `-inf` and NaN-free input assumed.
pub fn clamp_lower(l: f64) -> f64 {
    l.max(-BOUND_CLAMP)
}

pub fn clamp_upper(u: f64) -> f64 {
    u.min(BOUND_CLAMP)
}

impl BoxBarrier {
    /// Builds the barrier, clamping infinite bounds to `±1e7`.
    /// Requires `l_i < u_i` after clamping.
    pub fn new(lower: &[f64], upper: &[f64]) -> Result<Self> {
        check_len(lower.len(), upper.len())?;
        let lower: Vec<f64> = lower.iter().map(|&l| clamp_lower(l)).collect();
        let upper: Vec<f64> = upper.iter().map(|&u| clamp_upper(u)).collect();
        for (i, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !(l < u) {
                return Err(Error::InvalidInput(alloc::format!(
                    "empty interval for coordinate {i}: [{l}, {u}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Checks `l < x < u` strictly.
    pub fn check_interior(&self, x: &[f64]) -> Result<()> {
        check_len(self.dim(), x.len())?;
        match self.first_violation(x) {
            Some(index) => Err(Error::InfeasiblePoint { index }),
            None => Ok(()),
        }
    }

    pub fn is_interior(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.first_violation(x).is_none()
    }

    fn first_violation(&self, x: &[f64]) -> Option<usize> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .position(|(&xi, (&l, &u))| !(xi > l && xi < u))
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_interior(x)?;
        Ok(self
            .slacks(x)
            .map(|(s, t)| -(libm::log(s) + libm::log(t)))
            .sum())
    }

    fn slacks<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = (f64, f64)> + 'a {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&xi, (&l, &u))| (xi - l, u - xi))
    }

    /// `-1/(x-l) + 1/(u-x)`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_interior(x)?;
        Ok(self.slacks(x).map(|(s, t)| -1.0 / s + 1.0 / t).collect())
    }

    /// Diagonal of the Hessian: `(x-l)^{-2} + (u-x)^{-2}`.
    pub fn hessian_diag(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_interior(x)?;
        Ok(self.hessian_unchecked(x))
    }

    pub(crate) fn hessian_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.slacks(x).map(|(s, t)| 1.0 / (s * s) + 1.0 / (t * t)).collect()
    }

    /// Diagonal of the third derivative: `-2(x-l)^{-3} + 2(u-x)^{-3}`.
    pub fn hessian_deriv_diag(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_interior(x)?;
        Ok(self.hessian_deriv_unchecked(x))
    }

    pub(crate) fn hessian_deriv_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.slacks(x)
            .map(|(s, t)| -2.0 / (s * s * s) + 2.0 / (t * t * t))
            .collect()
    }

    /// Largest `t >= 0` with `x + t d` inside the closed box (`inf` if unbounded).
    pub fn step_to_boundary(&self, x: &[f64], d: &[f64]) -> f64 {
        let mut t_max = f64::INFINITY;
        for (i, (&xi, &di)) in x.iter().zip(d).enumerate() {
            let t = if di > 0.0 {
                (self.upper[i] - xi) / di
            } else if di < 0.0 {
                (self.lower[i] - xi) / di
            } else {
                continue;
            };
            t_max = t_max.min(t);
        }
        t_max
    }
}
