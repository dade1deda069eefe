//! Constrained Riemannian Hamiltonian Monte Carlo on polytopes.
//!
//! Samples densities proportional to `exp(-alpha^T x)` over
//! `{x : Ax = b, l <= x <= u}` using the Hessian of the box log barrier as
//! the metric, an implicit midpoint integrator on the subspace `Null(A)`,
//! and sparse Cholesky / selected inversion for every linear-algebra kernel.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, threads,
//! diagnostics and the command-line driver live in the `crhmc` crate.

#![no_std]

extern crate alloc;

pub mod barrier;
pub mod dense;
mod error;
pub mod hamiltonian;
pub mod integrator;
pub mod polytopes;
pub mod preprocess;
pub mod sampler;
pub mod sparse;

pub use error::{Error, Result};
pub use barrier::BoxBarrier;
pub use hamiltonian::{HamiltonianOracle, PhaseState, PointCache};
pub use integrator::{imm_step, ImmOptions, ImmResult};
pub use preprocess::{PolytopeModel, Simplified, TransformRecord};
pub use sampler::{ChainStats, SampleBatch, SamplerConfig};
pub use sparse::{CholeskyFactor, NormalSystem, SelectedInverse, SparseMatrix};

/// Magnitude used to replace infinite bounds.
pub const BOUND_CLAMP: f64 = 1e7;
