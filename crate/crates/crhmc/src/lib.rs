//! File formats, diagnostics, multi-chain runs and benchmarks for the
//! constrained Riemannian HMC sampler in [`crhmc_core`].

pub mod bench;
pub mod chains;
pub mod diagnostics;
pub mod io;

pub use crhmc_core;
