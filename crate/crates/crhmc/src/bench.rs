//! Mixing benchmarks on the structured families.

use std::fmt;
use std::str::FromStr;

use crhmc_core::polytopes::{birkhoff, hypercube, simplex};
use crhmc_core::preprocess::simplify;
use crhmc_core::sampler::{run_chain, run_char_chain};
use crhmc_core::{PolytopeModel, SampleBatch, SamplerConfig};

use crate::chains::StdClock;
use crate::diagnostics::{ess, mixing_report, MixingReport, MixingRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Hypercube,
    Simplex,
    /// Dimension parameter is the side `k` of the `k x k` matrices.
    Birkhoff,
}

impl Family {
    pub fn build(self, dim: usize) -> PolytopeModel {
        match self {
            Self::Hypercube => hypercube(dim),
            Self::Simplex => simplex(dim),
            Self::Birkhoff => birkhoff(dim),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Hypercube => "hypercube",
            Self::Simplex => "simplex",
            Self::Birkhoff => "birkhoff",
        })
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hypercube" => Ok(Self::Hypercube),
            "simplex" => Ok(Self::Simplex),
            "birkhoff" => Ok(Self::Birkhoff),
            other => Err(format!("unknown family `{other}`")),
        }
    }
}

/// A coordinate that never moved makes the row unreliable: its ESS is
/// reported as `N`, which says nothing about mixing.
fn row_from_batch(name: &str, model: &PolytopeModel, batch: &SampleBatch) -> MixingRow {
    let report = ess(&batch.samples).ok();
    let min_ess = report.as_ref().map_or(0.0, |r| r.min_ess);
    let steps = batch.stats.sampling_steps();
    let seconds = batch.stats.wall_time_per_step * steps as f64;
    let mut row = MixingRow::new(name, model.n(), model.nnz(), steps, seconds, min_ess);
    if report.is_some_and(|r| r.constant.iter().any(|&c| c)) {
        row.reliable = false;
    }
    row
}

/// Samples `model` with the constrained sampler and returns the mixing row
/// together with the batch. Preprocessing time is not counted.
pub fn crhmc_row(
    name: &str,
    model: &PolytopeModel,
    config: &SamplerConfig,
    n_samples: usize,
) -> crhmc_core::Result<(MixingRow, SampleBatch)> {
    let prepared = simplify(model)?;
    let batch = run_chain(&prepared, config, n_samples, 0, &StdClock::default())?;
    Ok((row_from_batch(name, model, &batch), batch))
}

/// Coordinate hit-and-run on a box model, recording every `n^2` steps.
pub fn char_row(
    name: &str,
    model: &PolytopeModel,
    n_samples: usize,
    seed: u64,
) -> crhmc_core::Result<(MixingRow, SampleBatch)> {
    let batch = run_char_chain(model, n_samples, None, seed, 0, &StdClock::default())?;
    Ok((row_from_batch(name, model, &batch), batch))
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub crhmc: MixingReport,
    pub char_baseline: Option<MixingReport>,
}

/// Runs one family over `dims`; the hit-and-run baseline only applies to
/// hypercubes.
pub fn run_bench(
    family: Family,
    dims: &[usize],
    config: &SamplerConfig,
    n_samples: usize,
    baseline: bool,
) -> crhmc_core::Result<BenchReport> {
    let mut rows = Vec::with_capacity(dims.len());
    let mut char_rows = Vec::new();
    for &d in dims {
        let model = family.build(d);
        let name = format!("{family}({d})");
        rows.push(crhmc_row(&name, &model, config, n_samples)?.0);
        if baseline && family == Family::Hypercube {
            char_rows.push(char_row(&format!("char {name}"), &model, n_samples, config.seed)?.0);
        }
    }
    Ok(BenchReport {
        crhmc: mixing_report(rows),
        char_baseline: (!char_rows.is_empty()).then(|| mixing_report(char_rows)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names_round_trip() {
        for f in [Family::Hypercube, Family::Simplex, Family::Birkhoff] {
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
        assert!("cube".parse::<Family>().is_err());
    }

    #[test]
    fn single_dimension_gives_one_row() {
        let config = SamplerConfig {
            seed: 1,
            ..SamplerConfig::default()
        };
        let rep = run_bench(Family::Hypercube, &[4], &config, 30, true).unwrap();
        assert_eq!(rep.crhmc.rows.len(), 1);
        assert!(rep.crhmc.slope.is_none());
        assert_eq!(rep.char_baseline.unwrap().rows.len(), 1);
    }
}
