//! The Markov chain: partial momentum refresh, one implicit-midpoint step,
//! and a Metropolis filter that negates the velocity on rejection. Also a
//! coordinate hit-and-run chain on boxes used as a baseline.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianOracle, PhaseState, PointCache};
use crate::integrator::{default_tolerance, imm_step, ImmOptions, EQUALITY_TOL};
use crate::preprocess::{PolytopeModel, Simplified};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplerConfig {
    pub h_init: f64,
    pub h_floor: f64,
    pub target_acceptance: f64,
    pub adaptation_window: usize,
    pub shrink_factor: f64,
    /// Momentum `beta`; `None` means `max(0, 1 - h)`.
    pub momentum: Option<f64>,
    pub max_fixed_point_iters: usize,
    /// Absolute fixed-point tolerance; `None` means `1e-10 (1 + ‖v‖_{g^{-1}})`.
    pub fixed_point_tol: Option<f64>,
    pub record_every: usize,
    /// Warm-up steps; `None` means `10 * record_every`.
    pub warmup: Option<usize>,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            h_init: 0.2,
            h_floor: 1e-4,
            target_acceptance: 0.9,
            adaptation_window: 50,
            shrink_factor: 0.9,
            momentum: None,
            max_fixed_point_iters: 100,
            fixed_point_tol: None,
            record_every: 10,
            warmup: None,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if !(self.h_floor > 0.0 && self.h_floor <= self.h_init && self.h_init <= 1.0) {
            return bad("step sizes must satisfy 0 < h_floor <= h_init <= 1");
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return bad("target acceptance must lie in (0, 1)");
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return bad("shrink factor must lie in (0, 1)");
        }
        if self.adaptation_window == 0 || self.record_every == 0 || self.max_fixed_point_iters == 0 {
            return bad("window, record interval and iteration cap must be positive");
        }
        if let Some(beta) = self.momentum {
            if !(0.0..=1.0).contains(&beta) {
                return bad("momentum must lie in [0, 1]");
            }
        }
        if let Some(tol) = self.fixed_point_tol {
            if !(tol > 0.0) {
                return bad("fixed-point tolerance must be positive");
            }
        }
        Ok(())
    }

    pub fn warmup_steps(&self) -> usize {
        self.warmup.unwrap_or(10 * self.record_every)
    }

    pub fn momentum_for(&self, h: f64) -> f64 {
        self.momentum.unwrap_or((1.0 - h).max(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainStats {
    pub steps_total: usize,
    pub accepts: usize,
    pub rejects: usize,
    pub nonconverged_imm: usize,
    pub mean_fixed_point_iters: f64,
    /// Seconds per step after warm-up (0 without a clock).
    pub wall_time_per_step: f64,
    pub warmup_steps: usize,
    pub warmup_accepts: usize,
    /// Step size after adaptation.
    pub step_size: f64,
}

impl ChainStats {
    /// Steps taken after warm-up.
    pub fn sampling_steps(&self) -> usize {
        self.steps_total - self.warmup_steps
    }

    pub fn acceptance_rate(&self) -> f64 {
        ratio(self.accepts, self.steps_total)
    }

    pub fn post_warmup_acceptance(&self) -> f64 {
        ratio(self.accepts - self.warmup_accepts, self.sampling_steps())
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Recorded samples in original coordinates, one row each.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleBatch {
    pub samples: Vec<Vec<f64>>,
    pub stats: ChainStats,
    pub config: SamplerConfig,
    pub chain_index: u64,
}

/// Monotone wall clock in seconds. The core crate has no clock of its own.
pub trait Clock {
    fn now(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

/// Generator for chain `chain` of a run seeded with `seed`: one ChaCha8
/// stream per chain, so results do not depend on how chains are scheduled.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: PhaseState,
    pub cache: PointCache,
    pub accepted: bool,
    pub converged: bool,
    pub fixed_point_iters: usize,
    /// `min(1, exp(-ΔH))`, zero when the integrator failed.
    pub accept_prob: f64,
}

/// One transition. Every failure mode is a rejection, which returns
/// `(x, -v_mixed)` with the unchanged cache.
#[allow(clippy::too_many_arguments)]
pub fn mcmc_step<R: Rng + ?Sized>(
    oracle: &HamiltonianOracle,
    cache: &PointCache,
    state: &PhaseState,
    h: f64,
    beta: f64,
    max_iters: usize,
    tol: Option<f64>,
    rng: &mut R,
) -> Result<StepOutcome> {
    let v_mix = oracle.momentum_mix(cache, &state.v, beta, rng)?;
    let energy = oracle.total_energy(cache, &v_mix);
    let opts = ImmOptions {
        max_iters,
        tol: tol.unwrap_or_else(|| default_tolerance(cache, &v_mix)),
    };
    let mix = PhaseState {
        x: state.x.clone(),
        v: v_mix,
    };
    let step = imm_step(oracle, cache, &mix, h, opts);
    let iters = step.fixed_point_iters;
    if let Some(next_cache) = step.cache {
        let delta = oracle.total_energy(&next_cache, &step.v1) - energy;
        let prob = if delta.is_nan() { 0.0 } else { libm::exp(-delta).min(1.0) };
        let u: f64 = rng.random();
        if u < prob {
            return Ok(StepOutcome {
                state: PhaseState {
                    x: step.x1,
                    v: step.v1,
                },
                cache: next_cache,
                accepted: true,
                converged: true,
                fixed_point_iters: iters,
                accept_prob: prob,
            });
        }
        return Ok(rejected(cache, mix, true, iters, prob));
    }
    Ok(rejected(cache, mix, false, iters, 0.0))
}

fn rejected(cache: &PointCache, mut mix: PhaseState, converged: bool, iters: usize, prob: f64) -> StepOutcome {
    for v in &mut mix.v {
        *v = -*v;
    }
    StepOutcome {
        state: mix,
        cache: cache.clone(),
        accepted: false,
        converged,
        fixed_point_iters: iters,
        accept_prob: prob,
    }
}

/// New step size after one adaptation window with the given acceptance
/// probabilities: shrink if their mean falls below the target.
pub fn adapt_step_size(h: f64, window: &[f64], config: &SamplerConfig) -> f64 {
    if window.is_empty() {
        return h;
    }
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    if mean < config.target_acceptance {
        (h * config.shrink_factor).max(config.h_floor)
    } else {
        h
    }
}

/// Windowed warm-up adaptation; frozen once warm-up ends.
#[derive(Debug, Clone)]
pub struct StepSizeAdapter {
    h: f64,
    window: Vec<f64>,
    frozen: bool,
}

impl StepSizeAdapter {
    pub fn new(config: &SamplerConfig) -> Self {
        Self {
            h: config.h_init,
            window: Vec::with_capacity(config.adaptation_window),
            frozen: false,
        }
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn observe(&mut self, accept_prob: f64, config: &SamplerConfig) {
        if self.frozen {
            return;
        }
        self.window.push(accept_prob);
        if self.window.len() == config.adaptation_window {
            self.h = adapt_step_size(self.h, &self.window, config);
            self.window.clear();
        }
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
        self.window.clear();
    }
}

/// Runs one chain on a simplified model from its analytic center and
/// records `n_samples` states, lifted to the original coordinates.
pub fn run_chain(
    prepared: &Simplified,
    config: &SamplerConfig,
    n_samples: usize,
    chain_index: u64,
    clock: &dyn Clock,
) -> Result<SampleBatch> {
    config.validate()?;
    let model = &prepared.model;
    let record = &prepared.record;
    let mut stats = ChainStats {
        step_size: config.h_init,
        ..ChainStats::default()
    };
    if model.n() == 0 {
        let point = record.lift(&[])?;
        return Ok(SampleBatch {
            samples: (0..n_samples).map(|_| point.clone()).collect(),
            stats,
            config: config.clone(),
            chain_index,
        });
    }

    let oracle = HamiltonianOracle::from_model(model)?;
    let x0 = prepared.center.clone();
    if !oracle.barrier().is_interior(&x0) || oracle.equality_residual(&x0) > EQUALITY_TOL {
        return Err(Error::Config("starting point violates the simplified model".into()));
    }
    let mut rng = chain_rng(config.seed, chain_index);
    let mut cache = oracle.refresh(&x0)?;
    let v0 = oracle.sample_velocity(&cache, &mut rng);
    let mut state = PhaseState { x: x0, v: v0 };
    let mut adapter = StepSizeAdapter::new(config);
    let warmup = config.warmup_steps();
    let total = warmup + n_samples * config.record_every;
    let mut samples = Vec::with_capacity(n_samples);
    let mut iter_sum = 0usize;
    let mut t_start = clock.now();

    for step in 0..total {
        if step == warmup {
            adapter.freeze();
            stats.warmup_steps = warmup;
            stats.warmup_accepts = stats.accepts;
            t_start = clock.now();
        }
        let h = adapter.step_size();
        let out = mcmc_step(
            &oracle,
            &cache,
            &state,
            h,
            config.momentum_for(h),
            config.max_fixed_point_iters,
            config.fixed_point_tol,
            &mut rng,
        )?;
        stats.steps_total += 1;
        iter_sum += out.fixed_point_iters;
        if out.accepted {
            stats.accepts += 1;
        } else {
            stats.rejects += 1;
        }
        if !out.converged {
            stats.nonconverged_imm += 1;
        }
        if step < warmup {
            adapter.observe(out.accept_prob, config);
        }
        state = out.state;
        cache = out.cache;

        if step >= warmup && (step - warmup + 1).is_multiple_of(config.record_every) {
            if !oracle.barrier().is_interior(&state.x) || oracle.equality_residual(&state.x) > EQUALITY_TOL {
                return Err(Error::NumericalFailure(format!(
                    "recorded state at step {step} left the feasible set"
                )));
            }
            samples.push(record.lift(&state.x)?);
        }
    }
    if warmup >= total {
        stats.warmup_steps = total;
        stats.warmup_accepts = stats.accepts;
    }
    let sampling = stats.sampling_steps();
    stats.wall_time_per_step = if sampling > 0 {
        (clock.now() - t_start) / sampling as f64
    } else {
        0.0
    };
    stats.mean_fixed_point_iters = ratio(iter_sum, stats.steps_total);
    stats.step_size = adapter.step_size();
    Ok(SampleBatch {
        samples,
        stats,
        config: config.clone(),
        chain_index,
    })
}

/// One coordinate hit-and-run move on a box: a uniform coordinate is
/// redrawn uniformly over its interval.
pub fn char_step<R: Rng + ?Sized>(lower: &[f64], upper: &[f64], x: &mut [f64], rng: &mut R) {
    let i = rng.random_range(0..x.len());
    let u: f64 = rng.random();
    x[i] = lower[i] + u * (upper[i] - lower[i]);
}

/// Coordinate hit-and-run on a box model (`m = 0`), started at the box
/// center, recording every `record_every` steps (default `n^2`) after a
/// warm-up of ten recording intervals.
pub fn run_char_chain(
    model: &PolytopeModel,
    n_samples: usize,
    record_every: Option<usize>,
    seed: u64,
    chain_index: u64,
    clock: &dyn Clock,
) -> Result<SampleBatch> {
    if model.m() > 0 {
        return Err(Error::Unsupported(
            "coordinate hit-and-run baseline only handles box models".into(),
        ));
    }
    let n = model.n();
    let every = record_every.unwrap_or(n * n).max(1);
    let config = SamplerConfig {
        record_every: every,
        seed,
        ..SamplerConfig::default()
    };
    let warmup = config.warmup_steps();
    let mut rng = chain_rng(seed, chain_index);
    let mut x: Vec<f64> = model
        .lower
        .iter()
        .zip(&model.upper)
        .map(|(l, u)| 0.5 * (l + u))
        .collect();
    let mut samples = Vec::with_capacity(n_samples);
    if n > 0 {
        for _ in 0..warmup {
            char_step(&model.lower, &model.upper, &mut x, &mut rng);
        }
    }
    let t_start = clock.now();
    let sampling = n_samples * every;
    for step in 0..sampling {
        if n > 0 {
            char_step(&model.lower, &model.upper, &mut x, &mut rng);
        }
        if (step + 1) % every == 0 {
            samples.push(x.clone());
        }
    }
    let total = warmup + sampling;
    let stats = ChainStats {
        steps_total: total,
        accepts: total,
        rejects: 0,
        nonconverged_imm: 0,
        mean_fixed_point_iters: 0.0,
        wall_time_per_step: if sampling > 0 {
            (clock.now() - t_start) / sampling as f64
        } else {
            0.0
        },
        warmup_steps: warmup,
        warmup_accepts: warmup,
        step_size: 0.0,
    };
    Ok(SampleBatch {
        samples,
        stats,
        config,
        chain_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytopes::{hypercube, simplex};
    use crate::preprocess::simplify;
    use alloc::vec;

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::default().validate().is_ok());
        let bad = SamplerConfig {
            h_floor: 0.5,
            ..SamplerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SamplerConfig {
            target_acceptance: 1.0,
            ..SamplerConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(SamplerConfig::default().warmup_steps(), 100);
        assert!((SamplerConfig::default().momentum_for(0.2) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn adaptation_recursion() {
        let config = SamplerConfig::default();
        assert_eq!(adapt_step_size(0.2, &[1.0; 50], &config), 0.2);
        let mut h = config.h_init;
        let mut windows = 0;
        while h > config.h_floor {
            h = adapt_step_size(h, &[0.0; 50], &config);
            windows += 1;
        }
        let want = libm::ceil(libm::log(config.h_floor / config.h_init) / libm::log(config.shrink_factor));
        assert_eq!(windows, want as usize);
        assert_eq!(h, config.h_floor);
    }

    #[test]
    fn adapter_freezes() {
        let config = SamplerConfig {
            adaptation_window: 2,
            ..SamplerConfig::default()
        };
        let mut a = StepSizeAdapter::new(&config);
        a.observe(0.0, &config);
        a.observe(0.0, &config);
        assert!((a.step_size() - 0.18).abs() < 1e-15);
        a.freeze();
        a.observe(0.0, &config);
        a.observe(0.0, &config);
        assert!((a.step_size() - 0.18).abs() < 1e-15);
    }

    #[test]
    fn rejection_negates_mixed_velocity() {
        let model = hypercube(2);
        let oracle = HamiltonianOracle::from_model(&model).unwrap();
        let cache = oracle.refresh(&[0.45, 0.0]).unwrap();
        let state = PhaseState {
            x: vec![0.45, 0.0],
            v: vec![1e6, 0.0],
        };
        // beta = 1 keeps the velocity; the huge step cannot converge
        let mut rng = chain_rng(1, 0);
        let out = mcmc_step(&oracle, &cache, &state, 0.5, 1.0, 20, None, &mut rng).unwrap();
        assert!(!out.accepted);
        assert_eq!(out.state.x, state.x);
        assert_eq!(out.state.v, vec![-1e6, -0.0]);
    }

    #[test]
    fn tiny_step_is_accepted() {
        let model = simplex(3);
        let oracle = HamiltonianOracle::from_model(&model).unwrap();
        let x = vec![0.2, 0.3, 0.5];
        let cache = oracle.refresh(&x).unwrap();
        let mut rng = chain_rng(3, 0);
        let v = oracle.sample_velocity(&cache, &mut rng);
        let out = mcmc_step(&oracle, &cache, &PhaseState { x, v }, 1e-6, 0.5, 20, None, &mut rng).unwrap();
        assert!(out.accept_prob > 1.0 - 1e-9);
    }

    #[test]
    fn chain_is_deterministic_and_feasible() {
        let prepared = simplify(&simplex(5)).unwrap();
        let config = SamplerConfig {
            seed: 11,
            ..SamplerConfig::default()
        };
        let a = run_chain(&prepared, &config, 20, 0, &NoClock).unwrap();
        let b = run_chain(&prepared, &config, 20, 0, &NoClock).unwrap();
        assert_eq!(a, b);
        let c = run_chain(&prepared, &config, 20, 1, &NoClock).unwrap();
        assert_ne!(a.samples, c.samples);
        assert_eq!(a.samples.len(), 20);
        assert_eq!(a.stats.accepts + a.stats.rejects, a.stats.steps_total);
        for s in &a.samples {
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-8);
            assert!(s.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn zero_samples() {
        let prepared = simplify(&hypercube(3)).unwrap();
        let batch = run_chain(&prepared, &SamplerConfig::default(), 0, 0, &NoClock).unwrap();
        assert!(batch.samples.is_empty());
    }

    #[test]
    fn char_rejects_equalities_and_stays_in_box() {
        assert!(matches!(
            run_char_chain(&simplex(3), 1, None, 0, 0, &NoClock),
            Err(Error::Unsupported(_))
        ));
        let batch = run_char_chain(&hypercube(4), 50, None, 0, 0, &NoClock).unwrap();
        assert_eq!(batch.samples.len(), 50);
        assert!(batch.samples.iter().flatten().all(|v| v.abs() < 0.5));
    }
}
