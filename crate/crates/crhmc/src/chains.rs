//! Independent chains on worker threads.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crhmc_core::sampler::{run_chain, Clock};
use crhmc_core::{SampleBatch, SamplerConfig, Simplified};

/// Wall clock measured from construction.
#[derive(Debug, Clone, Copy)]
pub struct StdClock(Instant);

impl Default for StdClock {
    fn default() -> Self {
        Self(Instant::now())
    }
}

impl Clock for StdClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Worker cap: `CRHMC_THREADS` if set and positive, else the number of CPUs.
pub fn max_threads() -> usize {
    std::env::var("CRHMC_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Samples assigned to chain `i` when `total` samples are split over `chains`.
pub fn chain_share(total: usize, chains: usize, i: usize) -> usize {
    total / chains + usize::from(i < total % chains)
}

/// Runs `chains` chains with seeds derived from `config.seed` and returns
/// their batches ordered by chain index. The result does not depend on the
/// number of worker threads.
pub fn run_chains(
    prepared: &Simplified,
    config: &SamplerConfig,
    total_samples: usize,
    chains: usize,
) -> crhmc_core::Result<Vec<SampleBatch>> {
    let chains = chains.max(1);
    let workers = max_threads().min(chains);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<crhmc_core::Result<SampleBatch>>>> =
        Mutex::new((0..chains).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= chains {
                    break;
                }
                let clock = StdClock::default();
                let out = run_chain(prepared, config, chain_share(total_samples, chains, i), i as u64, &clock);
                results.lock().expect("no worker panics while holding the lock")[i] = Some(out);
            });
        }
    });
    results
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every chain ran"))
        .collect()
}
