//! Replication harness.
//!
//! Replication `i` of a task draws all of its noise from
//! `ChaCha8Rng::seed_from_u64(seed_for(master_seed, i))`, so a replication's
//! trajectory does not depend on which thread runs it or on how many other
//! replications exist. Samples are gathered in replication order and reduced
//! on one thread, which makes the aggregate bit-identical for every
//! parallelism degree.
//!
//! Normal variates come from `rand_distr::StandardNormal` (ziggurat). It is a
//! rejection method: most draws use one `u64`, the rest a small random number
//! more. Noise budgets elsewhere are counted in normal draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bandit::{simulate_run, BanditSpec, RegretEstimator, UcbConfig};
use crate::error::{Error, Result};
use crate::sde::{integrate, SdeConfig};

/// Environment variable overriding the default worker count.
pub const THREADS_ENV: &str = "UCB_LIMIT_THREADS";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output at counter position `index + 1` of the sequence seeded
/// with `master_seed`. Injective in `index` for a fixed master seed.
pub fn seed_for(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The random stream owned by replication `index`.
pub fn stream_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed_for(master_seed, index))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Engine {
    Discrete {
        spec: BanditSpec,
        config: UcbConfig,
        estimator: RegretEstimator,
    },
    Limit(SdeConfig),
}

impl Engine {
    pub fn discrete(spec: BanditSpec, config: UcbConfig) -> Self {
        Engine::Discrete {
            spec,
            config,
            estimator: RegretEstimator::Pseudo,
        }
    }

    /// Normalized regret of one replication.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        match self {
            Engine::Discrete {
                spec,
                config,
                estimator,
            } => simulate_run(spec, config, rng)?
                .normalized(*estimator)
                .ok_or_else(|| Error::domain("normalized regret needs a positive arm variance")),
            Engine::Limit(cfg) => Ok(integrate(cfg, rng).normalized_regret),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationTask {
    pub engine: Engine,
    replications: u64,
    pub master_seed: u64,
}

impl ReplicationTask {
    pub fn new(engine: Engine, replications: u64, master_seed: u64) -> Result<Self> {
        if replications == 0 {
            return Err(Error::domain("at least one replication is required"));
        }
        Ok(Self {
            engine,
            replications,
            master_seed,
        })
    }

    pub fn replications(&self) -> u64 {
        self.replications
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateStats {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`; absent for one sample.
    pub stderr: Option<f64>,
    pub count: u64,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn aggregate(samples: &[f64]) -> Result<AggregateStats> {
    if samples.is_empty() {
        return Err(Error::domain("cannot aggregate an empty sample"));
    }
    let r = samples.len() as f64;
    let mean = compensated_sum(samples.iter().copied()) / r;
    let stderr = (samples.len() > 1).then(|| {
        let ss = compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean)));
        (ss / (r - 1.0)).sqrt() / r.sqrt()
    });
    Ok(AggregateStats {
        mean,
        stderr,
        count: samples.len() as u64,
    })
}

/// Worker count from the environment override, else the machine's parallelism.
pub fn default_parallelism() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
}

fn replicate(task: &ReplicationTask, index: u64) -> Result<f64> {
    let mut rng = stream_rng(task.master_seed, index);
    task.engine
        .sample(&mut rng)
        .map_err(|e| Error::Replication {
            index,
            source: Box::new(e),
        })
}

/// Per-replication normalized regrets, in replication order.
pub fn replicate_samples(task: &ReplicationTask, parallelism: usize) -> Result<Vec<f64>> {
    let r = task.replications;
    #[cfg(feature = "parallel")]
    if parallelism > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::contract(format!("cannot start worker pool: {e}")))?;
        return pool.install(|| (0..r).into_par_iter().map(|i| replicate(task, i)).collect());
    }
    #[cfg(not(feature = "parallel"))]
    let _ = parallelism;
    (0..r).map(|i| replicate(task, i)).collect()
}

pub fn run_replications(task: &ReplicationTask, parallelism: usize) -> Result<AggregateStats> {
    aggregate(&replicate_samples(task, parallelism)?)
}
