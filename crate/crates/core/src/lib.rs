//! Discrete UCB simulation for Gaussian multi-armed bandits together with the
//! stochastic-differential-equation system that describes the same strategy
//! as the horizon grows, plus the Monte Carlo harness that compares them.
//!
//! Arms are indexed from zero throughout the API. Where the text talks about
//! "the second arm" that is index `1`.
//!
//! With the `parallel` feature (on by default) independent replications run
//! on a rayon pool; without it everything runs on the calling thread. Both
//! paths produce bit-identical results for the same master seed.

// NaN must fail the `!(x > 0.0)` style guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandit;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod io;
pub mod montecarlo;
pub mod sde;

pub use bandit::{
    choose_arm, close_means, sample_reward, simulate_run, simulate_run_traced, ucb_index,
    ArmParams, BanditSpec, RegretEstimator, RunResult, RunState, UcbConfig,
};
pub use error::{Error, Result};
pub use experiments::{
    find_max_regret, find_threshold_horizon, sweep_c2, sweep_horizon, MaxRegret, Method, SweepRow,
    SweepTable,
};
pub use montecarlo::{
    aggregate, run_replications, seed_for, stream_rng, AggregateStats, Engine, ReplicationTask,
};
pub use sde::{
    em_init, em_step, heaviside_indicators, indicator, integrate, scaled_ucb_index, to_scaled,
    ScaledSystem, SdeConfig, SdeRunResult, SdeState,
};
