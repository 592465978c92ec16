//! Gaussian bandit instances and the discrete-time UCB simulator.
//!
//! The index of arm `l` when deciding step `n` is
//!
//! ```text
//! U_l(n) = X_l / n_l + sqrt(a * D_l * ln(n / n_l) / n_l)
//! ```
//!
//! where `X_l` and `n_l` are the reward sum and pull count accumulated over
//! the previous `n - 1` steps. The first `J` steps pull every arm once, in
//! order. Ties go to the highest-numbered arm among the maximizers.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmParams {
    pub mean: f64,
    pub variance: f64,
}

impl ArmParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::domain(format!(
                "arm mean must be finite, got {mean}"
            )));
        }
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::domain(format!(
                "arm variance must be finite and >= 0, got {variance}"
            )));
        }
        Ok(Self { mean, variance })
    }
}

/// A bandit instance: arm parameters plus the known control horizon `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditSpec {
    arms: Vec<ArmParams>,
    horizon: u64,
}

impl BanditSpec {
    pub fn new(arms: Vec<ArmParams>, horizon: u64) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::domain(format!(
                "a bandit needs at least 2 arms, got {}",
                arms.len()
            )));
        }
        for arm in &arms {
            ArmParams::new(arm.mean, arm.variance)?;
        }
        if horizon < arms.len() as u64 {
            return Err(Error::domain(format!(
                "horizon {horizon} is shorter than the {} forced initial pulls",
                arms.len()
            )));
        }
        Ok(Self { arms, horizon })
    }

    /// Builds a spec from parallel slices of means and variances.
    pub fn from_slices(means: &[f64], variances: &[f64], horizon: u64) -> Result<Self> {
        if means.len() != variances.len() {
            return Err(Error::domain(format!(
                "{} means but {} variances",
                means.len(),
                variances.len()
            )));
        }
        let arms = means
            .iter()
            .zip(variances)
            .map(|(&m, &d)| ArmParams::new(m, d))
            .collect::<Result<Vec<_>>>()?;
        Self::new(arms, horizon)
    }

    pub fn arms(&self) -> &[ArmParams] {
        &self.arms
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn max_mean(&self) -> f64 {
        self.arms
            .iter()
            .map(|a| a.mean)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `D = max_l D_l`, the variance used to normalize regret.
    pub fn max_variance(&self) -> f64 {
        self.arms.iter().map(|a| a.variance).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UcbConfig {
    exploration: f64,
}

impl UcbConfig {
    pub fn new(exploration: f64) -> Result<Self> {
        if !(exploration > 0.0) || !exploration.is_finite() {
            return Err(Error::domain(format!(
                "exploration coefficient must be finite and > 0, got {exploration}"
            )));
        }
        Ok(Self { exploration })
    }

    pub fn exploration(&self) -> f64 {
        self.exploration
    }
}

impl Default for UcbConfig {
    fn default() -> Self {
        Self { exploration: 1.0 }
    }
}

/// Which per-replication quantity is used as the regret sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegretEstimator {
    /// `sum_n (m_max - m_chosen)`.
    #[default]
    Pseudo,
    /// `sum_n (m_max - xi_n)` using the realized rewards.
    Realized,
}

/// Mid-run state of the discrete simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    /// The 1-based step about to be played; `step - 1` steps are complete.
    pub step: u64,
    pub counts: Vec<u64>,
    pub reward_sums: Vec<f64>,
}

impl RunState {
    pub fn new(num_arms: usize) -> Self {
        Self {
            step: 1,
            counts: vec![0; num_arms],
            reward_sums: vec![0.0; num_arms],
        }
    }

    pub fn completed_steps(&self) -> u64 {
        self.step - 1
    }

    fn record(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.reward_sums[arm] += reward;
        self.step += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub counts: Vec<u64>,
    pub pseudo_regret: f64,
    pub realized_regret: f64,
    /// `pseudo_regret / sqrt(D N)`; `None` when every arm has zero variance.
    pub normalized_regret: Option<f64>,
    scale: Option<f64>,
}

impl RunResult {
    /// The normalized regret sample for the requested estimator.
    pub fn normalized(&self, estimator: RegretEstimator) -> Option<f64> {
        let raw = match estimator {
            RegretEstimator::Pseudo => self.pseudo_regret,
            RegretEstimator::Realized => self.realized_regret,
        };
        self.scale.map(|s| raw / s)
    }
}

/// Means `m + c_l sqrt(D / N)` of the "close distributions" family.
pub fn close_means(m: f64, offsets: &[f64], variance: f64, horizon: u64) -> Result<Vec<f64>> {
    if !(variance > 0.0) {
        return Err(Error::domain(format!("D must be > 0, got {variance}")));
    }
    if horizon == 0 {
        return Err(Error::domain("N must be >= 1"));
    }
    let unit = (variance / horizon as f64).sqrt();
    Ok(offsets.iter().map(|c| m + c * unit).collect())
}

pub fn ucb_index(
    reward_sum: f64,
    n_l: u64,
    n: u64,
    variance: f64,
    exploration: f64,
) -> Result<f64> {
    if n_l == 0 {
        return Err(Error::contract("UCB index of an arm that was never pulled"));
    }
    if n < n_l {
        return Err(Error::domain(format!(
            "step {n} is smaller than pull count {n_l}"
        )));
    }
    if !(variance >= 0.0) {
        return Err(Error::domain(format!(
            "variance must be >= 0, got {variance}"
        )));
    }
    if !(exploration > 0.0) {
        return Err(Error::domain(format!(
            "exploration must be > 0, got {exploration}"
        )));
    }
    Ok(index_unchecked(
        reward_sum,
        n_l,
        n as f64,
        variance,
        exploration,
    ))
}

#[inline]
fn index_unchecked(reward_sum: f64, n_l: u64, n: f64, variance: f64, exploration: f64) -> f64 {
    let n_l = n_l as f64;
    reward_sum / n_l + (exploration * variance * (n / n_l).ln() / n_l).sqrt()
}

/// Argmax of the UCB indices at `step`; ties go to the last maximizer.
#[inline]
fn argmax_index(state: &RunState, arms: &[ArmParams], exploration: f64) -> usize {
    let n = state.step as f64;
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (l, arm) in arms.iter().enumerate() {
        let u = index_unchecked(
            state.reward_sums[l],
            state.counts[l],
            n,
            arm.variance,
            exploration,
        );
        if u >= best_value {
            best = l;
            best_value = u;
        }
    }
    best
}

/// The arm the UCB rule plays at `state.step`.
pub fn choose_arm(state: &RunState, spec: &BanditSpec, config: &UcbConfig) -> Result<usize> {
    let j = spec.num_arms();
    if state.counts.len() != j || state.reward_sums.len() != j {
        return Err(Error::contract(format!(
            "state tracks {} arms but the bandit has {j}",
            state.counts.len()
        )));
    }
    if state.step <= j as u64 {
        return Err(Error::contract(format!(
            "step {} is a forced initial pull, not a UCB decision",
            state.step
        )));
    }
    if state.step > spec.horizon() {
        return Err(Error::contract(format!(
            "step {} is past the horizon {}",
            state.step,
            spec.horizon()
        )));
    }
    if state.counts.contains(&0) {
        return Err(Error::contract(
            "every arm must be pulled once before UCB decisions",
        ));
    }
    if state.counts.iter().sum::<u64>() != state.completed_steps() {
        return Err(Error::contract(
            "pull counts do not add up to the completed steps",
        ));
    }
    Ok(argmax_index(state, spec.arms(), config.exploration()))
}

/// One reward `m + sqrt(D) * eta` for a standard normal draw `eta`.
#[inline]
pub fn sample_reward(arm: &ArmParams, noise: f64) -> f64 {
    if arm.variance == 0.0 {
        arm.mean
    } else {
        arm.mean + arm.variance.sqrt() * noise
    }
}

/// Plays the full horizon once. Consumes exactly `N` standard normal draws.
pub fn simulate_run<R: Rng + ?Sized>(
    spec: &BanditSpec,
    config: &UcbConfig,
    rng: &mut R,
) -> Result<RunResult> {
    Ok(run_observed(spec, config, rng, |_| {}))
}

/// Like [`simulate_run`], also returning the chosen arm at every step.
pub fn simulate_run_traced<R: Rng + ?Sized>(
    spec: &BanditSpec,
    config: &UcbConfig,
    rng: &mut R,
) -> Result<(RunResult, Vec<usize>)> {
    let mut arms = Vec::with_capacity(spec.horizon() as usize);
    let result = run_observed(spec, config, rng, |l| arms.push(l));
    Ok((result, arms))
}

fn run_observed<R: Rng + ?Sized>(
    spec: &BanditSpec,
    config: &UcbConfig,
    rng: &mut R,
    mut on_pull: impl FnMut(usize),
) -> RunResult {
    let arms = spec.arms();
    let j = arms.len();
    let a = config.exploration();
    let mut state = RunState::new(j);
    let mut reward_total = 0.0;

    while state.step <= spec.horizon() {
        let arm = if state.step <= j as u64 {
            (state.step - 1) as usize
        } else {
            argmax_index(&state, arms, a)
        };
        let eta: f64 = rng.sample(StandardNormal);
        let reward = sample_reward(&arms[arm], eta);
        reward_total += reward;
        state.record(arm, reward);
        on_pull(arm);
    }

    let m_max = spec.max_mean();
    let pseudo_regret = arms
        .iter()
        .zip(&state.counts)
        .map(|(arm, &n_l)| (m_max - arm.mean) * n_l as f64)
        .sum();
    let horizon = spec.horizon() as f64;
    let realized_regret = m_max * horizon - reward_total;
    let d = spec.max_variance();
    let scale = (d > 0.0).then(|| (d * horizon).sqrt());
    RunResult {
        counts: state.counts,
        pseudo_regret,
        realized_regret,
        normalized_regret: scale.map(|s| pseudo_regret / s),
        scale,
    }
}
