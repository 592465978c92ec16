//! Limiting description of the UCB rule as the horizon grows: `J` Itô SDEs
//! for the scaled cumulative rewards and `J - 1` ODEs for the usage times,
//! integrated on the unit horizon with Euler–Maruyama.
//!
//! In scaled coordinates the system reads
//!
//! ```text
//! dY_l = I_l c_l dt + sqrt(d_l) I_l dW_l
//! dt_l = I_l dt
//! ```
//!
//! where `I_l` is one for the arm with the largest index
//! `Y_l / t_l + sqrt(a d_l ln(t / t_l) / t_l)` and zero otherwise. The usage
//! time of the last arm is `t - sum of the others`, which holds by
//! construction because exactly one `t_l` advances per step. The indicator is
//! frozen over each Euler step.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::bandit::{BanditSpec, UcbConfig};
use crate::error::{Error, Result};

/// Unit-horizon system: drifts `c_l`, relative variances `d_l = D_l / D`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSystem {
    drifts: Vec<f64>,
    rel_variances: Vec<f64>,
    exploration: f64,
}

impl ScaledSystem {
    pub fn new(drifts: Vec<f64>, rel_variances: Vec<f64>, exploration: f64) -> Result<Self> {
        if drifts.len() != rel_variances.len() {
            return Err(Error::domain(format!(
                "{} drifts but {} relative variances",
                drifts.len(),
                rel_variances.len()
            )));
        }
        if drifts.len() < 2 {
            return Err(Error::domain("the limiting system needs at least 2 arms"));
        }
        if let Some(c) = drifts.iter().find(|c| !c.is_finite()) {
            return Err(Error::domain(format!("drift must be finite, got {c}")));
        }
        if let Some(d) = rel_variances.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::domain(format!(
                "relative variance must lie in [0, 1], got {d}"
            )));
        }
        UcbConfig::new(exploration)?;
        Ok(Self {
            drifts,
            rel_variances,
            exploration,
        })
    }

    pub fn drifts(&self) -> &[f64] {
        &self.drifts
    }

    pub fn rel_variances(&self) -> &[f64] {
        &self.rel_variances
    }

    pub fn exploration(&self) -> f64 {
        self.exploration
    }

    pub fn num_arms(&self) -> usize {
        self.drifts.len()
    }
}

/// Inverts the close-distribution parametrization around `baseline`.
pub fn to_scaled(spec: &BanditSpec, baseline: f64, config: &UcbConfig) -> Result<ScaledSystem> {
    let d = spec.max_variance();
    if !(d > 0.0) {
        return Err(Error::domain(
            "cannot scale a bandit whose arms all have zero variance",
        ));
    }
    let unit = (spec.horizon() as f64 / d).sqrt();
    let drifts = spec
        .arms()
        .iter()
        .map(|a| (a.mean - baseline) * unit)
        .collect();
    let rel = spec.arms().iter().map(|a| a.variance / d).collect();
    ScaledSystem::new(drifts, rel, config.exploration())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdeConfig {
    system: ScaledSystem,
    step: f64,
}

impl SdeConfig {
    pub fn new(system: ScaledSystem, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::domain(format!("step must be > 0, got {step}")));
        }
        if system.num_arms() as f64 * step >= 1.0 {
            return Err(Error::domain(format!(
                "step {step} leaves no free steps after initializing {} arms",
                system.num_arms()
            )));
        }
        Ok(Self { system, step })
    }

    pub fn system(&self) -> &ScaledSystem {
        &self.system
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `t0 = J h`, the time after one Euler cell per arm.
    pub fn start_time(&self) -> f64 {
        self.system.num_arms() as f64 * self.step
    }

    /// Number of Euler steps taken after initialization.
    pub fn free_steps(&self) -> u64 {
        ((1.0 - self.start_time()) / self.step).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdeState {
    pub t: f64,
    /// Usage times `t_l`.
    pub usage: Vec<f64>,
    /// Scaled cumulative rewards `Y_l`.
    pub rewards: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdeRunResult {
    pub final_usage: Vec<f64>,
    /// `sum_l (c_max - c_l) t_l(1)`.
    pub normalized_regret: f64,
}

pub fn scaled_ucb_index(
    reward: f64,
    usage: f64,
    t: f64,
    rel_variance: f64,
    exploration: f64,
) -> Result<f64> {
    if !(usage > 0.0) {
        return Err(Error::domain(format!(
            "usage time must be > 0, got {usage}"
        )));
    }
    if t < usage {
        return Err(Error::domain(format!(
            "time {t} is smaller than usage time {usage}"
        )));
    }
    Ok(index_unchecked(reward, usage, t, rel_variance, exploration))
}

#[inline]
fn index_unchecked(reward: f64, usage: f64, t: f64, rel_variance: f64, exploration: f64) -> f64 {
    reward / usage + (exploration * rel_variance * (t / usage).ln() / usage).sqrt()
}

fn indices<'a>(state: &'a SdeState, system: &'a ScaledSystem) -> impl Iterator<Item = f64> + 'a {
    let a = system.exploration;
    let t = state.t;
    state
        .rewards
        .iter()
        .zip(&state.usage)
        .zip(&system.rel_variances)
        .map(move |((&y, &tl), &d)| index_unchecked(y, tl, t, d, a))
}

/// The arm whose usage time advances: the index maximizer, ties to the
/// highest-numbered arm (`H(0) = 0`).
pub fn indicator(state: &SdeState, system: &ScaledSystem) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (l, u) in indices(state, system).enumerate() {
        if u >= best_value {
            best = l;
            best_value = u;
        }
    }
    best
}

/// Indicators as products of Heaviside steps of index differences, with the
/// last arm taking `1 - sum of the others`.
///
/// Agrees with [`indicator`] whenever the maximum is unique, and for two arms
/// on every input. With three or more arms and a tie for the maximum among
/// the leading arms, the product form hands the step to the last arm.
pub fn heaviside_indicators(state: &SdeState, system: &ScaledSystem) -> Vec<u8> {
    let heaviside = |x: f64| u8::from(x > 0.0);
    let u: Vec<f64> = indices(state, system).collect();
    let j = u.len();
    let mut ind = vec![0u8; j];
    for l in 0..j - 1 {
        ind[l] = (0..j)
            .filter(|&i| i != l)
            .map(|i| heaviside(u[l] - u[i]))
            .product();
    }
    ind[j - 1] = 1 - ind[..j - 1].iter().sum::<u8>();
    ind
}

/// One Euler cell per arm: `t_l = h`, `Y_l ~ Normal(c_l h, d_l h)`.
pub fn em_init<R: Rng + ?Sized>(config: &SdeConfig, rng: &mut R) -> SdeState {
    let noise: Vec<f64> = (0..config.system.num_arms())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    em_init_with_noise(config, &noise)
}

/// [`em_init`] driven by explicit standard normal draws, one per arm.
pub fn em_init_with_noise(config: &SdeConfig, noise: &[f64]) -> SdeState {
    let h = config.step;
    let sys = &config.system;
    assert_eq!(noise.len(), sys.num_arms(), "one noise draw per arm");
    let rewards = sys
        .drifts
        .iter()
        .zip(&sys.rel_variances)
        .zip(noise)
        .map(|((&c, &d), &eta)| increment(c, d, h, eta))
        .collect();
    SdeState {
        t: config.start_time(),
        usage: vec![h; sys.num_arms()],
        rewards,
    }
}

#[inline]
fn increment(drift: f64, rel_variance: f64, h: f64, eta: f64) -> f64 {
    if rel_variance == 0.0 {
        drift * h
    } else {
        drift * h + (rel_variance * h).sqrt() * eta
    }
}

/// Advances one Euler–Maruyama step and returns the arm that moved.
pub fn em_step<R: Rng + ?Sized>(
    state: &mut SdeState,
    config: &SdeConfig,
    rng: &mut R,
) -> Result<usize> {
    check_step(state, config)?;
    let eta = rng.sample(StandardNormal);
    Ok(step_unchecked(state, config, eta))
}

/// [`em_step`] with an explicit noise draw.
pub fn em_step_with_noise(state: &mut SdeState, config: &SdeConfig, eta: f64) -> Result<usize> {
    check_step(state, config)?;
    Ok(step_unchecked(state, config, eta))
}

fn check_step(state: &SdeState, config: &SdeConfig) -> Result<()> {
    let j = config.system.num_arms();
    if state.usage.len() != j || state.rewards.len() != j {
        return Err(Error::contract(format!(
            "state tracks {} arms but the system has {j}",
            state.usage.len()
        )));
    }
    if state.t + config.step > 1.0 + config.step / 2.0 {
        return Err(Error::contract(format!(
            "stepping from t = {} would pass the end of the horizon",
            state.t
        )));
    }
    Ok(())
}

#[inline]
fn step_unchecked(state: &mut SdeState, config: &SdeConfig, eta: f64) -> usize {
    let sys = &config.system;
    let h = config.step;
    let l = indicator(state, sys);
    state.rewards[l] += increment(sys.drifts[l], sys.rel_variances[l], h, eta);
    state.usage[l] += h;
    state.t += h;
    l
}

/// Integrates from `t0 = J h` to `t = 1`. Consumes exactly
/// `J + free_steps()` standard normal draws.
pub fn integrate<R: Rng + ?Sized>(config: &SdeConfig, rng: &mut R) -> SdeRunResult {
    integrate_observed(config, rng, |_| {})
}

/// Like [`integrate`], also returning the arm advanced at each free step.
pub fn integrate_traced<R: Rng + ?Sized>(
    config: &SdeConfig,
    rng: &mut R,
) -> (SdeRunResult, Vec<usize>) {
    let mut arms = Vec::with_capacity(config.free_steps() as usize);
    let result = integrate_observed(config, rng, |l| arms.push(l));
    (result, arms)
}

fn integrate_observed<R: Rng + ?Sized>(
    config: &SdeConfig,
    rng: &mut R,
    mut on_step: impl FnMut(usize),
) -> SdeRunResult {
    let mut state = em_init(config, rng);
    for _ in 0..config.free_steps() {
        let eta = rng.sample(StandardNormal);
        on_step(step_unchecked(&mut state, config, eta));
    }
    let drifts = config.system.drifts();
    let c_max = drifts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let normalized_regret = drifts
        .iter()
        .zip(&state.usage)
        .map(|(&c, &tl)| (c_max - c) * tl)
        .sum();
    SdeRunResult {
        final_usage: state.usage,
        normalized_regret,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn system(c: &[f64], d: &[f64]) -> ScaledSystem {
        ScaledSystem::new(c.to_vec(), d.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn to_scaled_examples() {
        let cfg = UcbConfig::default();
        let spec = BanditSpec::from_slices(&[0.0, 0.18], &[1.0, 1.0], 400).unwrap();
        let s = to_scaled(&spec, 0.0, &cfg).unwrap();
        assert_eq!(s.drifts()[0], 0.0);
        assert!((s.drifts()[1] - 3.6).abs() < 1e-12);
        assert_eq!(s.rel_variances(), &[1.0, 1.0]);

        let spec = BanditSpec::from_slices(&[5.0, 5.0], &[2.0, 2.0], 100).unwrap();
        let s = to_scaled(&spec, 5.0, &cfg).unwrap();
        assert_eq!(s.drifts(), &[0.0, 0.0]);
        assert_eq!(s.rel_variances(), &[1.0, 1.0]);

        let spec = BanditSpec::from_slices(&[0.0, 1.0], &[4.0, 1.0], 4).unwrap();
        let s = to_scaled(&spec, 0.0, &cfg).unwrap();
        assert_eq!(s.drifts(), &[0.0, 1.0]);
        assert_eq!(s.rel_variances(), &[1.0, 0.25]);
    }

    #[test]
    fn to_scaled_needs_positive_variance() {
        let spec = BanditSpec::from_slices(&[0.0, 1.0], &[0.0, 0.0], 4).unwrap();
        assert!(matches!(
            to_scaled(&spec, 0.0, &UcbConfig::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn scaled_index_examples() {
        assert_eq!(scaled_ucb_index(0.3, 0.3, 0.3, 1.0, 1.0).unwrap(), 1.0);
        let u = scaled_ucb_index(0.1, 0.2, 0.5, 1.0, 1.0).unwrap();
        assert!((u - 2.640_433_054_167_024).abs() < 1e-12, "{u}");
        assert!((scaled_ucb_index(-0.4, 0.5, 1.0, 0.0, 1.0).unwrap() + 0.8).abs() < 1e-15);
        assert!(scaled_ucb_index(0.0, 0.5, 0.4, 1.0, 1.0).is_err());
    }

    #[test]
    fn symmetric_state_goes_to_second_arm() {
        let sys = system(&[0.0, 0.0], &[1.0, 1.0]);
        let state = SdeState {
            t: 0.4,
            usage: vec![0.2, 0.2],
            rewards: vec![0.05, 0.05],
        };
        assert_eq!(indicator(&state, &sys), 1);
        assert_eq!(heaviside_indicators(&state, &sys), vec![0, 1]);
    }

    #[test]
    fn heaviside_form_diverges_only_on_leading_ties() {
        let sys = system(&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]);
        let state = SdeState {
            t: 0.9,
            usage: vec![0.3, 0.3, 0.3],
            rewards: vec![0.6, 0.6, 0.3],
        };
        assert_eq!(indicator(&state, &sys), 1);
        assert_eq!(heaviside_indicators(&state, &sys), vec![0, 0, 1]);
    }

    #[test]
    fn em_step_example() {
        let cfg = SdeConfig::new(system(&[0.0, 1.0], &[1.0, 1.0]), 1e-3).unwrap();
        let mut state = SdeState {
            t: 0.5,
            usage: vec![0.3, 0.2],
            rewards: vec![0.3, 0.1],
        };
        assert_eq!(em_step_with_noise(&mut state, &cfg, 0.0).unwrap(), 1);
        assert_eq!(state.rewards, vec![0.3, 0.1 + 1e-3]);
        assert_eq!(state.usage, vec![0.3, 0.2 + 1e-3]);
        assert!((state.t - 0.501).abs() < 1e-15);
        assert!((state.rewards[1] - 0.101).abs() < 1e-15);
    }

    #[test]
    fn em_step_refuses_to_overrun_horizon() {
        let cfg = SdeConfig::new(system(&[0.0, 1.0], &[1.0, 1.0]), 1e-2).unwrap();
        let mut state = SdeState {
            t: 0.999,
            usage: vec![0.5, 0.499],
            rewards: vec![0.0, 0.0],
        };
        assert!(matches!(
            em_step_with_noise(&mut state, &cfg, 0.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn em_init_examples() {
        let cfg = SdeConfig::new(system(&[0.0, 3.6], &[0.0, 0.0]), 1e-3).unwrap();
        let s = em_init(&cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(s.t, 0.002);
        assert_eq!(s.usage, vec![0.001, 0.001]);
        assert_eq!(s.rewards, vec![0.0, 3.6 * 1e-3]);

        let cfg = SdeConfig::new(system(&[0.5, -2.0], &[1.0, 0.3]), 1e-3).unwrap();
        let s = em_init_with_noise(&cfg, &[0.0, 0.0]);
        assert_eq!(s.rewards, vec![0.5 * 1e-3, -2.0 * 1e-3]);

        let cfg = SdeConfig::new(system(&[0.0; 3], &[1.0; 3]), 0.01).unwrap();
        let s = em_init(&cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(s.t, 0.03);
        assert!((s.usage.iter().sum::<f64>() - s.t).abs() < 1e-15);
    }

    #[test]
    fn sde_config_validation() {
        assert!(SdeConfig::new(system(&[0.0, 1.0], &[1.0, 1.0]), 0.5).is_err());
        assert!(SdeConfig::new(system(&[0.0, 1.0], &[1.0, 1.0]), 0.0).is_err());
        assert!(ScaledSystem::new(vec![0.0, 1.0], vec![1.0, 1.5], 1.0).is_err());
        assert!(ScaledSystem::new(vec![0.0], vec![1.0], 1.0).is_err());
        let cfg = SdeConfig::new(system(&[0.0, 1.0], &[1.0, 1.0]), 1e-3).unwrap();
        assert_eq!(cfg.free_steps(), 998);
        let cfg = SdeConfig::new(system(&[0.0, 1.0], &[1.0, 1.0]), 5e-4).unwrap();
        assert_eq!(cfg.free_steps(), 1998);
    }

    #[test]
    fn zero_diffusion_integration() {
        let cfg = SdeConfig::new(system(&[0.0, 1.0], &[0.0, 0.0]), 1e-3).unwrap();
        let r = integrate(&cfg, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(r.final_usage[0], 0.001);
        assert!((r.final_usage[1] - 0.999).abs() < 1e-12);
        assert!((r.normalized_regret - 0.001).abs() < 1e-15);
    }

    #[test]
    fn equal_drifts_have_zero_regret() {
        let cfg = SdeConfig::new(system(&[0.0, 0.0], &[1.0, 0.4]), 1e-3).unwrap();
        for seed in 0..5 {
            let r = integrate(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(r.normalized_regret, 0.0);
        }
    }
}
