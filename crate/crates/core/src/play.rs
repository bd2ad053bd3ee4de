//! Fictitious play: every player moves a fraction of the way toward their
//! current best response, all using time-`t` observations.
//!
//! Greedy players respond to their exact clearance factor. Each vigilante
//! inverts her own throughput into a greedy-rate estimate as if there were a
//! single greedy player and responds to that belief.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::best_response::{beta_a, greedy_response};
use crate::channel::{rng_from_seed, simulate_counts};
use crate::error::{Error, Result};
use crate::model::{clearance, estimate_g, phi_multi, GameConfig, StrategyProfile};
use crate::trajectory::{diameter, Trajectory, Verdict};

/// Consecutive sub-tolerance steps required to declare convergence.
pub const SETTLE_STEPS: usize = 10;

/// How vigilantes measure their own throughput.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observation {
    /// Analytic throughput of the current profile.
    Exact,
    /// Success fraction over `slots` simulated channel slots per step.
    Sampled { slots: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayParams {
    pub epsilon_g: f64,
    pub epsilon_a: f64,
    pub t_max: usize,
    /// Starting profile; the fair profile when absent.
    pub init: Option<StrategyProfile>,
    pub conv_tol: f64,
    /// Length of the trailing windows compared by the oscillation detector.
    pub window: usize,
    pub observation: Observation,
}

impl Default for PlayParams {
    fn default() -> Self {
        Self {
            epsilon_g: 0.1,
            epsilon_a: 0.1,
            t_max: 5000,
            init: None,
            conv_tol: 1e-10,
            window: 200,
            observation: Observation::Exact,
        }
    }
}

impl PlayParams {
    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon_g = eps;
        self.epsilon_a = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, eps) in [("epsilon_g", self.epsilon_g), ("epsilon_a", self.epsilon_a)] {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::InvalidParams(format!("{name} = {eps} must lie in (0, 1]")));
            }
        }
        if self.t_max < 1 {
            return Err(Error::InvalidParams("t_max must be at least 1".into()));
        }
        if !(self.conv_tol > 0.0) {
            return Err(Error::InvalidParams("conv_tol must be positive".into()));
        }
        if self.window < 2 {
            return Err(Error::InvalidParams("window must be at least 2".into()));
        }
        if let Observation::Sampled { slots: 0, .. } = self.observation {
            return Err(Error::InvalidParams("sampled observation needs at least one slot".into()));
        }
        Ok(())
    }
}

/// Each vigilante's greedy-rate estimate from her exact throughput.
pub fn exact_estimates(profile: &StrategyProfile, config: &GameConfig) -> Result<Vec<f64>> {
    (0..profile.vigilante.len())
        .map(|j| estimate_g(phi_multi(profile, config, j)?, profile.vigilante[j], config))
        .collect()
}

fn sampled_estimates(
    profile: &StrategyProfile,
    config: &GameConfig,
    slots: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let counts = simulate_counts(&profile.access_vector(config), slots, rng)?;
    let m = config.n_greedy();
    (0..profile.vigilante.len())
        .map(|j| estimate_g(counts.rate(m + j), profile.vigilante[j], config))
        .collect()
}

/// One simultaneous update with exact observation.
pub fn step(profile: &StrategyProfile, config: &GameConfig, params: &PlayParams) -> Result<StrategyProfile> {
    let estimates = exact_estimates(profile, config)?;
    step_with_estimates(profile, config, params, &estimates)
}

/// One simultaneous update given each vigilante's greedy-rate estimate.
pub fn step_with_estimates(
    profile: &StrategyProfile,
    config: &GameConfig,
    params: &PlayParams,
    estimates: &[f64],
) -> Result<StrategyProfile> {
    let mut greedy = Vec::with_capacity(profile.greedy.len());
    for (i, (&g, &lambda)) in profile.greedy.iter().zip(config.lambda()).enumerate() {
        let x = clearance(profile, config, i)?;
        let target = greedy_response(x, lambda, config)?.value;
        greedy.push(g + params.epsilon_g * (target - g));
    }
    let mut vigilante = Vec::with_capacity(profile.vigilante.len());
    for ((&a, &rho), &g_hat) in profile.vigilante.iter().zip(config.rho()).zip(estimates) {
        let target = beta_a(g_hat, rho, config)?;
        vigilante.push(a + params.epsilon_a * (target - a));
    }
    Ok(StrategyProfile { greedy, vigilante })
}

/// Iterates [`step`] until convergence, a stable oscillation band, or `t_max`.
pub fn run(config: &GameConfig, params: &PlayParams) -> Result<Trajectory> {
    params.validate()?;
    let init = params.init.clone().unwrap_or_else(|| StrategyProfile::fair(config));
    init.check_shape(config)?;

    let mut rng = match params.observation {
        Observation::Sampled { seed, .. } => Some(rng_from_seed(seed)),
        Observation::Exact => None,
    };
    let w = params.window;
    let mut states = vec![init];
    let mut settled = 0;
    for t in 1..=params.t_max {
        let cur = states.last().unwrap();
        let estimates = match (&params.observation, rng.as_mut()) {
            (Observation::Sampled { slots, .. }, Some(rng)) => {
                sampled_estimates(cur, config, *slots, rng)?
            }
            _ => exact_estimates(cur, config)?,
        };
        let next = step_with_estimates(cur, config, params, &estimates)?;
        let change = next.max_abs_diff(cur);
        states.push(next);

        settled = if change < params.conv_tol { settled + 1 } else { 0 };
        if settled >= SETTLE_STEPS {
            let point = states.last().unwrap().clone();
            return Ok(Trajectory { time_step: 1.0, states, verdict: Verdict::Converged { point } });
        }

        if t % w == 0 && t >= 3 * w {
            let n = states.len();
            let d: Vec<f64> = (0..3).map(|k| diameter(&states[n - (k + 1) * w..n - k * w])).collect();
            let hi = d.iter().copied().fold(0.0, f64::max);
            let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
            if lo > 10.0 * params.conv_tol && hi - lo <= 0.1 * hi {
                return Ok(Trajectory {
                    time_step: 1.0,
                    states,
                    verdict: Verdict::Oscillating { amplitude: d[0], window: w },
                });
            }
        }
    }
    Ok(Trajectory { time_step: 1.0, states, verdict: Verdict::MaxedOut })
}
