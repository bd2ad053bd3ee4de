use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::Result;
use crate::model::{phi_multi, theta_multi, GameConfig, StrategyProfile};

/// How a trajectory ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Converged { point: StrategyProfile },
    /// The trailing windows keep a stable nonzero max-norm diameter.
    Oscillating { amplitude: f64, window: usize },
    /// A greedy player is pinned at `g = 1`.
    DeadlockBound { point: StrategyProfile },
    MaxedOut,
}

impl Verdict {
    pub fn is_converged(&self) -> bool {
        matches!(self, Verdict::Converged { .. })
    }

    pub fn is_oscillating(&self) -> bool {
        matches!(self, Verdict::Oscillating { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Converged { .. } => "converged",
            Verdict::Oscillating { .. } => "oscillating",
            Verdict::DeadlockBound { .. } => "deadlock_bound",
            Verdict::MaxedOut => "maxed_out",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Time between consecutive states (1 for discrete play).
    pub time_step: f64,
    pub states: Vec<StrategyProfile>,
    pub verdict: Verdict,
}

impl Trajectory {
    pub fn last(&self) -> &StrategyProfile {
        self.states.last().expect("trajectory holds at least its initial state")
    }

    /// Component-wise mean of the last `count` states.
    pub fn time_average(&self, count: usize) -> StrategyProfile {
        let tail = &self.states[self.states.len().saturating_sub(count)..];
        let k = tail.len() as f64;
        let mean = |pick: fn(&StrategyProfile) -> &Vec<f64>| -> Vec<f64> {
            let width = pick(&tail[0]).len();
            (0..width).map(|i| tail.iter().map(|s| pick(s)[i]).sum::<f64>() / k).collect()
        };
        StrategyProfile { greedy: mean(|s| &s.greedy), vigilante: mean(|s| &s.vigilante) }
    }

    /// Per-component `(min, max)` over the last `count` states, greedy first.
    pub fn band(&self, count: usize) -> Vec<(f64, f64)> {
        let tail = &self.states[self.states.len().saturating_sub(count)..];
        let width = tail[0].components().count();
        (0..width)
            .map(|i| {
                tail.iter()
                    .map(|s| s.components().nth(i).unwrap())
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
            })
            .collect()
    }

    /// Writes `t,g_1..g_M,a_1..a_V,theta_1..theta_M,phi_1..phi_V` rows.
    pub fn write_csv<W: Write>(&self, config: &GameConfig, mut w: W) -> Result<()> {
        let (m, v) = (config.n_greedy(), config.n_vigilante());
        let mut header = vec!["t".to_string()];
        header.extend((1..=m).map(|i| format!("g_{i}")));
        header.extend((1..=v).map(|j| format!("a_{j}")));
        header.extend((1..=m).map(|i| format!("theta_{i}")));
        header.extend((1..=v).map(|j| format!("phi_{j}")));
        writeln!(w, "{}", header.join(","))?;
        for (t, s) in self.states.iter().enumerate() {
            let mut row = vec![(t as f64 * self.time_step).to_string()];
            row.extend(s.components().map(|x| x.to_string()));
            for i in 0..m {
                row.push(theta_multi(s, config, i)?.to_string());
            }
            for j in 0..v {
                row.push(phi_multi(s, config, j)?.to_string());
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Max-norm diameter of a run of states.
pub(crate) fn diameter(states: &[StrategyProfile]) -> f64 {
    let width = states[0].components().count();
    (0..width)
        .map(|i| {
            let (lo, hi) = states
                .iter()
                .map(|s| s.components().nth(i).unwrap())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            hi - lo
        })
        .fold(0.0, f64::max)
}
