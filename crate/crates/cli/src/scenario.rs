//! Scenario files: TOML with `[game]`, `[play]`, `[flow]`, `[channel]`,
//! `[best_response]` and `[output]` sections. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use vigilance_core::{GameConfig, Observation, Phi0Convention, PlayParams, StrategyProfile};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    BestResponse,
    Play,
    Flow,
    Nash,
    Channel,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::BestResponse => "best-response",
            Mode::Play => "play",
            Mode::Flow => "flow",
            Mode::Nash => "nash",
            Mode::Channel => "channel",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub game: GameSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub play: Option<PlaySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_response: Option<BestResponseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_greedy: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_vigilante: Option<usize>,
    pub lambda: Vec<f64>,
    pub rho: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi0_exponent: Option<Phi0Convention>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationKind {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conv_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_g: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationKind>,
    /// Channel slots simulated per step under sampled observation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation_slots: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Streamline starting points as `[g, a]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Simulated greedy rates; fair when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<f64>>,
    /// Simulated vigilante rates; fair when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BestResponseSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SLOTS: u64 = 1_000_000;
pub const DEFAULT_OBSERVATION_SLOTS: u64 = 10_000;
pub const DEFAULT_DT: f64 = 0.1;
pub const DEFAULT_STEPS: usize = 2000;
pub const DEFAULT_GRID: usize = 21;
pub const DEFAULT_CURVE_POINTS: usize = 1001;

/// Flow integration settings after defaults and validation.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    pub dt: f64,
    pub steps: usize,
    pub grid: usize,
    pub seeds: Vec<(f64, f64)>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    /// Expands single-entry weight lists to the declared player counts.
    fn weights(list: &[f64], count: Option<usize>, field: &str, count_field: &str) -> Result<Vec<f64>> {
        match count {
            None => Ok(list.to_vec()),
            Some(k) if list.len() == k => Ok(list.to_vec()),
            Some(k) if list.len() == 1 => Ok(vec![list[0]; k]),
            Some(k) => Err(CliError::Config(format!(
                "game.{field}: {} entries but game.{count_field} = {k}",
                list.len()
            ))),
        }
    }

    pub fn game_config(&self) -> Result<GameConfig> {
        let g = &self.game;
        let lambda = Self::weights(&g.lambda, g.m_greedy, "lambda", "m_greedy")?;
        let rho = Self::weights(&g.rho, g.v_vigilante, "rho", "v_vigilante")?;
        GameConfig::new(g.n, lambda, rho, g.phi0_exponent.unwrap_or_default())
            .map_err(|e| CliError::from_core("game", e))
    }

    /// Seed from `--seed`, else `[channel] seed`, else zero.
    pub fn seed(&self, cli_seed: Option<u64>) -> u64 {
        cli_seed
            .or_else(|| self.channel.as_ref().and_then(|c| c.seed))
            .unwrap_or(DEFAULT_SEED)
    }

    fn profile(g: Option<&Vec<f64>>, a: Option<&Vec<f64>>, config: &GameConfig, section: &str) -> Result<Option<StrategyProfile>> {
        let fair = StrategyProfile::fair(config);
        match (g, a) {
            (None, None) => Ok(None),
            (g, a) => {
                let greedy = g.cloned().unwrap_or(fair.greedy);
                let vigilante = a.cloned().unwrap_or(fair.vigilante);
                let p = StrategyProfile::new(greedy, vigilante).map_err(|e| CliError::from_core(section, e))?;
                p.check_shape(config).map_err(|e| CliError::from_core(section, e))?;
                Ok(Some(p))
            }
        }
    }

    pub fn play_params(&self, config: &GameConfig, cli_seed: Option<u64>) -> Result<PlayParams> {
        let d = PlayParams::default();
        let s = self.play.clone().unwrap_or_default();
        let observation = match s.observation.unwrap_or(ObservationKind::Exact) {
            ObservationKind::Exact => Observation::Exact,
            ObservationKind::Sampled => Observation::Sampled {
                slots: s.observation_slots.unwrap_or(DEFAULT_OBSERVATION_SLOTS),
                seed: self.seed(cli_seed),
            },
        };
        let params = PlayParams {
            epsilon_g: s.epsilon_g.unwrap_or(d.epsilon_g),
            epsilon_a: s.epsilon_a.unwrap_or(d.epsilon_a),
            t_max: s.t_max.unwrap_or(d.t_max),
            init: Self::profile(s.init_g.as_ref(), s.init_a.as_ref(), config, "play.init_g/init_a")?,
            conv_tol: s.conv_tol.unwrap_or(d.conv_tol),
            window: s.window.unwrap_or(d.window),
            observation,
        };
        params.validate().map_err(|e| CliError::from_core("play", e))?;
        Ok(params)
    }

    pub fn flow_params(&self) -> Result<FlowParams> {
        let s = self.flow.clone().unwrap_or_default();
        let dt = s.dt.unwrap_or(DEFAULT_DT);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CliError::Config(format!("flow.dt = {dt} must be positive")));
        }
        let steps = s.steps.unwrap_or(DEFAULT_STEPS);
        if steps == 0 {
            return Err(CliError::Config("flow.steps must be at least 1".into()));
        }
        let grid = s.grid.unwrap_or(DEFAULT_GRID);
        if grid < 2 {
            return Err(CliError::Config(format!("flow.grid = {grid} must be at least 2")));
        }
        let seeds: Vec<(f64, f64)> = match s.seeds {
            Some(list) => list.into_iter().map(|[g, a]| (g, a)).collect(),
            None => (1..=4)
                .flat_map(|i| (1..=4).map(move |j| (0.2 * i as f64, 0.2 * j as f64)))
                .collect(),
        };
        if let Some(bad) = seeds.iter().find(|(g, a)| !((0.0..=1.0).contains(g) && (0.0..=1.0).contains(a))) {
            return Err(CliError::Config(format!("flow.seeds: {bad:?} lies outside [0, 1]²")));
        }
        Ok(FlowParams { dt, steps, grid, seeds })
    }

    /// Slot count, seed and simulated profile for the channel command.
    pub fn channel_params(&self, config: &GameConfig, cli_seed: Option<u64>) -> Result<(usize, u64, StrategyProfile)> {
        let s = self.channel.clone().unwrap_or_default();
        let slots = s.slots.unwrap_or(DEFAULT_SLOTS);
        if slots == 0 {
            return Err(CliError::Config("channel.slots must be at least 1".into()));
        }
        let slots = usize::try_from(slots).map_err(|_| CliError::Config("channel.slots is too large".into()))?;
        let profile = Self::profile(s.g.as_ref(), s.a.as_ref(), config, "channel.g/a")?
            .unwrap_or_else(|| StrategyProfile::fair(config));
        Ok((slots, self.seed(cli_seed), profile))
    }

    pub fn curve_points(&self) -> Result<usize> {
        let points = self.best_response.as_ref().and_then(|b| b.points).unwrap_or(DEFAULT_CURVE_POINTS);
        if points < 2 {
            return Err(CliError::Config(format!("best_response.points = {points} must be at least 2")));
        }
        Ok(points)
    }

    /// `--out` (or `VG_OUT_DIR`, folded in by the argument parser), else
    /// `[output] dir`, else `out`.
    pub fn output_dir(&self, cli_out: Option<&Path>) -> PathBuf {
        cli_out
            .map(Path::to_path_buf)
            .or_else(|| self.output.as_ref().and_then(|o| o.dir.clone()))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}
