use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vigilance_core::best_response::{sample_beta_a, sample_beta_g};
use vigilance_core::channel::{estimate_g_empirical, simulate};
use vigilance_core::equilibrium::{find_nash, NashReport};
use vigilance_core::flow::{find_fixed_points, phase_portrait};
use vigilance_core::play::run;
use vigilance_core::{GameConfig, StrategyProfile, Verdict};

use crate::error::{CliError, Result};
use crate::scenario::{Mode, Scenario};

/// Files written by one command, in the order they were written.
pub type Written = Vec<PathBuf>;

struct Out {
    dir: PathBuf,
    written: Written,
}

impl Out {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf).expect("writing to memory cannot fail");
        self.write(name, &buf)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes to JSON");
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

fn single_only(config: &GameConfig, mode: Mode) -> Result<()> {
    if config.is_single() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "game: `{}` needs exactly one greedy player and one vigilante",
            mode.as_str()
        )))
    }
}

#[derive(Serialize)]
struct BestResponseReport {
    lambda: f64,
    rho: f64,
    a_plus: Option<f64>,
    jump_size: Option<f64>,
    /// Whether the two curves cross, i.e. an equilibrium exists.
    intersects: bool,
    nash: NashReport,
}

#[derive(Serialize)]
struct PlayReport<'a> {
    #[serde(flatten)]
    verdict: &'a Verdict,
    steps: usize,
    last: &'a StrategyProfile,
    /// Mean over the final three detector windows.
    time_average: StrategyProfile,
    /// `[min, max]` per component over the same span, greedy first.
    band: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct ChannelReport {
    seed: u64,
    slots: usize,
    profile: StrategyProfile,
    /// Each vigilante's greedy-rate estimate from her measured throughput.
    estimates: Vec<Option<f64>>,
}

pub fn best_response(scenario: &Scenario, out_dir: &Path) -> Result<Written> {
    let config = scenario.game_config()?;
    single_only(&config, Mode::BestResponse)?;
    let points = scenario.curve_points()?;
    let (lambda, rho) = (config.lambda()[0], config.rho()[0]);
    let greedy = sample_beta_g(lambda, &config, points)?;
    let vigilante = sample_beta_a(rho, &config, points, true)?;
    let nash = find_nash(&config)?;

    let mut out = Out::new(out_dir)?;
    out.csv("beta_g.csv", |w| greedy.write_csv(w))?;
    out.csv("beta_a_inverse.csv", |w| vigilante.write_csv(w))?;
    out.json(
        "best_response.json",
        &BestResponseReport {
            lambda,
            rho,
            a_plus: greedy.a_plus,
            jump_size: greedy.jump_size,
            intersects: nash.exists,
            nash: nash.report(),
        },
    )?;
    Ok(out.written)
}

pub fn play(scenario: &Scenario, out_dir: &Path, seed: Option<u64>) -> Result<Written> {
    let config = scenario.game_config()?;
    let params = scenario.play_params(&config, seed)?;
    let tr = run(&config, &params)?;

    let mut csv = Vec::new();
    tr.write_csv(&config, &mut csv)?;
    let span = 3 * params.window;
    let mut out = Out::new(out_dir)?;
    out.write("trajectory.csv", &csv)?;
    out.json(
        "verdict.json",
        &PlayReport {
            verdict: &tr.verdict,
            steps: tr.states.len() - 1,
            last: tr.last(),
            time_average: tr.time_average(span),
            band: tr.band(span),
        },
    )?;
    Ok(out.written)
}

pub fn flow(scenario: &Scenario, out_dir: &Path) -> Result<Written> {
    let config = scenario.game_config()?;
    single_only(&config, Mode::Flow)?;
    let p = scenario.flow_params()?;
    let portrait = phase_portrait(p.grid, &config, &p.seeds, p.dt, p.steps)?;
    let fixed = find_fixed_points(&config)?;

    let mut out = Out::new(out_dir)?;
    out.csv("phase_portrait.csv", |w| portrait.write_field_csv(w))?;
    out.csv("streamlines.csv", |w| portrait.write_streamlines_csv(w))?;
    out.json("fixed_points.json", &fixed)?;
    Ok(out.written)
}

pub fn nash(scenario: &Scenario, out_dir: &Path) -> Result<Written> {
    let config = scenario.game_config()?;
    single_only(&config, Mode::Nash)?;
    let verdict = find_nash(&config)?;
    let mut out = Out::new(out_dir)?;
    out.json("nash.json", &verdict.report())?;
    Ok(out.written)
}

pub fn channel(scenario: &Scenario, out_dir: &Path, seed: Option<u64>) -> Result<Written> {
    let config = scenario.game_config()?;
    let (slots, seed, profile) = scenario.channel_params(&config, seed)?;
    let trace = simulate(&profile, &config, slots, seed)?;
    let estimates = (0..config.n_vigilante())
        .map(|j| estimate_g_empirical(&trace, j, &profile, &config).ok())
        .collect();

    let mut out = Out::new(out_dir)?;
    out.csv("channel_summary.csv", |w| trace.summary().write_csv(w))?;
    out.json("channel.json", &ChannelReport { seed, slots, profile, estimates })?;
    Ok(out.written)
}

/// Runs `mode` on `scenario`, writing into `out_dir`.
pub fn dispatch(mode: Mode, scenario: &Scenario, out_dir: &Path, seed: Option<u64>) -> Result<Written> {
    if let Some(declared) = scenario.mode {
        if declared != mode {
            return Err(CliError::Config(format!(
                "mode: scenario declares `{}` but the command is `{}`",
                declared.as_str(),
                mode.as_str()
            )));
        }
    }
    log::info!("running {} into {}", mode.as_str(), out_dir.display());
    match mode {
        Mode::BestResponse => best_response(scenario, out_dir),
        Mode::Play => play(scenario, out_dir, seed),
        Mode::Flow => flow(scenario, out_dir),
        Mode::Nash => nash(scenario, out_dir),
        Mode::Channel => channel(scenario, out_dir, seed),
    }
}
