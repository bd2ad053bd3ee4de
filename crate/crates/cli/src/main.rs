use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vigilance_cli::{commands, Mode, Scenario};

/// Greedy/vigilante shared-resource game experiments.
#[derive(Debug, Parser)]
#[command(name = "vigilance-games", version)]
struct Cli {
    /// Analysis to run.
    #[arg(value_enum)]
    command: Mode,

    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Output directory; overrides the scenario's `[output] dir`.
    #[arg(long, env = "VG_OUT_DIR")]
    out: Option<PathBuf>,

    /// Seed for channel simulation and sampled observation.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let result = Scenario::load(&cli.config).and_then(|scenario| {
        let dir = scenario.output_dir(cli.out.as_deref());
        commands::dispatch(cli.command, &scenario, &dir, cli.seed)
    });
    match result {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("vigilance-games: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
