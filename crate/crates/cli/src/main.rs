//! `chipgyro`: guide, transfer-function, sensitivity, stability and noise
//! tables for a guided-atom Sagnac gyroscope.

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::config::{load, resolve_config_path, CONFIG_DIR_ENV};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "chipgyro",
    version,
    about = "Atom-chip Sagnac gyroscope design tables"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Dot-path override, e.g. `interferometer.atom_number=1e5`. Repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Directory searched for relative config names and the default `chipgyro.toml`.
    #[arg(long, global = true, env = CONFIG_DIR_ENV)]
    config_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Guide minimum, trap frequency, depth and potential map.
    Guide,
    /// |H(f)| of the two-pulse interferometer on a log grid.
    Transfer,
    /// Shot-noise rotation sensitivity against interrogation time.
    Sensitivity,
    /// Allan deviation curve.
    Allan,
    /// Minimum interrogation time against launch speed for a target stability.
    Mission,
    /// Output-phase noise budget of the configured PSD.
    Noise,
    /// Reference rotation rates.
    Rates,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Guide => "guide",
            Command::Transfer => "transfer",
            Command::Sensitivity => "sensitivity",
            Command::Allan => "allan",
            Command::Mission => "mission",
            Command::Noise => "noise",
            Command::Rates => "rates",
        }
    }
}

fn run(cli: &Cli) -> CliResult<commands::Report> {
    let path = resolve_config_path(cli.config.as_deref(), cli.config_dir.as_deref());
    let loaded = load(path.as_deref(), &cli.overrides)?;
    let out: &Path = &cli.out;
    match cli.command {
        Command::Guide => commands::guide(&loaded, out),
        Command::Transfer => commands::transfer(&loaded, out),
        Command::Sensitivity => commands::sensitivity(&loaded, out),
        Command::Allan => commands::allan(&loaded, out),
        Command::Mission => commands::mission(&loaded, out),
        Command::Noise => commands::noise(&loaded, out),
        Command::Rates => commands::rates(&loaded, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();
    match run(&cli) {
        Ok(report) => {
            let line = json!({
                "command": command,
                "status": "ok",
                "outputs": report.outputs,
                "summary": report.summary,
            });
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error: {e}");
            println!(
                "{}",
                json!({ "command": command, "status": "error", "exit_code": code, "message": e.to_string() })
            );
            ExitCode::from(code as u8)
        }
    }
}
