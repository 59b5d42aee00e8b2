//! `eig`: spectra of a Λ vapor with a standing-wave coupling field.

mod commands;
mod output;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use eig_core::ScenarioConfig;

use crate::output::Table;

#[derive(Parser)]
#[command(name = "eig", version, about = "Standing-wave EIT reflection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML); the built-in canonical scenario when absent
    #[arg(long, global = true, value_name = "PATH")]
    scenario: Option<PathBuf>,

    /// Output file; standard output when absent
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Atoms at rest: skip the velocity average
    #[arg(long, global = true)]
    no_doppler: bool,

    /// Ignore the cell-window loss
    #[arg(long, global = true)]
    no_window_loss: bool,

    /// Fixed harmonic truncation instead of the automatic one
    #[arg(long, global = true, value_name = "INT")]
    nmax: Option<usize>,

    /// Average on a fixed Gauss-Hermite grid with this many nodes
    #[arg(long, global = true, value_name = "INT")]
    velocity_nodes: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Susceptibility harmonics and refractive index versus probe detuning
    Chi,
    /// Reflection efficiency spectrum for each coupling detuning
    Reflect,
    /// Phase mismatch versus probe detuning for each coupling detuning
    Mismatch,
    /// Probe phase shift versus two-photon detuning
    Phase,
    /// Peak reflection versus coupling detuning for each density
    Scan,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Chi => "chi",
            Command::Reflect => "reflect",
            Command::Mismatch => "mismatch",
            Command::Phase => "phase",
            Command::Scan => "scan",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Core(#[from] eig_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
        }
    }
}

fn io_error(path: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

fn resolve_config(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let mut config = match &cli.scenario {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(io_error(path.display().to_string()))?;
            ScenarioConfig::from_toml_str(&text)?
        }
        None => ScenarioConfig::canonical(),
    };
    let numerics = &mut config.numerics;
    if cli.no_doppler {
        numerics.doppler = false;
    }
    if cli.no_window_loss {
        numerics.window_loss_enabled = false;
    }
    if let Some(n) = cli.nmax {
        numerics.n_max = Some(n);
    }
    if let Some(nodes) = cli.velocity_nodes {
        numerics.velocity_nodes = nodes;
        numerics.velocity_scheme = eig_core::VelocityScheme::GaussHermite;
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = resolve_config(cli)?;
    let table: Table = commands::run(cli.command, &config)?;
    let rendered = match cli.format {
        Format::Csv => table.to_csv(cli.command.name(), &config),
        Format::Json => table.to_json(cli.command.name(), &config),
    };
    match &cli.out {
        Some(path) => fs::write(path, rendered).map_err(io_error(path.display().to_string())),
        None => io::stdout().lock().write_all(rendered.as_bytes()).map_err(io_error("<stdout>")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eig: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
