//! `ramsey`: runs single evaluations and sweeps from a scenario file and
//! writes CSV datasets plus a run manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{ConfigError, ScenarioConfig};

#[derive(Debug, Parser)]
#[command(name = "ramsey", version, about = "Ramsey visibility of quenched ion Coulomb crystals")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output.dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps (0 picks one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Visibility and overlap on a time grid at one operating point.
    Visibility,
    /// Short-time curvature over a (g, delta) sweep.
    Curvature,
    /// Structures of both internal states over a (g, delta) sweep, plus g_c(delta).
    PhaseDiagram,
    /// Fourier spectra of the visibility and its logarithm at one point.
    Spectrum,
    /// Log spectra over a g sweep at fixed delta.
    SpectrumMap,
    /// First revival time over a g sweep for several ion numbers.
    Revivals,
    /// Equilibria and normal-mode frequencies at one point.
    Modes,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Visibility => "visibility",
            Command::Curvature => "curvature",
            Command::PhaseDiagram => "phase-diagram",
            Command::Spectrum => "spectrum",
            Command::SpectrumMap => "spectrum-map",
            Command::Revivals => "revivals",
            Command::Modes => "modes",
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numeric(ramsey_quench::Error),
    Io(io::Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

impl RunError {
    fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numeric(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Numeric(e) => write!(f, "numeric error: {e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

fn run(cli: &Cli) -> Result<(), RunError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| ConfigError::new("--config", "a scenario file is required"))?;
    let cfg = ScenarioConfig::load(path)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .ok_or_else(|| ConfigError::new("--out", "pass --out or set output.dir"))?;
    if cli.threads > 0 {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    std::fs::create_dir_all(&out)?;
    let run = commands::Run {
        command: cli.command.name(),
        config: &cfg,
        out: &out,
        threads: cli.threads,
    };
    let manifest = match cli.command {
        Command::Visibility => commands::visibility(&run),
        Command::Curvature => commands::curvature(&run),
        Command::PhaseDiagram => commands::phase_diagram(&run),
        Command::Spectrum => commands::spectrum(&run),
        Command::SpectrumMap => commands::spectrum_map(&run),
        Command::Revivals => commands::revivals(&run),
        Command::Modes => commands::modes(&run),
    }?;
    for e in &manifest.errors {
        eprintln!("warning: point {} failed: {}", e.index, e.message);
    }
    output::write_manifest(&out, &manifest)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ramsey: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
