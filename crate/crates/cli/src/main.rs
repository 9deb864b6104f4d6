//! Batch driver for the doublon engine: configuration, experiment
//! execution, parameter sweeps, and figure-data emission.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{CliError, Conventions};
use config::{parse_config, validate_config, RunKind};
use doublon_core::protocols::{ShapingConvention, TimeOriginConvention};
use manifest::{ConventionFlags, ManifestWriter};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConventionArg {
    /// Main-text constants: steeper pulse shaping, delay-aware receiver.
    Main,
    /// Supplement constants: gentler shaping, window symmetric about zero.
    Supplement,
}

#[derive(Parser)]
#[command(
    name = "doublon",
    version,
    about = "Chiral photon-pair emission engine: spectra, lattice runs, cascades, transfer protocols"
)]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; defaults to the available cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Published-constant conventions for the transfer pulses.
    #[arg(long, global = true)]
    convention: Option<ConventionArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the doublon band table (K, E_K, L_u, v_g) and channel data.
    Spectrum,
    /// Propagate a spontaneous-emission run on the full lattice.
    Emit,
    /// Run an analytic parameter sweep over the configured grid.
    Sweep,
    /// Integrate the cascaded master equation (optionally with a
    /// side-by-side lattice run).
    Cascade,
    /// Shaped-pulse entangled-state transfer between two pairs.
    Transfer,
    /// Sign-flip mirror protocol.
    Mirror,
    /// Parse and validate a configuration, reporting every error.
    Validate,
}

impl Command {
    fn expected_kind(&self) -> Option<RunKind> {
        match self {
            Command::Spectrum => Some(RunKind::Spectrum),
            Command::Emit => Some(RunKind::Emit),
            Command::Sweep => Some(RunKind::Sweep),
            Command::Cascade => Some(RunKind::Cascade),
            Command::Transfer => Some(RunKind::Transfer),
            Command::Mirror => Some(RunKind::Mirror),
            Command::Validate => None,
        }
    }
}

fn load_config(cli: &Cli) -> Result<config::RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config(vec!["--config <path> is required".into()]))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    let config = parse_config(&text).map_err(|e| CliError::Config(vec![format!("parse: {e}")]))?;
    validate_config(&config).map_err(CliError::Config)?;
    if let Some(kind) = cli.command.expected_kind() {
        if config.kind != kind {
            return Err(CliError::Config(vec![format!(
                "config kind '{}' does not match subcommand '{}'",
                config.kind.label(),
                kind.label()
            )]));
        }
    }
    Ok(config)
}

fn resolve_conventions(cli: &Cli) -> Conventions {
    match cli.convention {
        Some(ConventionArg::Main) => Conventions {
            shaping: ShapingConvention::MainText,
            time_origin: TimeOriginConvention::Main,
        },
        Some(ConventionArg::Supplement) => Conventions {
            shaping: ShapingConvention::Supplement,
            time_origin: TimeOriginConvention::Supplement,
        },
        // Defaults: the supplement shaping constant (releases the whole
        // excitation) with the delay-aware main-text time origin.
        None => Conventions {
            shaping: ShapingConvention::Supplement,
            time_origin: TimeOriginConvention::Main,
        },
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(cli)?;
    if matches!(cli.command, Command::Validate) {
        println!("configuration valid");
        print!("{}", commands::describe(&config));
        return Ok(());
    }
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .ok_or_else(|| {
            CliError::Config(vec!["no output directory (--out or output_dir)".into()])
        })?;
    let conventions = resolve_conventions(cli);
    let flags = ConventionFlags {
        branch: format!("{:?}", config.waveguide.branch).to_lowercase(),
        shaping: conventions.shaping.label().to_string(),
        time_origin: format!("{:?}", conventions.time_origin).to_lowercase(),
        units: "energies in units of the hopping J; times in 1/J".to_string(),
    };
    let mut manifest = ManifestWriter::begin(&out_dir, &config, flags)
        .map_err(|e| CliError::Runtime(format!("manifest: {e}")))?;
    let result = match cli.command {
        Command::Spectrum => commands::run_spectrum(&config, &mut manifest),
        Command::Emit => commands::run_emit(&config, &mut manifest),
        Command::Sweep => commands::run_sweep(&config, &mut manifest, cli.jobs),
        Command::Cascade => commands::run_cascade(&config, &mut manifest),
        Command::Transfer => commands::run_transfer_cmd(&config, &mut manifest, conventions),
        Command::Mirror => commands::run_mirror_cmd(&config, &mut manifest),
        Command::Validate => unreachable!(),
    };
    match &result {
        Ok(()) => manifest
            .finish()
            .map_err(|e| CliError::Runtime(format!("manifest: {e}")))?,
        Err(e) => {
            let _ = manifest.finish_failed(&e.to_string());
        }
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
