use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kinswitch::config::{preset, ExperimentConfig, PRESETS};
use kinswitch::experiment::{default_output_root, run_experiment, OUTPUT_ROOT_ENV};
use kinswitch::Error;

#[derive(Parser)]
#[command(name = "kinswitch", version, about = "Label-switching wealth exchange experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its output bundle.
    Run {
        #[command(flatten)]
        source: Source,
        /// Dotted key override, e.g. `run.seed=7` or `model.lambda.1.1=5`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory; defaults to $KINSWITCH_OUTPUT_ROOT/<name>, or
        /// runs/<name> when that variable is unset.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in presets, or print one as TOML.
    Presets { name: Option<String> },
    /// Parse and check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "source_group")]
struct Source {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
}

fn load(source: &Source, overrides: &[String]) -> Result<ExperimentConfig, Error> {
    match (&source.config, &source.preset) {
        (Some(path), _) => ExperimentConfig::from_file(path, overrides),
        (None, Some(name)) => preset(name)?.with_overrides(overrides),
        (None, None) => unreachable!("clap requires one source"),
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            source,
            overrides,
            out,
        } => {
            let cfg = load(&source, &overrides)?;
            let dir = out.unwrap_or_else(|| default_output_root().join(&cfg.name));
            let summary = run_experiment(&cfg, &dir)?;
            println!("wrote {}", dir.display());
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?
            );
        }
        Command::Presets { name: None } => {
            for name in PRESETS {
                println!("{name}");
            }
            eprintln!("output root: ${OUTPUT_ROOT_ENV} or ./runs");
        }
        Command::Presets { name: Some(name) } => print!("{}", preset(&name)?.to_toml()?),
        Command::Validate { config, overrides } => {
            let cfg = ExperimentConfig::from_file(&config, &overrides)?;
            println!("{}: ok ({:?} mode, {} labels)", config.display(), cfg.mode, cfg.model.lambda.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
