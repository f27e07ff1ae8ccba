use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pns_core::config::{parse_config, ConfigError, OutputFormat, RunConfig};
use pns_core::report;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "pns", about = "Photon-number-splitting attack analytics and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the configured seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the configured number of pulses
    #[arg(long, global = true)]
    trials: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,

    /// Write the selected format here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form leak analytics for the configured source and loss
    Analytic,
    /// Monte Carlo session for the configured attack
    Simulate,
    /// The four published leak figures with Monte Carlo confirmation
    #[command(name = "reproduce-paper")]
    Reproduce,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config <path> is required for this command".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        config.trials = trials;
    }
    config.validate()?;
    Ok(config)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn emit(cli: &Cli, contents: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => write(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let runtime = |e: pns_core::PnsError| Failure::Runtime(e.to_string());
    match cli.command {
        Command::Analytic => {
            let config = load(cli)?;
            let rows = report::analytic_rows(&config.scheme()?, config.channel()?).map_err(runtime)?;
            let text = match cli.format {
                OutputFormat::Json => report::to_rounded_json(&rows) + "\n",
                OutputFormat::Csv => report::analytic_csv(&rows),
                OutputFormat::Table => report::analytic_table(&rows),
            };
            emit(cli, &text)
        }
        Command::Simulate => {
            let config = load(cli)?;
            let session = config.session_config()?;
            let result = pns_core::run_session(&session).map_err(runtime)?;
            if let Some(path) = &config.output.json {
                write(path, &(report::session_json(&result) + "\n"))?;
            }
            if let Some(path) = &config.output.csv {
                write(path, &report::session_csv(&result))?;
            }
            let text = match cli.format {
                OutputFormat::Json => report::session_json(&result) + "\n",
                OutputFormat::Csv => report::session_csv(&result),
                OutputFormat::Table => report::session_table(&result),
            };
            emit(cli, &text)
        }
        Command::Reproduce => {
            let pulses = cli.trials.unwrap_or(pns_core::config::DEFAULT_TRIALS);
            let rows = report::reproduce_published(pulses, cli.seed.unwrap_or(0)).map_err(runtime)?;
            let text = match cli.format {
                OutputFormat::Json => report::to_rounded_json(&rows) + "\n",
                OutputFormat::Csv => report::reproduction_csv(&rows),
                OutputFormat::Table => report::reproduction_table(&rows),
            };
            emit(cli, &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
