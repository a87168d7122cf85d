use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use listlab::{parse_config, run, Experiment, PartialConfig};

/// Runs one experiment and writes its rows as CSV.
#[derive(Debug, Parser)]
#[command(name = "listlab", version, allow_negative_numbers = true)]
struct Cli {
    experiment: Option<Experiment>,
    #[arg(long)]
    n: Option<i64>,
    /// Transmit power.
    #[arg(long = "P")]
    power: Option<f64>,
    /// Adversary power.
    #[arg(long = "N")]
    noise: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<i64>,
    /// Flat TOML file with any of the settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<i64>,
    #[arg(long)]
    budget: Option<i64>,
    /// Any other setting, e.g. `--set omega=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_BUDGET: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let mut flags = PartialConfig {
        experiment: cli.experiment,
        n: cli.n,
        power: cli.power,
        noise: cli.noise,
        delta: cli.delta,
        seed: cli.seed,
        trials: cli.trials,
        budget: cli.budget,
        workers: cli.workers,
        out: cli.out.map(|p| p.display().to_string()),
        ..Default::default()
    };
    for s in &cli.set {
        match PartialConfig::from_assignment(s) {
            Ok(p) => flags = flags.overlay(p),
            Err(e) => {
                eprintln!("config error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }
    let cfg = match parse_config(cli.config.as_deref(), flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    let output = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("experiment rejected the configuration: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let bytes = output.to_csv_bytes();
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &bytes).map(|()| print!("{}", output.summary())),
        None => std::io::stdout()
            .write_all(&bytes)
            .map(|()| eprint!("{}", output.summary())),
    };
    if let Err(e) = written {
        eprintln!("cannot write output: {e}");
        return ExitCode::FAILURE;
    }
    if output.budget_exceeded() {
        eprintln!("budget exhausted in at least one trial; output is partial");
        return ExitCode::from(EXIT_BUDGET);
    }
    ExitCode::SUCCESS
}
