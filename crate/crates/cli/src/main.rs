use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mestim_cli::output::run_root;
use mestim_cli::{run, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "mestim", version, about = "Gaussian and bootstrap approximations of grid M-estimators")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// TOML experiment configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set run.replications=500`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Master seed (overrides `run.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory root (overrides MESTIM_RUN_ROOT).
    #[arg(long, global = true)]
    run_root: Option<PathBuf>,
    /// Exit with status 2 when any check of the command fails.
    #[arg(long = "assert", global = true)]
    assert_checks: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Estimator law vs Gaussian counterpart along the sample-size ladder.
    Compare,
    /// Multiplier bootstrap vs Gaussian counterpart over independent datasets.
    Bootstrap,
    /// Coverage of the sample-splitting test.
    Test,
    /// Schur-complement audit of a covariance matrix.
    Coherence,
    /// Convergence-rate calculator.
    Rates,
    /// Smooth-approximation, anti-concentration and closed-form checks.
    Verify,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let command = match cli.command {
        Sub::Compare => Command::Compare,
        Sub::Bootstrap => Command::Bootstrap,
        Sub::Test => Command::Test,
        Sub::Coherence => Command::Coherence,
        Sub::Rates => Command::Rates,
        Sub::Verify => Command::Verify,
    };
    let text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("config error: cannot read {}: {e}", path.display());
                return ExitCode::from(1);
            }
        },
        None => String::new(),
    };
    let outcome = ExperimentConfig::from_toml(&text, &cli.overrides, cli.seed)
        .and_then(|cfg| run(command, &cfg, &cli.run_root.clone().unwrap_or_else(run_root)));
    match outcome {
        Ok(summary) => {
            println!("{}", summary.dir);
            for c in &summary.checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if cli.assert_checks && !summary.all_pass() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
