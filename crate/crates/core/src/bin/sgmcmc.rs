use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sgmcmc::harness::{run_experiment, Experiment, ExperimentConfig};
use sgmcmc::Error;

/// Stochastic-gradient thermostat experiments.
#[derive(Parser)]
#[command(name = "sgmcmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// KL and thermostat traces on the double-well potential.
    Doublewell(RunArgs),
    /// Bias-versus-stepsize slopes on a Gaussian.
    OrderCheck(RunArgs),
    /// Bayesian logistic regression on LIBSVM or synthetic data.
    Logreg(RunArgs),
    /// Feed-forward classifier learning curves.
    Mlp(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; omitted fields take the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run seed; wins over the config file and `--set seed=`.
    #[arg(long)]
    seed: Option<u64>,
    /// Override one config field, e.g. `--set model.noise_scale=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Print the resolved config and exit without running.
    #[arg(long)]
    dry_run: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            let first = message.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("{}", json!({ "status": "error", "kind": "usage", "message": first }));
            return ExitCode::from(2);
        }
    };
    let (experiment, args) = match cli.command {
        Command::Doublewell(a) => (Experiment::Doublewell, a),
        Command::OrderCheck(a) => (Experiment::OrderCheck, a),
        Command::Logreg(a) => (Experiment::Logreg, a),
        Command::Mlp(a) => (Experiment::Mlp, a),
    };
    match run(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "status": "error", "kind": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}

fn run(experiment: Experiment, args: RunArgs) -> Result<(), Error> {
    let mut overrides = args.overrides;
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    let config = match &args.config {
        Some(path) => ExperimentConfig::from_file(experiment, path, &overrides)?,
        None => ExperimentConfig::resolve(experiment, None, &overrides)?,
    };
    if args.dry_run {
        emit(&config.to_json());
        return Ok(());
    }
    let out = args.out.or_else(|| config.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let report = run_experiment(&config)?;
    let files: Vec<String> = report.write_to(&out)?.iter().map(|p| p.display().to_string()).collect();
    emit(&json!({ "status": "ok", "files": files, "summary": report.summary() }).to_string());
    Ok(())
}

/// Prints to stdout, ignoring a closed pipe.
fn emit(line: &str) {
    let _ = writeln!(io::stdout().lock(), "{line}");
}
