use clap::{Parser, Subcommand};
use congruence_cli::commands::{
    run_calibrate, run_cce, run_synth, CalibrateArgs, CceArgs, SynthArgs,
};
use congruence_cli::experiments::{run_experiment, ExperimentName, ExperimentParams};
use std::path::PathBuf;

/// Conditional congruence (CCE/MCMD) and calibration metrics for
/// probabilistic regression models.
#[derive(Parser)]
#[command(name = "congruence", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset, plus model parameter tables where applicable
    Synth(SynthArgs),
    /// Evaluate per-query CCE of model predictions against a ground-truth dataset
    Cce(CceArgs),
    /// Compute a PIT/ECE/NLL calibration report and reliability curve
    Calibrate(CalibrateArgs),
    /// Run a named experiment, emitting CSV curve data and a JSON summary
    Experiment(ExperimentArgs),
}

#[derive(clap::Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    name: ExperimentName,
    /// Output directory for CSVs and summary.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the experiment's default dataset size.
    #[arg(long)]
    n: Option<usize>,
    /// Override the comparison-set size where applicable.
    #[arg(long)]
    m: Option<usize>,
    /// Override the trial count where applicable.
    #[arg(long)]
    trials: Option<usize>,
    /// Conditional slope for fig1-marginal.
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,
    /// Negative-binomial over-dispersion for four-family.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Err(code) = configure_threads() {
        return code;
    }
    let result = match cli.command {
        Command::Synth(args) => run_synth(&args),
        Command::Cce(args) => run_cce(&args),
        Command::Calibrate(args) => run_calibrate(&args),
        Command::Experiment(args) => {
            let params = ExperimentParams {
                seed: args.seed,
                out: args.out,
                n: args.n,
                m: args.m,
                trials: args.trials,
                alpha: args.alpha,
                epsilon: args.epsilon,
            };
            run_experiment(args.name, &params).map(|_| ())
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

/// CONGRUENCE_THREADS caps internal parallelism; 0 or unset means automatic.
fn configure_threads() -> Result<(), i32> {
    match std::env::var("CONGRUENCE_THREADS") {
        Err(_) => Ok(()),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(()),
            Ok(k) => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
                Ok(())
            }
            Err(_) => {
                eprintln!("error: CONGRUENCE_THREADS must be a nonnegative integer, got {v:?}");
                Err(1)
            }
        },
    }
}
