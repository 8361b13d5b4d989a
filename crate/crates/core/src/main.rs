use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fedexprox::harness::{self, Comparison, ExperimentConfig, PresetOverrides};
use fedexprox::Error;

/// Federated proximal optimization experiments.
#[derive(Parser)]
#[command(name = "fedexprox", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a named preset.
    Run(RunArgs),
    /// Iterations-to-threshold ratio of two trace CSVs (first over second).
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        threshold: f64,
    },
    /// Print the rate constants of every variant in a config without running it.
    Rates {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// One of fig1, example1, small, rpm.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, requires = "preset")]
    n: Option<usize>,
    #[arg(long, requires = "preset")]
    theta: Option<f64>,
    #[arg(long, requires = "preset")]
    gamma: Option<f64>,
    #[arg(long, requires = "preset")]
    iterations: Option<usize>,
    #[arg(long, requires = "preset")]
    seed: Option<u64>,
    #[arg(long, requires = "preset")]
    output_dir: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => {
            let cfg = match (&args.config, &args.preset) {
                (Some(path), _) => ExperimentConfig::load(path)?,
                (None, Some(name)) => harness::preset(
                    name,
                    &PresetOverrides {
                        n: args.n,
                        theta: args.theta,
                        gamma: args.gamma,
                        iterations: args.iterations,
                        seed: args.seed,
                        output_dir: args.output_dir.clone(),
                    },
                )?,
                (None, None) => unreachable!("clap requires one of --config and --preset"),
            };
            let out = harness::run_experiment(&cfg)?;
            println!("{}", serde_json::to_string(&out).map_err(Error::from)?);
        }
        Command::Compare { a, b, threshold } => {
            let c = harness::compare_traces(&a, &b, threshold)?;
            println!("{}", serde_json::to_string(&c).map_err(Error::from)?);
            if let Comparison::Incomparable { .. } = c {
                eprintln!("threshold {threshold} not reached by both traces");
            }
        }
        Command::Rates { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let rates = harness::experiment_rates(&cfg)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&rates).map_err(Error::from)?
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", harness::error_line(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
