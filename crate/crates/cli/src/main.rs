use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tsfactor::BasisSpec;
use tsfactor_cli::commands::{cmd_fit, cmd_rate_check, cmd_select, cmd_simulate, FitArgs};
use tsfactor_cli::{CliError, CliResult, ExperimentConfig};

#[derive(Parser)]
#[command(name = "tsfactor", version, about = "Structured low-rank factor models for multivariate time series")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw M, X and the true factors.
    Simulate(Common),
    /// Fit a rank-k structured factorization to a CSV matrix.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// identity, periodic:<tau> or trig:<n_freq>
        #[arg(long)]
        basis: String,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        out: PathBuf,
        /// Signal matrix to report the risk against.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Penalized choice of period and rank.
    Select {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo check of the risk rate.
    RateCheck(Common),
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(c) => cmd_simulate(&ExperimentConfig::from_path(&c.config)?, &c.out, c.seed),
        Command::Fit {
            input,
            basis,
            rank,
            out,
            truth,
        } => {
            let basis: BasisSpec = basis
                .parse()
                .map_err(|e: tsfactor::Error| CliError::config("--basis", e.to_string()))?;
            cmd_fit(&FitArgs {
                input: &input,
                basis,
                rank,
                out: &out,
                truth: truth.as_deref(),
            })
            .map(drop)
        }
        Command::Select { input, config, out } => {
            cmd_select(&input, &ExperimentConfig::from_path(&config)?, &out)
        }
        Command::RateCheck(c) => {
            let report = cmd_rate_check(&ExperimentConfig::from_path(&c.config)?, &c.out, c.seed)?;
            println!("rate-check {}", if report.pass { "passed" } else { "failed" });
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
