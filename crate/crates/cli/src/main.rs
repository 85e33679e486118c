//! `delaynet`: analyze, synthesize, simulate and sweep feedback loops closed
//! over a random-delay channel.
//!
//! Exit codes: 0 success, 2 configuration error, 3 unstable verdict,
//! 4 solver failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "delaynet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mean-square stability verdict, J and asymptotic variance as JSON.
    Analyze { config: PathBuf },
    /// Optimal controller for the configured plant and channel as JSON.
    Synthesize { config: PathBuf },
    /// Monte Carlo variance trace next to the analytic recursion, as CSV.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 200)]
        horizon: usize,
        /// Overrides the seed from the config (default 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Zero input and a random initial state instead of white noise.
        #[arg(long)]
        zero_input: bool,
        /// Write CSV here instead of standard output.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// J and asymptotic variance for the controller scaled by kappa, as CSV.
    Sweep {
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Also locate the kappa where J = 1 by bisection.
        #[arg(long)]
        bisect: bool,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Analyze { config } => commands::analyze(&config),
        Command::Synthesize { config } => commands::synthesize(&config),
        Command::Simulate {
            config,
            trials,
            horizon,
            seed,
            zero_input,
            output,
        } => commands::simulate(&config, trials, horizon, seed, zero_input, output.as_deref()),
        Command::Sweep {
            config,
            from,
            to,
            steps,
            bisect,
            tol,
            output,
        } => commands::sweep(&config, from, to, steps, bisect.then_some(tol), output.as_deref()),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("delaynet: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
