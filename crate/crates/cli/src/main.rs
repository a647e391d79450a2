use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use maxslope_cli::{configure_threads, run_command, Command, Overrides};

/// Minimizing movements, De Giorgi gaps and slope audits for gradient systems.
#[derive(Debug, Parser)]
#[command(name = "maxslope", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Built-in scenario name or path to a JSON scenario.
    #[arg(long)]
    scenario: Option<String>,
    /// Number of step sizes sampled from the scenario window.
    #[arg(long)]
    sigma_samples: Option<usize>,
    /// Single step size for `step` and `gap`.
    #[arg(long)]
    sigma: Option<f64>,
    /// Time step of the minimizing movement.
    #[arg(long)]
    tau: Option<f64>,
    /// Final time of the minimizing movement.
    #[arg(long)]
    horizon: Option<f64>,
    /// Report directory.
    #[arg(long, default_value = "maxslope-out")]
    out: PathBuf,
    /// Cross-check every step against the grid oracle.
    #[arg(long)]
    oracle: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    let overrides = Overrides {
        sigma: args.sigma,
        sigma_samples: args.sigma_samples,
        tau: args.tau,
        horizon: args.horizon,
        oracle: args.oracle,
    };
    match run_command(args.command, args.scenario.as_deref(), &overrides, &args.out) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("contract check failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
