//! `twosphere`: drag tables, approach simulations, parameter sweeps and the
//! validation suite.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error,
//! 3 numerical failure.

mod commands;
mod config;
mod error;
mod output;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use twosphere::validation::Fault;

use config::{Overrides, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "twosphere",
    version,
    about = "Two-sphere Stokes drag and swimmer approach dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration; defaults apply to absent keys
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (default: `output.dir` from the config, else `.`)
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    /// Integrator relative tolerance; the absolute tolerance is 1e-3 of it
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// Minimum number of retained series modes
    #[arg(long, value_name = "N")]
    nmax: Option<u64>,
    /// Sweep: exit 0 when at least one row succeeded
    #[arg(long)]
    allow_partial: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate kappa_pass and kappa_prop over a range of gaps
    Drag(Common),
    /// Integrate one approach and write the trajectory and a run report
    Simulate(Common),
    /// Evaluate a grid of scenarios in parallel
    Sweep(Common),
    /// Run the invariant suite
    Validate {
        #[command(flatten)]
        common: Common,
        /// Run only the named check (repeatable)
        #[arg(long = "check", value_name = "NAME")]
        checks: Vec<String>,
        /// Corrupt one kernel to confirm the suite notices (test mode)
        #[arg(long, value_enum, hide = true)]
        fault: Option<FaultKind>,
        #[arg(long, default_value_t = 1.01, hide = true)]
        fault_scale: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultKind {
    Gegenbauer,
    Gm,
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let source = match &common.config {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
        None => String::new(),
    };
    let overrides = Overrides {
        tol: common.tol,
        n_max: common.nmax,
        out: common.out.clone(),
    };
    Ok(RunConfig::parse(&source, &overrides)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Drag(common) => {
            let config = load(&common)?;
            println!("{}", commands::drag(&config)?);
        }
        Command::Simulate(common) => {
            let config = load(&common)?;
            print!("{}", commands::simulate_run(&config)?);
        }
        Command::Sweep(common) => {
            let config = load(&common)?;
            let s = commands::sweep(&config, common.allow_partial)?;
            println!(
                "wrote {} rows ({} failed) to {}",
                s.rows,
                s.failed,
                s.path.display()
            );
        }
        Command::Validate {
            common,
            checks,
            fault,
            fault_scale,
        } => {
            let config = load(&common)?;
            let fault = match fault {
                None => Fault::None,
                Some(FaultKind::Gegenbauer) => Fault::GegenbauerScale(fault_scale),
                Some(FaultKind::Gm) => Fault::GmScale(fault_scale),
            };
            let (text, failed) = commands::validate(&config, fault, &checks)?;
            print!("{text}");
            if failed > 0 {
                return Err(CliError::Validation(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("twosphere: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
