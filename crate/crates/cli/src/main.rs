//! Command-line front end for tube scenarios.
//!
//! Exit codes: 0 success, 2 configuration error, 3 violated geometric
//! assumption, 4 solver or I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tubewave::harness::{self, Scenario};
use tubewave::Error;

#[derive(Parser)]
#[command(name = "tubewave", version, about = "Webster vs 3D wave runs on curved tubes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a config and check the tube assumptions.
    Validate { config: PathBuf },
    /// Run a scenario and write its artifacts.
    Run { config: PathBuf },
    /// Run a scenario on successively refined grids.
    Sweep {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Print the bound constants for a scenario.
    Constants {
        config: PathBuf,
        /// Skip the constants that need a discretization.
        #[arg(long)]
        exact_only: bool,
    },
    /// Print a built-in scenario as JSON.
    Preset { name: String },
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes")
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Validate { config } => {
            let scenario = Scenario::from_file(&config)?;
            let (_, report) = scenario.geometry()?;
            println!("{}", json(&report));
        }
        Command::Run { config } => {
            let scenario = Scenario::from_file(&config)?;
            let (dir, outcome) = harness::run_to_dir(&scenario, &harness::output_root())?;
            println!("{}", json(&outcome.summary));
            if let Some(cert) = &outcome.certificate {
                println!(
                    "lhs {:.6e}  bound {:.6e}  effectivity {:.3e}",
                    cert.lhs_total, cert.bounds.thm2, cert.effectivity.thm2
                );
            }
            eprintln!("wrote {}", dir.display());
        }
        Command::Sweep { config, levels } => {
            let scenario = Scenario::from_file(&config)?;
            let (dir, rows) = harness::sweep_to_dir(&scenario, levels, &harness::output_root())?;
            for r in &rows {
                println!(
                    "level {}  {}x{}x{}  dt {:.3e}  output error {:.3e} (order {:.2})  tracking {:.3e} (order {:.2})",
                    r.level,
                    r.grid.n_s,
                    r.grid.n_r,
                    r.grid.n_theta,
                    r.dt,
                    r.output_error,
                    r.output_order,
                    r.tracking_error,
                    r.tracking_order
                );
            }
            eprintln!("wrote {}", dir.display());
        }
        Command::Constants { config, exact_only } => {
            let scenario = Scenario::from_file(&config)?;
            let list = if exact_only {
                harness::exact_constants(&scenario)?
            } else {
                harness::constants(&scenario)?
            };
            println!("{}", json(&list));
        }
        Command::Preset { name } => match Scenario::preset(&name) {
            Some(s) => println!("{}", s.to_json()),
            None => {
                return Err(Error::config(
                    "preset",
                    format!("unknown preset `{name}`; known: {}", harness::PRESETS.join(", ")),
                ))
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
