//! Library side of the `mmmt` command: argument definitions, configuration
//! resolution and the subcommands, kept out of `main` so tests can drive them.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

pub use args::{Cli, Command};
pub use commands::{
    cmd_export_costs, cmd_export_hardware, cmd_export_suite, cmd_run, cmd_score, cmd_sweep, cmd_validate,
    run_scenarios, simulate_scenario, RunOutput, SweepPoint, ValidationOutcome,
};
pub use config::{CostSource, RunConfig};

use std::process::ExitCode;

/// Executes a parsed command line. Errors are returned for `main` to report.
pub fn execute(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run(a) => {
            let cfg = RunConfig::from_args(&a)?;
            let out = cmd_run(&cfg)?;
            print!("{}", out.summary);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(a) => {
            let cfg = RunConfig::from_args(&a.run)?;
            let points = cmd_sweep(&cfg, &a.edge, &a.values)?;
            println!("{}", output::sweep_header());
            for p in &points {
                println!("{}", p.csv_row());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate(a) => {
            let outcome = cmd_validate(&a)?;
            print!("{outcome}");
            Ok(if outcome.is_ok() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Score(a) => {
            let (_, summary) = cmd_score(&a)?;
            print!("{summary}");
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportSuite(a) => {
            cmd_export_suite(&a)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportHardware(a) => {
            cmd_export_hardware(&a)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportCosts(a) => {
            cmd_export_costs(&a)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
