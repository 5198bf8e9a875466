//! Command-line entry points, the study-file format and the bundled datasets.

mod commands;
mod data;
mod output;

use std::ffi::OsString;

use clap::{Parser, Subcommand};

pub use commands::{
    analyze, cmd_diagnose, cmd_run, cmd_simulate, converged, diagnose, exit_code, hyper_rhat, read_traces, simulate,
    write_analysis, Analysis, DiagnoseArgs, Diagnosis, RunArgs, SimulateArgs, TraceTable, EXIT_FAILURE,
    EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE, RHAT_THRESHOLD,
};
pub use data::{bundled, load_study_file, parse_study_file, Dataset, StudyFile};
pub use output::{sha256_hex, write_atomic, ChainRates, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "penmeta", version, about = "Bayesian meta-analysis of carrier penetrance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the meta-analysis to a study file or bundled dataset.
    Run(RunArgs),
    /// Run the simulation study.
    Simulate(SimulateArgs),
    /// Gelman-Rubin table for a directory of chain traces.
    Diagnose(DiagnoseArgs),
}

pub fn dispatch(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Diagnose(a) => cmd_diagnose(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}

/// Parse arguments (program name first) and run. Returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
