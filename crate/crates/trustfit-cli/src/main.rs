//! `trustfit` command-line tool.
//!
//! Three subcommands on top of the `trustfit` library: `fit` runs one fit on
//! a CSV table or binary image and emits a versioned JSON report, `generate`
//! writes a reproducible corpus of noisy Gaussian images, and `benchmark`
//! times truth-adjacent fits over such a corpus into plot-ready CSV.
//!
//! Exit codes from `fit`: 0 when converged, 2 on the iteration cap, 3 on
//! numeric failure, 1 for anything malformed on the way in.

mod cli;
mod commands;
mod io;
mod models;
mod report;

use std::process::ExitCode;

use clap::Parser;

use crate::cli::{Cli, Command};

fn main() -> ExitCode {
    let parsed = Cli::parse();
    let outcome = match &parsed.command {
        Command::Fit(args) => commands::cmd_fit(args),
        Command::Generate(args) => commands::cmd_generate(args),
        Command::Benchmark(args) => commands::cmd_benchmark(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
