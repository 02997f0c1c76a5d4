//! `certify`: command-line driver for the reconnection certification
//! pipeline. Exit codes: 0 success, 1 no certified reconnection time within
//! the horizon, 2 usage or input error, 3 environment error (output not
//! writable).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "certify",
    version,
    about = "Certify the earliest safe reconnection time of a large load"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pre-fault, no-load and load-connected operating points.
    Equilibria(Shared),
    /// Critical energies, safe-set grid and earliest reconnection time.
    Certify {
        #[command(flatten)]
        shared: Shared,
        /// Search horizon for the reconnection time (s).
        #[arg(long, default_value_t = reconnect_core::safe_set::DEFAULT_HORIZON)]
        horizon: f64,
    },
    /// Wait until a given instant, reconnect, and report flapping.
    Simulate {
        #[command(flatten)]
        shared: Shared,
        /// Reconnection instant (s).
        #[arg(long)]
        reconnect_at: f64,
        /// End of the simulation (s); defaults to 5 s after reconnection.
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Brute-force classification of reconnection instants.
    Sweep {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 1.0)]
        to: f64,
        #[arg(long, default_value_t = 0.001)]
        step: f64,
        /// Length of each post-reconnection run (s).
        #[arg(long, default_value_t = 5.0)]
        post_duration: f64,
        #[arg(long, default_value_t = reconnect_core::safe_set::DEFAULT_HORIZON)]
        horizon: f64,
    },
}

#[derive(Args, Debug, Clone)]
struct Shared {
    /// Scenario JSON; the bundled reference scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integration step (s).
    #[arg(long, default_value_t = reconnect_core::dynamics::DEFAULT_DT)]
    dt: f64,
    /// Safe-set grid resolution per axis.
    #[arg(long, default_value_t = reconnect_core::safe_set::DEFAULT_GRID)]
    grid: usize,
    /// Layout of the summary printed to stdout.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Points per ω-face scan for the pre critical energy.
    #[arg(long, default_value_t = 2000)]
    face_samples: usize,
    /// Points per boundary edge for the post critical energy.
    #[arg(long, default_value_t = 4000)]
    boundary_samples: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.kind.code())
        }
    }
}
