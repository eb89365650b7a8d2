//! `tritree calibrate | price | implied`.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommonArgs, ImpliedArgs, PriceArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "tritree", version, about = "Trinomial-tree calibration, pricing and implied surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate thresholds, probabilities, moments and CVaR extremes; writes calibration.json.
    Calibrate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Price calls over a (steps, strike) grid; writes prices.csv.
    Price {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: PriceArgs,
    },
    /// Invert an option chain into implied parameter surfaces.
    Implied {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        implied: ImpliedArgs,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Calibrate { common } => {
            let cfg = RunConfig::resolve(&common, &ImpliedArgs::default(), &PriceArgs::default())?;
            commands::calibrate(&cfg)
        }
        Command::Price { common, grid } => {
            let cfg = RunConfig::resolve(&common, &ImpliedArgs::default(), &grid)?;
            commands::price(&cfg)
        }
        Command::Implied { common, implied } => {
            let cfg = RunConfig::resolve(&common, &implied, &PriceArgs::default())?;
            commands::implied(&cfg)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
