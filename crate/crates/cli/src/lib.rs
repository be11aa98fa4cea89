//! Command-line front end for the information-based trading simulator.

pub mod commands;
pub mod config;

use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{BoundArgs, RunOptions};

#[derive(Debug, Parser)]
#[command(
    name = "infotrade",
    version,
    about = "Information-based pricing and trading simulator"
)]
pub struct Cli {
    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. Outputs do not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a batch of sessions; writes sessions.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Profitability over a grid of spread factors and flow rates; writes surface.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Spread factors as start:stop:count.
        #[arg(long)]
        phi: String,
        /// B's flow rates as start:stop:count.
        #[arg(long)]
        sigma: String,
        /// sigma_A / sigma_B; defaults to the config's ratio.
        #[arg(long)]
        sigma_ratio: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form lower bound for a fixed-time binary bond trade.
    Bound {
        #[arg(long)]
        phi: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        t_maturity: f64,
        #[arg(long, default_value_t = 0.0)]
        r: f64,
        /// Also estimate the bound by Monte Carlo with this many draws.
        #[arg(long)]
        check_mc: Option<u64>,
    },
    /// Margins of all buy/sell sequences; writes lemma3.csv.
    Lemma3 {
        #[arg(long)]
        max_len: usize,
        #[arg(long)]
        phi: f64,
        #[arg(long, default_value_t = 1.0)]
        psi: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trade-time histogram; writes hist.csv.
    Hist {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn run(cli: Cli, log: &mut dyn Write) -> Result<()> {
    let opts = RunOptions {
        seed: cli.seed,
        workers: cli.workers,
    };
    match cli.command {
        Command::Simulate { config, out } => {
            commands::simulate(&config, &out, &opts, log)?;
        }
        Command::Sweep {
            config,
            phi,
            sigma,
            sigma_ratio,
            out,
        } => {
            commands::sweep(&config, &phi, &sigma, sigma_ratio, &out, &opts, log)?;
        }
        Command::Bound {
            phi,
            p,
            sigma,
            t,
            t_maturity,
            r,
            check_mc,
        } => {
            let args = BoundArgs {
                phi,
                p,
                sigma,
                t,
                t_maturity,
                r,
                check_mc,
                seed: cli.seed.unwrap_or(0),
            };
            commands::bound(&args, log)?;
        }
        Command::Lemma3 {
            max_len,
            phi,
            psi,
            out,
        } => {
            commands::lemma3(max_len, phi, psi, &out, log)?;
        }
        Command::Hist { config, bins, out } => {
            commands::hist(&config, bins, &out, &opts, log)?;
        }
    }
    Ok(())
}
