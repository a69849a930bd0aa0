//! `carpool`: solve, verify and inspect autonomous carpooling markets.
//!
//! Exit codes: 0 when an equilibrium is found (or a check passes), 2 when
//! the market provably has no equilibrium, 1 on any error.

mod commands;
mod document;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use carpool_core::network::DEFAULT_MAX_ROUTES;
use carpool_core::rational::parse_rational;
use carpool_core::Rational;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "carpool",
    version,
    about = "Market equilibria for autonomous carpooling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Instance JSON file, or `-` for stdin.
    instance: PathBuf,
    /// Abort when the network has more origin-destination routes than this.
    #[arg(long, env = "CARPOOL_MAX_ROUTES", default_value_t = DEFAULT_MAX_ROUTES)]
    max_routes: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Find an equilibrium, or prove there is none.
    Solve {
        #[command(flatten)]
        input: Input,
        /// Use VCG payments and the matching tolls.
        #[arg(long)]
        vcg: bool,
        /// Auction price increment in scaled value units, e.g. `1/9`.
        #[arg(long, value_parser = parse_epsilon)]
        epsilon: Option<Rational>,
        /// Recorded in the result document; the solver itself is deterministic.
        #[arg(long)]
        seed: Option<u64>,
        /// Print decimals instead of fractions in the summary on stderr.
        #[arg(long)]
        float: bool,
        /// Run the auction even when the network is not series-parallel.
        #[arg(long)]
        force_auction: bool,
        /// Write the result here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check an outcome against every equilibrium condition.
    Verify {
        #[command(flatten)]
        input: Input,
        /// Result document (or any JSON with trips, payments and tolls).
        outcome: PathBuf,
    },
    /// Show routes, the series-parallel decomposition, greedy capacities and
    /// the gross substitutes check.
    Inspect {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        routes: bool,
        #[arg(long)]
        sp: bool,
        #[arg(long)]
        greedy: bool,
        #[arg(long)]
        gs_check: bool,
    },
    /// Brute-force the relaxation and the integer optimum.
    Oracle {
        #[command(flatten)]
        input: Input,
    },
    /// Print a random series-parallel instance.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_epsilon(text: &str) -> Result<Rational, String> {
    parse_rational(text).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve {
            input,
            vcg,
            epsilon,
            seed,
            float,
            force_auction,
            output,
        } => {
            let instance = commands::load_instance(&input.instance, input.max_routes)?;
            let flags = commands::SolveFlags {
                vcg,
                epsilon,
                seed,
                float,
                force_auction,
                output: output.as_deref(),
            };
            commands::solve(&instance, &flags)
        }
        Command::Verify { input, outcome } => {
            let instance = commands::load_instance(&input.instance, input.max_routes)?;
            commands::verify(&instance, &outcome)
        }
        Command::Inspect {
            input,
            routes,
            sp,
            greedy,
            gs_check,
        } => {
            let instance = commands::load_instance(&input.instance, input.max_routes)?;
            commands::inspect(
                &instance,
                &commands::InspectFlags {
                    routes,
                    sp,
                    greedy,
                    gs_check,
                },
            )
        }
        Command::Oracle { input } => {
            let instance = commands::load_instance(&input.instance, input.max_routes)?;
            commands::oracle(&instance)
        }
        Command::Generate { seed } => commands::generate(seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(commands::EXIT_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::EXIT_ERROR)
        }
    }
}
