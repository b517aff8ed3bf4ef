//! `superhedge`: price, hedge, backtest and verify super-replication
//! strategies from JSON market and payoff files.

mod commands;
mod report;
mod schema;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::warn;
use superhedge::EvalMode;

use commands::Inputs;
use report::{Format, Report};

const EXIT_INPUT: u8 = 1;
const EXIT_VERIFICATION: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "superhedge",
    version,
    about = "Upper price bounds and minimal super-hedges in multi-asset binomial markets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Upper price bound at one node.
    Price(RunArgs),
    /// Minimal-cost super-hedging portfolio at one node.
    Hedge(RunArgs),
    /// Run the hedge along a full path and report the residuals.
    Backtest(RunArgs),
    /// Compare the closed form against the vertex-enumeration oracle.
    Verify(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Price,
    Hedge,
    Backtest,
    Verify,
}

impl Command {
    fn split(self) -> (Kind, RunArgs) {
        match self {
            Command::Price(a) => (Kind::Price, a),
            Command::Hedge(a) => (Kind::Hedge, a),
            Command::Backtest(a) => (Kind::Backtest, a),
            Command::Verify(a) => (Kind::Verify, a),
        }
    }
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Market JSON file.
    #[arg(long, value_name = "FILE")]
    market: PathBuf,
    /// Payoff JSON file.
    #[arg(long, value_name = "FILE")]
    payoff: PathBuf,
    /// Time step k; must match the number of moves in --state.
    #[arg(long, value_name = "K")]
    step: Option<usize>,
    /// Comma-separated moves, one 0/1 character per asset in file order.
    #[arg(long, value_name = "STR")]
    state: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Compressed)]
    mode: Mode,
    /// Tolerance for `verify`.
    #[arg(long, value_name = "X", default_value_t = 1e-10)]
    tol: f64,
    /// Output file (standard output if omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Report format; `backtest` defaults to csv, the others to json.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Compressed,
    Naive,
}

/// How a run failed; decides the exit status.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Verification(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<superhedge::Error>() {
            Some(superhedge::Error::VerificationFailure(msg)) => Failure::Verification(msg.clone()),
            _ => Failure::Input(e),
        }
    }
}

impl From<superhedge::Error> for Failure {
    fn from(e: superhedge::Error) -> Self {
        match e {
            superhedge::Error::VerificationFailure(msg) => Failure::Verification(msg),
            other => Failure::Input(other.into()),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("SUPERHEDGE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| anyhow::anyhow!("SUPERHEDGE_THREADS must be a positive integer, got {raw:?}"))?;
    if !superhedge::parallel::configure_threads(threads) {
        warn!("SUPERHEDGE_THREADS ignored: no configurable thread pool");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let (kind, args) = cli.command.split();
    if !(args.tol.is_finite() && args.tol >= 0.0) {
        return Err(anyhow::anyhow!("--tol must be a non-negative number").into());
    }
    let market_file = schema::read_market(&args.market)?;
    let market = market_file.to_market()?;
    let payoff = schema::read_payoff(&args.payoff)?.to_payoff(&market)?;
    let inputs = Inputs {
        market,
        payoff,
        names: market_file.asset_names(),
        mode: match args.mode {
            Mode::Compressed => EvalMode::Compressed,
            Mode::Naive => EvalMode::Naive,
        },
    };
    let state = args.state.as_deref();
    let report = match kind {
        Kind::Price => commands::price(&inputs, &commands::resolve_node(&inputs.market, args.step, state)?)?,
        Kind::Hedge => commands::hedge(&inputs, &commands::resolve_node(&inputs.market, args.step, state)?)?,
        Kind::Backtest => commands::backtest(&inputs, &commands::resolve_node(&inputs.market, args.step, state)?)?,
        Kind::Verify => commands::verify(&inputs, args.step, state, args.tol)?,
    };
    let default_format = if kind == Kind::Backtest { Format::Csv } else { Format::Json };
    let verdict = match &report {
        Report::Verify(r) if !r.passed => {
            Some(format!("max |closed form - oracle| = {:e} exceeds tolerance {:e}", r.max_abs_dev, r.tol))
        }
        _ => None,
    };
    report.rounded().write(args.format.unwrap_or(default_format), args.out.as_deref())?;
    match verdict {
        Some(msg) => Err(Failure::Verification(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(EXIT_VERIFICATION)
        }
    }
}
