//! `credit-game`: solve pricing games, sweep them, run the bargaining
//! protocol and simulate churn from the command line.
//!
//! Inputs are JSON files or the names of built-in examples. Every table is
//! written as CSV to `--output` or standard output.

mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use credit_game::churn::{run_scenario, Scenario, SimulationOutcome};
use credit_game::format::{self, num};
use credit_game::protocol::{run_bargaining_with, BargainConfig, ProtocolOptions, ProtocolTrace};
use credit_game::{presets, solve, GameInstance, ProtocolError, SolveError, SolverConfig};

use report::{oracle_check, CapacityPoint};

#[derive(Parser, Debug)]
#[command(name = "credit-game", version, about = "Credit-based bandwidth pricing game")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct OutputArgs {
    /// Write the table here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    Price,
    Capacity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Example {
    Example1,
    Example2,
    Example3,
    Example4,
    Example5,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one game and report price, allocation, utilities and region.
    Solve {
        /// Instance JSON file or built-in example name.
        input: String,
        /// Cross-check the price against the grid oracle.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Best responses over a price grid, or equilibria over a capacity grid.
    Sweep {
        input: String,
        #[arg(long, value_enum)]
        kind: SweepKind,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        /// Number of intervals; the grid has `steps + 1` points.
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the bargaining protocol and emit its trace.
    Bargain {
        input: String,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 0.001)]
        epsilon: f64,
        /// Delivery-order seed for the message transport.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Opening price; defaults to the highest rejection threshold.
        #[arg(long)]
        initial_price: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        max_rounds: usize,
        #[arg(long, default_value_t = 6)]
        max_refinements: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run a churn scenario; emits the epoch timeline.
    Simulate {
        /// Scenario JSON file, `example4` or `example5`.
        input: String,
        /// Also write the credit transfers here.
        #[arg(long)]
        ledger: Option<PathBuf>,
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Reproduce a built-in example.
    Example {
        #[arg(value_enum)]
        name: Example,
        #[arg(long)]
        oracle: bool,
        /// Print the example's input JSON instead of running it.
        #[arg(long)]
        dump_input: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("reading {path}: {source}")]
    Read { path: String, source: io::Error },
    #[error("parsing {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Model(#[from] credit_game::ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Oracle(#[from] credit_game::OracleError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Churn(#[from] credit_game::ChurnError),
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
    #[error("writing output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn is_broken_pipe(&self) -> bool {
        let io = match self {
            Self::Io(e) => Some(e),
            Self::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(e) => Some(e),
                _ => None,
            },
            _ => None,
        };
        io.is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
    }

    fn exit_code(&self) -> u8 {
        match self {
            Self::Solve(SolveError::Residual { .. }) => 2,
            Self::Protocol(
                ProtocolError::MaxRounds { .. }
                | ProtocolError::Overshoot { .. }
                | ProtocolError::CapacityUnreachable { .. },
            ) => 2,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_broken_pipe() => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve { input, oracle, out } => cmd_solve(&load_game(&input)?, oracle, &out),
        Command::Sweep {
            input,
            kind,
            from,
            to,
            steps,
            oracle,
            out,
        } => {
            let game = load_game(&input)?;
            match kind {
                SweepKind::Price => cmd_price_sweep(&game, from, to, steps, &out),
                SweepKind::Capacity => cmd_capacity_sweep(&game, from, to, steps, oracle, &out),
            }
        }
        Command::Bargain {
            input,
            step,
            epsilon,
            seed,
            initial_price,
            max_rounds,
            max_refinements,
            out,
        } => {
            let cfg = BargainConfig {
                initial_price,
                step,
                epsilon,
                max_rounds,
                max_refinements,
            };
            cmd_bargain(&load_game(&input)?, &cfg, seed, &out)
        }
        Command::Simulate {
            input,
            ledger,
            oracle,
            out,
        } => cmd_simulate(&load_scenario(&input)?, ledger.as_deref(), oracle, &out),
        Command::Example {
            name,
            oracle,
            dump_input,
            out,
        } => cmd_example(name, oracle, dump_input, &out),
    }
}

fn open_output(out: &OutputArgs) -> Result<Box<dyn Write>, CliError> {
    let Format::Csv = out.format;
    Ok(match &out.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_string(),
        source,
    })
}

fn builtin(name: &str) -> Option<Example> {
    Example::from_str(name, true).ok()
}

fn example_game(example: Example) -> GameInstance {
    match example {
        Example::Example1 | Example::Example3 => presets::example1_game(presets::EXAMPLE12_CAPACITY),
        Example::Example2 => presets::example2_game(presets::EXAMPLE12_CAPACITY),
        Example::Example4 | Example::Example5 => presets::example4_game(),
    }
}

fn load_game(input: &str) -> Result<GameInstance, CliError> {
    match builtin(input) {
        Some(example) => Ok(example_game(example)),
        None => read_json(input),
    }
}

fn load_scenario(input: &str) -> Result<Scenario, CliError> {
    match builtin(input) {
        Some(Example::Example4) => Ok(presets::example4_scenario()),
        Some(Example::Example5) => Ok(presets::example5_scenario()),
        Some(other) => Err(CliError::Usage(format!(
            "{other:?} is not a scenario; use example4 or example5"
        ))),
        None => read_json(input),
    }
}

fn cmd_solve(game: &GameInstance, oracle: bool, out: &OutputArgs) -> Result<(), CliError> {
    let eq = solve(game, &SolverConfig::default())?;
    let check = if oracle { Some(oracle_check(game, &eq)?) } else { None };
    report::write_solve(open_output(out)?, game, &eq, check)?;
    Ok(())
}

/// `steps + 1` evenly spaced points from `from` to `to`.
fn grid(from: f64, to: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if !(from.is_finite() && to.is_finite() && from < to) {
        return Err(CliError::Usage(format!("sweep range [{from}, {to}] is empty or inverted")));
    }
    if steps == 0 {
        return Err(CliError::Usage("sweep needs at least one step".into()));
    }
    Ok((0..=steps)
        .map(|k| if k == steps { to } else { from + (to - from) * k as f64 / steps as f64 })
        .collect())
}

fn cmd_price_sweep(
    game: &GameInstance,
    from: Option<f64>,
    to: Option<f64>,
    steps: usize,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let breakpoints = credit_game::DemandCurve::build(game).breakpoints().to_vec();
    let (lo, hi) = match (breakpoints.first(), breakpoints.last()) {
        (Some(&lo), Some(&hi)) => (lo / 2.0, hi * 1.1),
        _ => (0.5, 1.1),
    };
    let (from, to) = (from.unwrap_or(lo), to.unwrap_or(hi));
    if !(from > 0.0) {
        return Err(CliError::Usage(format!("prices must be positive, got {from}")));
    }
    let prices = grid(from, to, steps)?;
    report::write_price_sweep(open_output(out)?, game, &prices)?;
    Ok(())
}

fn capacity_points(
    game: &GameInstance,
    capacities: &[f64],
    oracle: bool,
) -> Result<Vec<CapacityPoint>, CliError> {
    capacities
        .iter()
        .map(|&capacity| {
            if capacity <= 0.0 {
                return Ok(CapacityPoint {
                    capacity,
                    solved: None,
                });
            }
            let g = game.with_uploader_capacity(capacity)?;
            let eq = solve(&g, &SolverConfig::default())?;
            let check = if oracle { Some(oracle_check(&g, &eq)?) } else { None };
            Ok(CapacityPoint {
                capacity,
                solved: Some((g, eq, check)),
            })
        })
        .collect()
}

fn cmd_capacity_sweep(
    game: &GameInstance,
    from: Option<f64>,
    to: Option<f64>,
    steps: usize,
    oracle: bool,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let (from, to) = (from.unwrap_or(0.0), to.unwrap_or(game.total_capacity()));
    if from < 0.0 {
        return Err(CliError::Usage(format!("capacities must be >= 0, got {from}")));
    }
    let points = capacity_points(game, &grid(from, to, steps)?, oracle)?;
    report::write_capacity_sweep(open_output(out)?, game, &points, oracle)?;
    Ok(())
}

fn cmd_bargain(
    game: &GameInstance,
    cfg: &BargainConfig,
    seed: u64,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let opts = ProtocolOptions {
        seed,
        misreport: None,
    };
    let emit = |trace: &ProtocolTrace| -> Result<(), CliError> {
        for line in trace.diagnostics() {
            eprintln!("refinement: {line}");
        }
        format::write_trace_csv(open_output(out)?, trace)?;
        Ok(())
    };
    match run_bargaining_with(game, cfg, &opts) {
        Ok((_, trace)) => emit(&trace),
        Err(e) => {
            if let Some(trace) = e.trace() {
                emit(trace)?;
            }
            Err(e.into())
        }
    }
}

fn cmd_simulate(
    scenario: &Scenario,
    ledger: Option<&Path>,
    oracle: bool,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let outcome = run_scenario(scenario)?;
    write_timeline(&outcome, oracle, out)?;
    if let Some(path) = ledger {
        format::write_ledger_csv(BufWriter::new(File::create(path)?), &outcome.ledger)?;
    }
    Ok(())
}

fn write_timeline(outcome: &SimulationOutcome, oracle: bool, out: &OutputArgs) -> Result<(), CliError> {
    let w = open_output(out)?;
    if !oracle {
        format::write_timeline_csv(w, &outcome.timeline)?;
        return Ok(());
    }
    let mut checks = Vec::new();
    for epoch in &outcome.timeline.epochs {
        checks.push(match (&epoch.game, &epoch.equilibrium) {
            (Some(g), Some(eq)) => Some(oracle_check(g, eq)?),
            _ => None,
        });
    }
    let mut checks = checks.into_iter();
    format::write_timeline_csv_with(w, &outcome.timeline, &["oracle_price", "oracle_agree"], |_| {
        match checks.next().flatten() {
            Some(c) => vec![num(c.price), c.agree.to_string()],
            None => vec![String::new(), String::new()],
        }
    })?;
    Ok(())
}

fn cmd_example(example: Example, oracle: bool, dump_input: bool, out: &OutputArgs) -> Result<(), CliError> {
    let scenario = match example {
        Example::Example4 => Some(presets::example4_scenario()),
        Example::Example5 => Some(presets::example5_scenario()),
        _ => None,
    };
    if dump_input {
        let mut w = open_output(out)?;
        let json = match &scenario {
            Some(s) => serde_json::to_string_pretty(s),
            None => serde_json::to_string_pretty(&example_game(example)),
        }
        .map_err(io::Error::other)?;
        writeln!(w, "{json}")?;
        return Ok(());
    }
    match example {
        Example::Example1 | Example::Example2 => {
            cmd_price_sweep(&example_game(example), None, None, 100, out)
        }
        Example::Example3 => {
            let (from, to) = presets::EXAMPLE3_RANGE;
            cmd_capacity_sweep(
                &example_game(example),
                Some(from),
                Some(to),
                presets::EXAMPLE3_STEPS,
                oracle,
                out,
            )
        }
        Example::Example4 | Example::Example5 => {
            let outcome = run_scenario(scenario.as_ref().expect("scenario example"))?;
            write_timeline(&outcome, oracle, out)
        }
    }
}
