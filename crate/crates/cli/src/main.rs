//! `sftp-sim`: run MANET routing scenarios from the command line.
//!
//! Exit codes: 0 success, 1 invalid input, 2 the run completed but the
//! destination could not be reached, 3 I/O failure.

use std::fs;
use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sftp_core::render;
use sftp_core::sim::{discovery_config, prepare_network};
use sftp_core::trace::flood_to_dot;
use sftp_core::{discover_route_with, run_scenario, RoutingError, Scenario, ScenarioError};

#[derive(Parser)]
#[command(
    name = "sftp-sim",
    version,
    about = "Fault-tolerant, blackhole-aware MANET routing simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the coverage matrix after thresholding.
    Threshold(CommonArgs),
    /// Print the node connection table.
    Table(CommonArgs),
    /// Run route discovery only and print the primary and recorded routes.
    Route(CommonArgs),
    /// Run the full scenario and emit a report.
    Run(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the flooding trace as Graphviz DOT.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Output format. Defaults to json for `run`, text otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

enum Failure {
    Input(String),
    Undeliverable,
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Undeliverable => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Input(msg) | Failure::Io(msg) => eprintln!("error: {msg}"),
                Failure::Undeliverable => eprintln!("error: destination unreachable"),
            }
            ExitCode::from(failure.code())
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Threshold(args) => threshold(&args),
        Command::Table(args) => table(&args),
        Command::Route(args) => route(&args),
        Command::Run(args) => run(&args),
    }
}

fn load(args: &CommonArgs) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(&args.scenario)
        .map_err(|e| Failure::Io(format!("{}: {e}", args.scenario.display())))?;
    let mut scenario = Scenario::from_json(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.scenario.display())))?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
        }
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn to_json(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    text
}

/// Bold headings on an interactive terminal unless SFTP_SIM_NO_COLOR is set.
fn styled(args: &CommonArgs, heading: &str) -> String {
    let color = args.out.is_none()
        && std::env::var_os("SFTP_SIM_NO_COLOR").is_none()
        && io::stdout().is_terminal();
    if color {
        format!("\x1b[1m{heading}\x1b[0m")
    } else {
        heading.to_string()
    }
}

fn threshold(args: &CommonArgs) -> Result<(), Failure> {
    let scenario = load(args)?;
    let net = prepare_network(&scenario)?;
    let adj = net.coverage.adjacency();
    let text = match args.format.unwrap_or(Format::Text) {
        Format::Text => render::render_matrix(adj),
        Format::Json => to_json(&json!({
            "labels": adj.labels(),
            "threshold": net.coverage.threshold(),
            "matrix": adj.rows(),
        })),
    };
    emit(args.out.as_deref(), &text)
}

fn table(args: &CommonArgs) -> Result<(), Failure> {
    let scenario = load(args)?;
    let net = prepare_network(&scenario)?;
    let text = match args.format.unwrap_or(Format::Text) {
        Format::Text => render::render_connection_table(&net.table, &scenario.nodes),
        Format::Json => to_json(&json!({ "connection_table": net.table })),
    };
    emit(args.out.as_deref(), &text)
}

fn route(args: &CommonArgs) -> Result<(), Failure> {
    let scenario = load(args)?;
    let net = prepare_network(&scenario)?;
    let discovery = match discover_route_with(
        &net.graph,
        &scenario.source,
        &scenario.dest,
        &discovery_config(&scenario),
    ) {
        Ok(d) => d,
        Err(RoutingError::NoRoute { .. }) => return Err(Failure::Undeliverable),
        Err(e) => return Err(Failure::Input(e.to_string())),
    };
    if let Some(path) = &args.trace {
        write_trace(path, &flood_to_dot(&discovery.trace, &scenario.nodes))?;
    }
    let text = match args.format.unwrap_or(Format::Text) {
        Format::Text => {
            let body = render::render_routes(&discovery.primary, &discovery.recorded);
            body.replacen("primary:", &styled(args, "primary:"), 1)
        }
        Format::Json => to_json(&json!({
            "primary": discovery.primary,
            "recorded": discovery.recorded,
        })),
    };
    emit(args.out.as_deref(), &text)
}

fn run(args: &CommonArgs) -> Result<(), Failure> {
    let scenario = load(args)?;
    let report = run_scenario(&scenario)?;
    if let (Some(path), Some(trace)) = (&args.trace, &report.flooding_trace) {
        write_trace(path, &flood_to_dot(trace, &scenario.nodes))?;
    }
    let text = match args.format.unwrap_or(Format::Json) {
        Format::Json => report.to_json(),
        Format::Text => {
            let body = render::render_summary(&report);
            body.replacen("outcome:", &styled(args, "outcome:"), 1)
        }
    };
    emit(args.out.as_deref(), &text)?;
    if report.outcome.is_undeliverable() {
        return Err(Failure::Undeliverable);
    }
    Ok(())
}

fn write_trace(path: &Path, dot: &str) -> Result<(), Failure> {
    fs::write(path, dot).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}
