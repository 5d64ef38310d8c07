use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nfield_cli::config::{self, Command, Scenario};
use nfield_cli::{run, ExitStatus};
use toml::Table;

/// Delayed neural field solver.
///
/// Exit status: 0 global solution or passing check, 1 error or failed
/// check, 2 maximally extended (blow-up), 3 stalled.
#[derive(Debug, Parser)]
#[command(name = "nfield", version)]
struct Cli {
    /// Command to run; same as --command.
    #[arg(value_enum)]
    command: Option<Command>,
    /// Oracle scenario: example21, piecewise_example21, example31, zero_field.
    scenario: Option<String>,
    /// Configuration file. A previous run's summary.toml also works.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "command", value_enum, value_name = "COMMAND")]
    command_flag: Option<Command>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sets a configuration key, e.g. solver.time_step=0.005 or model.rate[0].steepness=6.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Oracle delay parameter.
    #[arg(long)]
    lambda: Option<f64>,
    /// Oracle amplitude (example31).
    #[arg(long)]
    amplitude: Option<f64>,
    /// Oracle field value (zero_field).
    #[arg(long)]
    value: Option<f64>,
}

fn assemble(cli: &Cli) -> Result<Table, String> {
    let command = match (cli.command, cli.command_flag) {
        (Some(a), Some(b)) if a != b => {
            return Err(format!("command given twice: {} and {}", a.label(), b.label()));
        }
        (a, b) => a.or(b),
    };
    let from_file = cli.config.is_some();
    let mut table = match &cli.config {
        Some(path) => config::read_table(path).map_err(|e| e.to_string())?,
        None => Table::new(),
    };
    let mut sets: Vec<String> = Vec::new();
    if let Some(c) = command {
        sets.push(format!("command=\"{}\"", c.label()));
    }
    if let Some(s) = &cli.scenario {
        if Scenario::parse(s).is_none() {
            return Err(format!("unknown oracle scenario '{s}'"));
        }
        sets.push(format!("oracle.scenario=\"{s}\""));
    }
    if let Some(v) = cli.lambda {
        sets.push(format!("oracle.lambda={v:?}"));
    }
    if let Some(v) = cli.amplitude {
        sets.push(format!("oracle.amplitude={v:?}"));
    }
    if let Some(v) = cli.value {
        sets.push(format!("oracle.value={v:?}"));
    }
    if let Some(v) = cli.seed {
        sets.push(format!("seed={v}"));
    }
    if let Some(dir) = &cli.out {
        let quoted = toml::Value::String(dir.display().to_string());
        sets.push(format!("output.directory={quoted}"));
    }
    for s in sets.iter().chain(&cli.overrides) {
        config::apply_override(&mut table, s).map_err(|e| e.to_string())?;
    }

    let resolved = table.get("command").and_then(|v| v.as_str()).unwrap_or("solve");
    if !from_file && resolved != "oracle" {
        return Err(format!("{resolved} needs --config"));
    }
    // without a file the oracle picks the step its error budget needs
    if !from_file && !cli.overrides.iter().any(|o| o.trim_start().starts_with("solver.time_step")) {
        let oracle = table.get("oracle").and_then(|v| v.as_table());
        let scenario = oracle
            .and_then(|o| o.get("scenario"))
            .and_then(|v| v.as_str())
            .and_then(Scenario::parse)
            .unwrap_or_default();
        let lambda = oracle.and_then(|o| o.get("lambda")).and_then(|v| v.as_float()).unwrap_or(0.0);
        config::apply_override(&mut table, &format!("solver.time_step={:?}", scenario.default_time_step(lambda)))
            .map_err(|e| e.to_string())?;
    }
    Ok(table)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(ExitStatus::Failure.code())
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let config = match assemble(&cli).and_then(|t| config::from_table(t).map_err(|e| e.to_string())) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(ExitStatus::Failure.code());
        }
    };
    match run(&config) {
        Ok(artifacts) => {
            println!("{} -> {}", config.command.label(), artifacts.summary.display());
            ExitCode::from(artifacts.status.code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ExitStatus::Failure.code())
        }
    }
}
