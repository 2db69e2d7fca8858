use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ctin_core::campaign::{run_campaign, run_campaign_traced, CampaignMode};
use ctin_core::repro::{reproduce, Figure};
use ctin_core::results::{render, Format};
use ctin_core::scenario::{Mode, Scenario, PRESET_NAMES};
use ctin_core::Error;

const EXIT_RUNTIME: u8 = 1;
const EXIT_VALIDATION: u8 = 3;

/// Interference nulling simulator.
///
/// SCENARIO arguments accept a TOML file or the name of a shipped preset
/// (fig7-cable, fig8-powercorr, fig9-delay, fig10-multiuser).
#[derive(Parser)]
#[command(name = "ctin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write results here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, short, default_value = "csv", value_parser = parse_format)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full protocol `repeats` times; repeat r uses seed + r.
    Run {
        scenario: String,
        /// tree, linear, multiuser or sequential; defaults to the scenario's mode.
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
        #[arg(long)]
        repeats: Option<usize>,
        /// Also write the event timeline of every run as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Run every point of the scenario's backhaul-delay by duty grid.
    Sweep {
        scenario: String,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Emit the table for one figure preset (fig7, fig8, fig9, fig10).
    Repro {
        #[arg(value_parser = parse_figure)]
        figure: Figure,
        #[command(flatten)]
        output: Output,
    },
    /// Check scenario files without running them.
    Validate {
        #[arg(required = true)]
        scenarios: Vec<String>,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_figure(s: &str) -> Result<Figure, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn load(arg: &str) -> Result<Scenario, Failure> {
    let path = Path::new(arg);
    if !path.exists() && PRESET_NAMES.contains(&arg) {
        return Ok(Scenario::preset(arg)?);
    }
    // an unreadable scenario is bad input, not a runtime failure
    Scenario::load(path).map_err(|e| match e {
        Error::Io(msg) => Failure::Validation(msg),
        e => e.into(),
    })
}

fn with_seed(s: Scenario, seed: Option<u64>) -> Scenario {
    match seed {
        Some(seed) => s.with_seed(seed),
        None => s,
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            scenario,
            mode,
            repeats,
            trace,
            output,
        } => {
            let s = with_seed(load(&scenario)?, output.seed);
            let mode = CampaignMode::from(mode.unwrap_or(s.mode));
            let repeats = repeats.unwrap_or(s.repeats);
            let records = match &trace {
                Some(path) => {
                    let runs = run_campaign_traced(&s, repeats, mode)?;
                    let timelines: Vec<_> = runs.iter().map(|(_, t)| t).collect();
                    let json = serde_json::to_string_pretty(&timelines).map_err(|e| Failure::Runtime(e.to_string()))?;
                    emit(&(json + "\n"), Some(path))?;
                    runs.into_iter().map(|(r, _)| r).collect()
                }
                None => run_campaign(&s, repeats, mode)?,
            };
            emit(&render(&records, output.format)?, output.out.as_deref())?;
            eprintln!("{} run(s), scenario {}", records.len(), &s.hash()[..12]);
        }
        Command::Sweep {
            scenario,
            repeats,
            output,
        } => {
            let s = with_seed(load(&scenario)?, output.seed);
            let records = run_campaign(&s, repeats, CampaignMode::Sweep)?;
            emit(&render(&records, output.format)?, output.out.as_deref())?;
            eprintln!("{} sweep point(s), scenario {}", records.len(), &s.hash()[..12]);
        }
        Command::Repro { figure, output } => {
            let table = reproduce(figure, output.seed)?;
            emit(&table.render(output.format)?, output.out.as_deref())?;
        }
        Command::Validate { scenarios } => {
            let mut failed = Vec::new();
            for arg in &scenarios {
                match load(arg) {
                    Ok(s) => println!("ok {arg} {}", s.hash()),
                    Err(Failure::Validation(msg) | Failure::Runtime(msg)) => {
                        println!("invalid {arg}: {msg}");
                        failed.push(arg.as_str());
                    }
                }
            }
            if !failed.is_empty() {
                return Err(Failure::Validation(format!("{} invalid scenario(s)", failed.len())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
