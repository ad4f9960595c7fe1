use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wco::cli::commands::{run, Command, Flags, Format};
use wco::cli::generate::{generate_scenario, Kind};
use wco::cli::scenario::{load_scenario, save_scenario};
use wco::subnormality::solver::SolveMode;

#[derive(Debug, Parser)]
#[command(name = "wco", version, about = "Weighted composition operators on finite atomic measure spaces")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Scenario JSON file.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Candidate locations for solve-cc / certify, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    grid: Option<Vec<f64>>,

    /// Highest moment / power checked.
    #[arg(long, global = true)]
    nmax: Option<u32>,

    /// Absolute tolerance for residual checks.
    #[arg(long, global = true, env = "WCO_TOL")]
    tol: Option<f64>,

    /// Seed for generators and selftest.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// h, iterated derivatives, kernel and polar decomposition.
    Analyze,
    /// Quasinormal / hyponormal / normal and the injectivity conditions.
    Classify,
    /// Check the scenario's family against CC, CC-1 and the equivalence battery.
    CheckCc,
    /// Build the product-space extension induced by the scenario's family.
    Extend,
    /// Search for a CC family on a grid.
    SolveCc {
        /// `certifying` also pins P(x,.) to delta_0 where h = 0 and w != 0.
        #[arg(long, value_enum, default_value = "certifying")]
        mode: ModeArg,
    },
    /// Full subnormality certificate.
    Certify,
    /// Property suites on generated instances.
    Selftest {
        /// Number of generated instances.
        #[arg(long, default_value_t = 600)]
        count: usize,
    },
    /// Write a generated scenario.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 4)]
        size: usize,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Certifying,
    PlainCc,
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut flags = Flags {
        grid: cli.grid.clone(),
        nmax: cli.nmax,
        tol: cli.tol,
        seed: cli.seed,
        ..Flags::default()
    };
    let command = match &cli.command {
        Cmd::Analyze => Command::Analyze,
        Cmd::Classify => Command::Classify,
        Cmd::CheckCc => Command::CheckCc,
        Cmd::Extend => Command::Extend,
        Cmd::SolveCc { mode } => {
            flags.mode = match mode {
                ModeArg::Certifying => SolveMode::Certifying,
                ModeArg::PlainCc => SolveMode::PlainCc,
            };
            Command::SolveCc
        }
        Cmd::Certify => Command::Certify,
        Cmd::Selftest { count } => {
            flags.count = Some(*count);
            Command::Selftest
        }
        Cmd::Generate { kind, size, out } => {
            let scenario = match generate_scenario(*kind, *size, cli.seed.unwrap_or(0)) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            return match out {
                Some(path) => match save_scenario(&scenario, path) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        ExitCode::from(2)
                    }
                },
                None => {
                    emit(&format!("{}\n", scenario.to_json()));
                    ExitCode::SUCCESS
                }
            };
        }
    };

    let scenario = match (&cli.scenario, command.needs_scenario()) {
        (Some(path), _) => match load_scenario(path) {
            Ok(s) => Some(s),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        (None, true) => {
            eprintln!("error: `{}` needs --scenario", command.name());
            return ExitCode::from(2);
        }
        (None, false) => None,
    };

    match run(command, scenario.as_ref(), &flags) {
        Ok(report) => {
            match cli.format {
                Format::Json => emit(&format!("{}\n", report.to_json())),
                Format::Text => emit(&report.to_text()),
            }
            ExitCode::from(report.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
