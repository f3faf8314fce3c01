use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use gift_economy::engine;
use gift_economy_cli::check::run_fixtures;
use gift_economy_cli::{emit_report, emit_trace, parse_scenario, ReportError, ScenarioFile};

#[derive(Parser)]
#[command(name = "giftsim", version, about = "Run gift-economy scenarios and analyse their traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its trace as CSV.
    Run {
        scenario: PathBuf,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Run a scenario and write the requested analyses as JSON.
    Analyze {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Run the bundled fixture scenarios and report pass/fail for each.
    Check,
    /// Print the canonical form of a scenario file.
    Echo { scenario: PathBuf },
}

fn load(path: &Path, max_steps: Option<usize>) -> anyhow::Result<ScenarioFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut file = parse_scenario(&text).with_context(|| format!("in {}", path.display()))?;
    if let Some(steps) = max_steps {
        file.scenario = file.scenario.with_max_steps(steps)?;
    }
    Ok(file)
}

fn write(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Run { scenario, out, max_steps } => {
            let file = load(&scenario, max_steps)?;
            let trace = engine::run(&file.scenario)?;
            write(out.as_deref(), &emit_trace(&trace))?;
        }
        Command::Analyze { scenario, out, max_steps } => {
            let file = load(&scenario, max_steps)?;
            let trace = engine::run(&file.scenario)?;
            write(out.as_deref(), &emit_report(&file, &trace)?)?;
        }
        Command::Check => {
            let outcomes = run_fixtures();
            for o in &outcomes {
                let verdict = if o.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {}: {}", o.name, o.detail);
            }
            return Ok(outcomes.iter().all(|o| o.passed));
        }
        Command::Echo { scenario } => {
            let file = load(&scenario, None)?;
            print!("{}", file.to_config_text());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ReportError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
